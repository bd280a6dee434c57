"""Monte-Carlo generation of labeled rule-error samples.

Each scenario draws a random Gaussian-sum prior, builds the prior PMD
and the predictive grid, and records per-target features, the exact
predictive density and both rule outputs. Scenario index i always maps
to the same random stream, so datasets are reproducible regardless of
how the work is scheduled.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import DynamicsModel
from .features import extract_features
from .grid import build_grid, pmd_from_pdf
from .gsum import GsRandomConfig, predict_exact, sample_random
from .rules import coarsen, grid_next_support, midpoint_rule

WORKERS_ENV_VAR = "PMSELECT_WORKERS"
CHUNK_SCENARIOS = 2048

BINARY_MAGIC = b"PMSELDS\x00"
BINARY_VERSION = 1


class DatasetFileError(ValueError):
    """The dataset file is missing, truncated, or structurally invalid."""


class DatasetVersionError(DatasetFileError):
    """The dataset file was written by an incompatible format version."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Experiment definition for one Monte-Carlo study.

    `target_index` is the 1-based predictive-grid node to evaluate; None
    evaluates every node, yielding grid_count rows per scenario.
    """

    gs: GsRandomConfig = GsRandomConfig()
    model: DynamicsModel = DynamicsModel(gain=1.0, noise_variance=2.0)
    grid_count: int = 30
    sigma: float = 6.0
    target_index: int | None = 15
    n_scenarios: int = 60000

    def __post_init__(self):
        if self.grid_count < 4:
            raise ValueError("grid_count must be at least 4")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.target_index is not None and not 1 <= self.target_index <= self.grid_count:
            raise ValueError("target_index must lie within the grid")
        if self.n_scenarios < 1:
            raise ValueError("n_scenarios must be positive")

    @property
    def rows_per_scenario(self) -> int:
        return 1 if self.target_index is not None else self.grid_count

    def to_dict(self) -> dict:
        return {
            "gs": self.gs.to_dict(),
            "model": self.model.to_dict(),
            "grid": {"count": self.grid_count, "sigma": self.sigma},
            "target_index": self.target_index,
            "n_scenarios": self.n_scenarios,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        grid = data.get("grid", {})
        return cls(
            gs=GsRandomConfig.from_dict(data.get("gs", {})),
            model=DynamicsModel.from_dict(data.get("model", {"F": 1.0, "Q": 2.0})),
            grid_count=int(grid.get("count", 30)),
            sigma=float(grid.get("sigma", 6.0)),
            target_index=data.get("target_index", 15),
            n_scenarios=int(data.get("n_scenarios", 60000)),
        )


@dataclass(frozen=True)
class Sample:
    """One labeled evaluation: features, exact value, rule outputs, errors."""

    features: np.ndarray
    truth: float
    rule_values: tuple
    errors: tuple
    target_index: int
    scenario_index: int


@dataclass
class Dataset:
    """Column-oriented sample store; one row per (scenario, target) pair."""

    features: np.ndarray
    truths: np.ndarray
    rule_values: np.ndarray
    errors: np.ndarray
    target_indices: np.ndarray
    scenario_indices: np.ndarray

    def __len__(self) -> int:
        return len(self.truths)

    def subset(self, indices) -> "Dataset":
        return Dataset(
            features=self.features[indices],
            truths=self.truths[indices],
            rule_values=self.rule_values[indices],
            errors=self.errors[indices],
            target_indices=self.target_indices[indices],
            scenario_indices=self.scenario_indices[indices],
        )

    def row(self, i: int) -> Sample:
        return Sample(
            features=self.features[i],
            truth=float(self.truths[i]),
            rule_values=(float(self.rule_values[i, 0]), float(self.rule_values[i, 1])),
            errors=(float(self.errors[i, 0]), float(self.errors[i, 1])),
            target_index=int(self.target_indices[i]),
            scenario_index=int(self.scenario_indices[i]),
        )


def scenario_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent, reproducible random stream for one scenario index."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))
    return np.random.Generator(np.random.PCG64(seq))


def _scenario_rows(master_seed: int, index: int, cfg: ScenarioConfig):
    """Feature/truth/rule rows for one scenario; the single numeric path."""
    rng = scenario_rng(master_seed, index)
    gs = sample_random(rng, cfg.gs)
    mean, variance = gs.moments()
    prior_grid = build_grid(mean, np.sqrt(variance), cfg.sigma, cfg.grid_count)
    pmd = pmd_from_pdf(gs.pdf, prior_grid)
    pmd_coarse = coarsen(pmd) if cfg.grid_count % 2 == 0 else None

    next_grid = grid_next_support(gs, cfg.model, cfg.sigma, cfg.grid_count)
    predicted = predict_exact(gs, cfg.model.gain, cfg.model.noise_variance)

    if cfg.target_index is not None:
        node_indices = [cfg.target_index - 1]
    else:
        node_indices = range(cfg.grid_count)

    rows = []
    for node in node_indices:
        target = float(next_grid.points[node])
        truth = predicted.pdf(target)
        fine = midpoint_rule(pmd, cfg.model, target)
        if pmd_coarse is None:
            raise ValueError("extrapolated rule needs an even grid_count")
        coarse = midpoint_rule(pmd_coarse, cfg.model, target)
        rich = fine + (fine - coarse) / 3.0
        rows.append((
            extract_features(pmd, target),
            truth,
            (fine, rich),
            (truth - fine, truth - rich),
            node + 1,
        ))
    return rows


def generate_sample(master_seed: int, index: int, cfg: ScenarioConfig):
    """Sample(s) for one scenario: a Sample in fixed-target mode, else a list."""
    rows = _scenario_rows(master_seed, index, cfg)
    samples = [
        Sample(features=f, truth=t, rule_values=rv, errors=e,
               target_index=j, scenario_index=index)
        for f, t, rv, e, j in rows
    ]
    return samples[0] if cfg.target_index is not None else samples


def _generate_chunk(args):
    master_seed, start, stop, cfg = args
    n_feat = 3 * cfg.grid_count - 3
    rows = cfg.rows_per_scenario * (stop - start)
    features = np.empty((rows, n_feat))
    truths = np.empty(rows)
    rule_values = np.empty((rows, 2))
    errors = np.empty((rows, 2))
    target_indices = np.empty(rows, dtype=np.int64)
    scenario_indices = np.empty(rows, dtype=np.int64)
    pos = 0
    for index in range(start, stop):
        for f, t, rv, e, j in _scenario_rows(master_seed, index, cfg):
            features[pos] = f
            truths[pos] = t
            rule_values[pos] = rv
            errors[pos] = e
            target_indices[pos] = j
            scenario_indices[pos] = index
            pos += 1
    return features, truths, rule_values, errors, target_indices, scenario_indices


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV_VAR, "1")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def generate_dataset(master_seed: int, cfg: ScenarioConfig,
                     n_scenarios: int | None = None,
                     workers: int | None = None) -> Dataset:
    """Dataset over scenario indices 0..n-1.

    Work is split into fixed-size chunks processed in scenario order, so
    the result is byte-identical for any worker count.
    """
    n = cfg.n_scenarios if n_scenarios is None else int(n_scenarios)
    workers = default_workers() if workers is None else max(1, int(workers))
    bounds = [(master_seed, lo, min(lo + CHUNK_SCENARIOS, n), cfg)
              for lo in range(0, n, CHUNK_SCENARIOS)]
    if workers == 1 or len(bounds) == 1:
        parts = [_generate_chunk(b) for b in bounds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_generate_chunk, bounds))
    return Dataset(
        features=np.concatenate([p[0] for p in parts]),
        truths=np.concatenate([p[1] for p in parts]),
        rule_values=np.concatenate([p[2] for p in parts]),
        errors=np.concatenate([p[3] for p in parts]),
        target_indices=np.concatenate([p[4] for p in parts]),
        scenario_indices=np.concatenate([p[5] for p in parts]),
    )


def preselect(dataset: Dataset, beta: float) -> Dataset:
    """Keep rows where some rule's absolute error exceeds `beta`."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    keep = np.abs(dataset.errors).max(axis=1) > beta
    return dataset.subset(keep)


def split(dataset: Dataset, train_fraction: float = 0.8,
          seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, then partition into (train, test)."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be strictly between 0 and 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(len(dataset))
    cut = int(round(train_fraction * len(dataset)))
    return dataset.subset(order[:cut]), dataset.subset(order[cut:])


def _csv_header(n_features: int) -> list:
    return (["scenario", "target_index"]
            + [f"f_{i + 1}" for i in range(n_features)]
            + ["truth", "p_mid", "p_rich", "e_mid", "e_rich"])


def write_dataset(dataset: Dataset, path, fmt: str = "binary") -> None:
    """Persist the dataset; `fmt` is "binary" (exact) or "csv"."""
    if fmt == "binary":
        n, n_feat = dataset.features.shape
        with open(path, "wb") as fh:
            fh.write(BINARY_MAGIC)
            fh.write(np.array([BINARY_VERSION, n, n_feat], dtype="<u4").tobytes())
            fh.write(dataset.features.astype("<f8").tobytes())
            fh.write(dataset.truths.astype("<f8").tobytes())
            fh.write(dataset.rule_values.astype("<f8").tobytes())
            fh.write(dataset.errors.astype("<f8").tobytes())
            fh.write(dataset.target_indices.astype("<i8").tobytes())
            fh.write(dataset.scenario_indices.astype("<i8").tobytes())
    elif fmt == "csv":
        n, n_feat = dataset.features.shape
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(_csv_header(n_feat))
            for i in range(n):
                writer.writerow(
                    [int(dataset.scenario_indices[i]), int(dataset.target_indices[i])]
                    + [repr(float(v)) for v in dataset.features[i]]
                    + [repr(float(dataset.truths[i])),
                       repr(float(dataset.rule_values[i, 0])),
                       repr(float(dataset.rule_values[i, 1])),
                       repr(float(dataset.errors[i, 0])),
                       repr(float(dataset.errors[i, 1]))]
                )
    else:
        raise ValueError(f"unknown dataset format {fmt!r}")


def _read_binary(fh) -> Dataset:
    header = fh.read(12)
    if len(header) != 12:
        raise DatasetFileError("binary dataset header is truncated")
    version, n, n_feat = np.frombuffer(header, dtype="<u4")
    if version != BINARY_VERSION:
        raise DatasetVersionError(
            f"dataset has version {int(version)}, expected {BINARY_VERSION}"
        )
    def take(count, dtype):
        width = np.dtype(dtype).itemsize * count
        raw = fh.read(width)
        if len(raw) != width:
            raise DatasetFileError("binary dataset payload is truncated")
        return np.frombuffer(raw, dtype=dtype).copy()

    features = take(n * n_feat, "<f8").reshape(int(n), int(n_feat))
    truths = take(n, "<f8")
    rule_values = take(2 * n, "<f8").reshape(int(n), 2)
    errors = take(2 * n, "<f8").reshape(int(n), 2)
    target_indices = take(n, "<i8")
    scenario_indices = take(n, "<i8")
    if fh.read(1):
        raise DatasetFileError("binary dataset has trailing bytes")
    return Dataset(features, truths, rule_values, errors,
                   target_indices, scenario_indices)


def _read_csv(path) -> Dataset:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFileError(f"{path} is empty") from None
        n_feat = len(header) - 7
        if n_feat < 1 or header != _csv_header(n_feat):
            raise DatasetFileError(f"{path} does not have the expected CSV header")
        rows = list(reader)
    n = len(rows)
    features = np.empty((n, n_feat))
    truths = np.empty(n)
    rule_values = np.empty((n, 2))
    errors = np.empty((n, 2))
    target_indices = np.empty(n, dtype=np.int64)
    scenario_indices = np.empty(n, dtype=np.int64)
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise DatasetFileError(f"{path}: row {i + 2} has {len(row)} columns")
        scenario_indices[i] = int(row[0])
        target_indices[i] = int(row[1])
        features[i] = [float(v) for v in row[2:2 + n_feat]]
        truths[i], rule_values[i, 0], rule_values[i, 1], errors[i, 0], errors[i, 1] = (
            float(v) for v in row[2 + n_feat:]
        )
    return Dataset(features, truths, rule_values, errors,
                   target_indices, scenario_indices)


def read_dataset(path) -> Dataset:
    """Load a dataset written by `write_dataset`, sniffing the format."""
    try:
        with open(path, "rb") as fh:
            magic = fh.read(len(BINARY_MAGIC))
            if magic == BINARY_MAGIC:
                return _read_binary(fh)
    except OSError as exc:
        raise DatasetFileError(f"cannot read dataset file {path}: {exc}") from exc
    return _read_csv(path)
