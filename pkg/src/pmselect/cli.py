"""Command-line entry point.

Subcommands: gen-data (Monte-Carlo dataset), train (error estimator),
repro (benchmark tables with pass/fail checks), predict (one prediction
step to a PMD file). All runs are deterministic under a fixed seed; the
PMSELECT_WORKERS environment variable sets the data-generation worker
count without changing any output bytes.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import experiments
from .datagen import (DatasetFileError, ScenarioConfig, generate_dataset,
                      preselect, read_dataset, write_dataset)
from .experiments import PRESELECT_BETA
from .grid import build_grid, pmd_from_pdf
from .gsum import GaussianSum
from .nn import (CLASSIFICATION, REGRESSION, ModelFileError, TrainConfig,
                 load_model, save_model)
from .rules import grid_next_support, midpoint_rule, predict_pmd, richardson_rule
from .selector import make_selective_evaluator


def _load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SystemExit(f"error: cannot read {path}: {exc}")


def _write_json(payload: dict, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise SystemExit(f"error: cannot write {path}: {exc}")


def _scenario_config(args) -> ScenarioConfig:
    if getattr(args, "config", None):
        return ScenarioConfig.from_dict(_load_json(args.config))
    return ScenarioConfig()


def _with_target(cfg: ScenarioConfig, target: str | None) -> ScenarioConfig:
    if target is None:
        return cfg
    index = None if target == "all" else int(target)
    return ScenarioConfig(gs=cfg.gs, model=cfg.model, grid_count=cfg.grid_count,
                          sigma=cfg.sigma, target_index=index,
                          n_scenarios=cfg.n_scenarios)


def cmd_gen_data(args) -> int:
    cfg = _with_target(_scenario_config(args), args.target)
    n = args.samples if args.samples is not None else cfg.n_scenarios
    dataset = generate_dataset(args.seed, cfg, n_scenarios=n)
    total = len(dataset)
    if args.beta > 0:
        dataset = preselect(dataset, args.beta)
    try:
        write_dataset(dataset, args.out, fmt=args.format)
    except OSError as exc:
        print(f"error: cannot write dataset to {args.out}: {exc}", file=sys.stderr)
        return 1
    print(f"scenarios: {n}  rows: {total}  kept: {len(dataset)}  "
          f"retention: {len(dataset) / total:.4f}  (beta={args.beta})")
    print(f"wrote {args.out}")
    return 0


def cmd_train(args) -> int:
    try:
        dataset = read_dataset(args.data)
    except DatasetFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    cfg = TrainConfig(learning_rate=args.lr, momentum=args.momentum,
                      batch_size=args.batch_size, max_epochs=args.epochs,
                      patience=args.patience, seed=args.seed)
    head = CLASSIFICATION if args.head == "classification" else REGRESSION
    mlp, report, _, test_ds = experiments.train_on_dataset(dataset, cfg, head=head)
    try:
        save_model(mlp, args.out)
    except OSError as exc:
        print(f"error: cannot write model to {args.out}: {exc}", file=sys.stderr)
        return 1
    print(f"trained {mlp.param_count}-parameter network "
          f"({'x'.join(str(d) for d in mlp.layer_dims)}, {head} head)")
    print(f"epochs: {report.final_epoch + 1}  best epoch: {report.best_epoch + 1}  "
          f"wall clock: {report.wall_clock:.1f}s")
    print(f"validation loss: {report.val_losses[report.best_epoch]:.6e}")
    if head == REGRESSION and mlp.target_scale is not None:
        baseline = float(np.mean((test_ds.errors / mlp.target_scale) ** 2))
        print(f"zero-estimate baseline loss: {baseline:.6e}")
    print(f"wrote {args.out}")
    if args.report:
        _write_json(report.to_dict(), args.report)
    return 0


def _emit_report(payload: dict, text: str, checks, out_path) -> int:
    print(text)
    print()
    for check in checks:
        print(check.describe())
    if out_path:
        payload = dict(payload)
        payload["checks"] = [
            {"name": c.name, "value": c.value, "lower": c.lower,
             "upper": c.upper, "passed": c.passed}
            for c in checks
        ]
        _write_json(payload, out_path)
        print(f"\nwrote {out_path}")
    return 0 if all(c.passed for c in checks) else 1


def cmd_repro(args) -> int:
    cfg = _scenario_config(args)
    if args.table == "table1":
        n = args.samples or 60000
        report = experiments.run_table1(args.seed, n_scenarios=n, cfg=cfg)
        return _emit_report(report.to_dict(), report.to_text(),
                            experiments.check_table1(report), args.out)

    if args.table == "table2":
        n_raw = args.train_samples or (1000000 if args.full else 100000)
        train_cfg = TrainConfig(seed=args.seed)
        report, mlp, _ = experiments.run_table2(
            args.seed, n_raw_scenarios=n_raw, train_cfg=train_cfg, cfg=cfg)
        if args.model:
            try:
                save_model(mlp, args.model)
                print(f"wrote {args.model}")
            except OSError as exc:
                print(f"error: cannot write model to {args.model}: {exc}",
                      file=sys.stderr)
                return 1
        return _emit_report(report.to_dict(), report.to_text(),
                            experiments.check_table2(report), args.out)

    # grid-mare
    mlp = None
    if args.model:
        try:
            mlp = load_model(args.model)
        except ModelFileError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    n_train = args.train_samples or (80000 if args.full else 40000)
    n_eval = args.samples or 4000
    result, _ = experiments.run_grid_mare(
        args.seed, n_train_scenarios=n_train, n_eval_scenarios=n_eval,
        cfg=cfg, mlp=mlp)
    text = "\n".join([
        f"{'whole-grid MARE [%]':24s}{'Midpoint':>12s}{'Richardson':>12s}"
        f"{'Selective':>12s}{'Best sel.':>12s}",
        f"{'':24s}{result['mare_midpoint'] * 100:12.2f}"
        f"{result['mare_richardson'] * 100:12.2f}"
        f"{result['mare_selective'] * 100:12.2f}"
        f"{result['mare_best'] * 100:12.2f}",
        f"{'rows':24s}{result['n_rows']:12d}",
        f"{'selection accuracy [%]':24s}{result['selection_accuracy'] * 100:12.2f}",
    ])
    return _emit_report(result, text, experiments.check_grid_mare(result), args.out)


def cmd_predict(args) -> int:
    prior = GaussianSum.from_dict(_load_json(args.prior))
    cfg = _scenario_config(args)
    model = cfg.model
    if args.rule == "selective":
        if not args.model:
            print("error: --rule selective needs --model", file=sys.stderr)
            return 1
        try:
            mlp = load_model(args.model)
        except ModelFileError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        evaluator = make_selective_evaluator(mlp)
    elif args.rule == "richardson":
        evaluator = richardson_rule
    else:
        evaluator = midpoint_rule

    mean, variance = prior.moments()
    prior_grid = build_grid(mean, float(np.sqrt(variance)), cfg.sigma, cfg.grid_count)
    pmd = pmd_from_pdf(prior.pdf, prior_grid)
    next_grid = grid_next_support(prior, model, cfg.sigma, cfg.grid_count)
    predictive = predict_pmd(pmd, model, next_grid, evaluator=evaluator)
    _write_json(predictive.to_dict(), args.out)
    print(f"predictive PMD on {next_grid.count} nodes "
          f"(mass {predictive.mass():.12f}); wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pmselect",
        description="Grid-based state prediction with learned rule selection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a Monte-Carlo training dataset")
    p.add_argument("--samples", type=int, default=None, help="number of scenarios")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="scenario config JSON")
    p.add_argument("--target", default=None,
                   help="predictive node index (1-based) or 'all'")
    p.add_argument("--beta", type=float, default=PRESELECT_BETA,
                   help="pre-selection error threshold; 0 keeps everything")
    p.add_argument("--format", choices=["binary", "csv"], default="binary")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train the rule-error estimator")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--head", choices=["regression", "classification"],
                   default="regression")
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--report", help="write the per-epoch training report JSON here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("repro", help="run a benchmark study with pass/fail checks")
    p.add_argument("--table", choices=["table1", "table2", "grid-mare"], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=None,
                   help="evaluation scenarios (table1, grid-mare)")
    p.add_argument("--train-samples", type=int, default=None,
                   help="raw training scenarios (table2, grid-mare)")
    p.add_argument("--config", help="scenario config JSON")
    p.add_argument("--model", help="model file (input for grid-mare, output for table2)")
    p.add_argument("--out", help="write the report JSON here")
    p.add_argument("--full", action="store_true",
                   help="paper-scale training set instead of desk scale")
    p.set_defaults(func=cmd_repro)

    p = sub.add_parser("predict", help="one prediction step, written as a PMD JSON")
    p.add_argument("--prior", required=True, help="Gaussian-sum prior JSON")
    p.add_argument("--config", help="scenario config JSON (dynamics + grid)")
    p.add_argument("--rule", choices=["midpoint", "richardson", "selective"],
                   default="midpoint")
    p.add_argument("--model", help="trained model (for --rule selective)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
