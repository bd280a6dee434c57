import json
import math

import numpy as np
import pytest

from pmselect.features import FeatureStats
from pmselect.nn import (CLASSIFICATION, REGRESSION, Mlp, ModelFileError,
                         ModelVersionError, TrainConfig, backward, forward,
                         init_mlp, init_velocity, load_model, loss_value,
                         save_model, sgdm_step, train, train_error_estimator)

from oracles import finite_difference_gradients, max_gradient_mismatch


def test_param_count_default_architecture():
    mlp = init_mlp((87, 128, 64, 2), seed=0)
    assert mlp.param_count == 19650


def test_param_count_hand_example():
    mlp = init_mlp((2, 3, 1), seed=0)
    assert mlp.param_count == 2 * 3 + 3 + 3 * 1 + 1


def test_init_deterministic():
    a = init_mlp((87, 128, 64, 2), seed=7)
    b = init_mlp((87, 128, 64, 2), seed=7)
    for wa, wb in zip(a.weights, b.weights):
        assert np.array_equal(wa, wb)
    c = init_mlp((87, 128, 64, 2), seed=8)
    assert not np.array_equal(a.weights[0], c.weights[0])


def test_init_bounds_and_zero_biases():
    mlp = init_mlp((10, 20, 2), seed=3)
    limit0 = math.sqrt(6.0 / 30.0)
    assert np.all(np.abs(mlp.weights[0]) <= limit0)
    for b in mlp.biases:
        assert np.all(b == 0.0)


def test_forward_zero_network():
    mlp = init_mlp((4, 3, 2), seed=0)
    for w in mlp.weights:
        w[:] = 0.0
    out, _ = forward(mlp, np.ones(4))
    assert np.array_equal(out, np.zeros(2))


def test_forward_one_dimensional_closed_form():
    mlp = Mlp(weights=[np.array([[1.0]])], biases=[np.array([0.0])])
    out, _ = forward(mlp, np.array([0.0]))
    assert out[0] == 0.0
    out, _ = forward(mlp, np.array([0.7]))
    assert math.isclose(out[0], math.tanh(0.7), rel_tol=1e-15)


def test_forward_matches_hand_computation():
    # 2 -> 2 -> 1 network evaluated with explicit scalar arithmetic
    w1 = np.array([[0.3, -0.5], [0.8, 0.1]])
    b1 = np.array([0.05, -0.2])
    w2 = np.array([[1.2, -0.7]])
    b2 = np.array([0.4])
    mlp = Mlp(weights=[w1, w2], biases=[b1, b2])
    x = np.array([0.9, -1.3])
    h0 = math.tanh(0.3 * 0.9 + (-0.5) * (-1.3) + 0.05)
    h1 = math.tanh(0.8 * 0.9 + 0.1 * (-1.3) + (-0.2))
    expected = math.tanh(1.2 * h0 + (-0.7) * h1 + 0.4)
    out, _ = forward(mlp, x)
    assert math.isclose(out[0], expected, rel_tol=1e-12)


def test_forward_dimension_mismatch():
    mlp = init_mlp((4, 3, 2), seed=0)
    with pytest.raises(ValueError):
        forward(mlp, np.ones(5))


@pytest.mark.parametrize("head", [REGRESSION, CLASSIFICATION])
def test_gradients_match_finite_differences(head):
    rng = np.random.default_rng(21)
    mlp = init_mlp((87, 8, 4, 2), head=head, seed=21)
    x = rng.normal(size=(16, 87))
    if head == REGRESSION:
        y = rng.normal(size=(16, 2)) * 0.5
    else:
        y = rng.integers(0, 2, size=16)
    grad_w, grad_b, _ = backward(mlp, x, y)
    num_w = finite_difference_gradients(mlp.weights, lambda: loss_value(mlp, x, y))
    num_b = finite_difference_gradients(mlp.biases, lambda: loss_value(mlp, x, y))
    assert max_gradient_mismatch(grad_w, num_w) < 1e-4
    assert max_gradient_mismatch(grad_b, num_b) < 1e-4


def test_zero_residual_batch_has_zero_gradients():
    rng = np.random.default_rng(5)
    mlp = init_mlp((6, 5, 2), seed=5)
    x = rng.normal(size=(8, 6))
    out, _ = forward(mlp, x)
    grad_w, grad_b, loss = backward(mlp, x, out)
    assert loss == 0.0
    for g in grad_w + grad_b:
        assert np.all(g == 0.0)


def test_classification_gradient_pushes_toward_true_class():
    mlp = init_mlp((4, 2), head=CLASSIFICATION, seed=0)
    for w in mlp.weights:
        w[:] = 0.0
    x = np.ones((1, 4))
    grad_w, grad_b, _ = backward(mlp, x, np.array([0]))
    # equal logits: the true-class bias gradient is negative (increase logit)
    assert grad_b[-1][0] < 0 < grad_b[-1][1]


def test_backward_rejects_empty_batch():
    mlp = init_mlp((4, 2), seed=0)
    with pytest.raises(ValueError):
        backward(mlp, np.zeros((0, 4)), np.zeros((0, 2)))


def test_sgdm_zero_momentum_is_plain_sgd():
    mlp = init_mlp((3, 2), seed=1)
    before = [w.copy() for w in mlp.weights]
    grads = ([np.ones_like(w) for w in mlp.weights],
             [np.ones_like(b) for b in mlp.biases])
    cfg = TrainConfig(learning_rate=0.1, momentum=0.0)
    sgdm_step(mlp, grads, init_velocity(mlp), cfg)
    for w0, w1 in zip(before, mlp.weights):
        assert np.allclose(w1, w0 - 0.1, atol=1e-15)


def test_sgdm_velocity_moves_parameters_without_gradient():
    mlp = init_mlp((3, 2), seed=1)
    before = [w.copy() for w in mlp.weights]
    velocity = init_velocity(mlp)
    for v in velocity[0]:
        v[:] = 0.5
    grads = ([np.zeros_like(w) for w in mlp.weights],
             [np.zeros_like(b) for b in mlp.biases])
    cfg = TrainConfig(learning_rate=0.1, momentum=0.9)
    sgdm_step(mlp, grads, velocity, cfg)
    for w0, w1 in zip(before, mlp.weights):
        assert np.allclose(w1 - w0, 0.45, atol=1e-15)


def test_sgdm_two_steps_constant_gradient():
    mlp = init_mlp((3, 2), seed=1)
    before = [w.copy() for w in mlp.weights]
    velocity = init_velocity(mlp)
    grads = ([np.ones_like(w) for w in mlp.weights],
             [np.ones_like(b) for b in mlp.biases])
    cfg = TrainConfig(learning_rate=0.1, momentum=0.9)
    sgdm_step(mlp, grads, velocity, cfg)
    sgdm_step(mlp, grads, velocity, cfg)
    expected = -0.1 * (2.0 + 0.9)
    for w0, w1 in zip(before, mlp.weights):
        assert np.allclose(w1 - w0, expected, atol=1e-14)


def linearly_separable(n=400, seed=3):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 2))
    y = (x[:, 0] + 0.5 * x[:, 1] > 0).astype(np.intp)
    return x, y


def test_training_learns_separable_classes():
    x, y = linearly_separable()
    cfg = TrainConfig(learning_rate=0.05, momentum=0.9, batch_size=32,
                      max_epochs=20, patience=20, seed=0)
    mlp, _ = train(x, y, x, y, cfg, dims=(2, 16, 2), head=CLASSIFICATION)
    out, _ = forward(mlp, x)
    predicted = np.argmax(out, axis=1)
    assert float(np.mean(predicted == y)) >= 0.99


def test_zero_learning_rate_leaves_parameters():
    x, y = linearly_separable(n=64)
    cfg = TrainConfig(learning_rate=0.0, batch_size=16, max_epochs=3,
                      patience=10, seed=4)
    mlp, report = train(x, y, x, y, cfg, dims=(2, 8, 2), head=CLASSIFICATION)
    fresh = init_mlp((2, 8, 2), head=CLASSIFICATION, seed=4)
    for w0, w1 in zip(fresh.weights, mlp.weights):
        assert np.array_equal(w0, w1)
    assert len(set(report.val_losses)) == 1


def test_training_deterministic():
    x, y = linearly_separable(n=128)
    cfg = TrainConfig(learning_rate=0.05, batch_size=16, max_epochs=5,
                      patience=10, seed=11)
    _, rep_a = train(x, y, x, y, cfg, dims=(2, 8, 2), head=CLASSIFICATION)
    _, rep_b = train(x, y, x, y, cfg, dims=(2, 8, 2), head=CLASSIFICATION)
    assert rep_a.train_losses == rep_b.train_losses
    assert rep_a.val_losses == rep_b.val_losses


def test_full_batch_small_lr_loss_nonincreasing():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(64, 4))
    y = np.tanh(x @ rng.normal(size=(4, 2)) * 0.3)
    cfg = TrainConfig(learning_rate=1e-3, momentum=0.0, batch_size=64,
                      max_epochs=15, patience=50, seed=2)
    _, report = train(x, y, x, y, cfg, dims=(4, 6, 2), head=REGRESSION)
    losses = report.train_losses
    assert all(b <= a + 1e-15 for a, b in zip(losses, losses[1:]))


def test_train_error_estimator_attaches_stats_and_scale():
    rng = np.random.default_rng(30)
    feats = rng.normal(size=(256, 10)) * 3.0 + 1.0
    errors = rng.normal(size=(256, 2)) * np.array([0.01, 0.05])
    cfg = TrainConfig(max_epochs=3, patience=5, seed=1)
    mlp, _ = train_error_estimator(feats[:200], errors[:200], feats[200:],
                                   errors[200:], cfg, dims=(10, 8, 2))
    assert mlp.feature_stats is not None
    assert np.all(mlp.target_scale > 0)
    assert mlp.target_scale.tolist() == np.abs(errors[:200]).max(axis=0).tolist()


def test_save_load_roundtrip(tmp_path):
    mlp = init_mlp((87, 16, 2), seed=6)
    mlp.feature_stats = FeatureStats(mean=np.random.default_rng(1).normal(size=87),
                                     std=np.full(87, 1.5))
    mlp.target_scale = np.array([0.2, 0.5])
    path = tmp_path / "model.json"
    save_model(mlp, path)
    back = load_model(path)
    rng = np.random.default_rng(8)
    for _ in range(100):
        x = rng.normal(size=87)
        a, _ = forward(mlp, x)
        b, _ = forward(back, x)
        assert np.array_equal(a, b)


def test_load_truncated_file(tmp_path):
    mlp = init_mlp((4, 2), seed=0)
    path = tmp_path / "model.json"
    save_model(mlp, path)
    raw = path.read_text()
    path.write_text(raw[:len(raw) // 2])
    with pytest.raises(ModelFileError):
        load_model(path)


def test_load_wrong_version(tmp_path):
    mlp = init_mlp((4, 2), seed=0)
    path = tmp_path / "model.json"
    save_model(mlp, path)
    payload = json.loads(path.read_text())
    payload["version"] = 99
    path.write_text(json.dumps(payload))
    with pytest.raises(ModelVersionError):
        load_model(path)


def test_load_missing_file(tmp_path):
    with pytest.raises(ModelFileError):
        load_model(tmp_path / "missing.json")
