import json

import numpy as np
import pytest

from panelflux.errors import DivergenceError, InsufficientDataError
from panelflux.mlp import (
    ForecastConfig,
    MlpNetwork,
    TrainConfig,
    accuracy,
    backprop_gradient,
    forecast_recursive,
    forecast_series,
    forward,
    init_limit,
    init_network,
    load_network,
    mse,
    predict,
    save_network,
    train,
)
from panelflux.panel import ScaleParams


def numeric_gradient(net, X, y, eps=1e-6):
    theta = net.parameters()
    g = np.empty_like(theta)
    for i in range(theta.size):
        up, dn = theta.copy(), theta.copy()
        up[i] += eps
        dn[i] -= eps
        g[i] = (mse(net.with_parameters(up), X, y) - mse(net.with_parameters(dn), X, y)) / (2 * eps)
    return g


def linear_net(w, b):
    """Single linear neuron wrapped as 1-1-1 so the output layer stays linear."""
    return MlpNetwork((1, 1, 1), ("linear", "linear"), ([[w]], [[1.0]]), ([b], [0.0]))


# ---------------------------------------------------------------- network


def test_init_is_glorot_uniform_with_zero_bias():
    net = init_network((8, 16, 1), seed=5)
    assert np.abs(net.weights[0]).max() <= init_limit(8, 16)
    assert np.abs(net.weights[1]).max() <= init_limit(16, 1)
    assert all((b == 0).all() for b in net.biases)
    assert net.activations == ("tanh", "linear")


def test_init_is_seeded():
    a, b = init_network((4, 5, 1), seed=1), init_network((4, 5, 1), seed=1)
    np.testing.assert_array_equal(a.parameters(), b.parameters())
    assert not np.array_equal(a.parameters(), init_network((4, 5, 1), seed=2).parameters())


def test_network_validation():
    with pytest.raises(ValueError, match="chain"):
        MlpNetwork((2, 3, 1), ("tanh", "linear"), (np.zeros((3, 2)), np.zeros((1, 2))), (np.zeros(3), np.zeros(1)))
    with pytest.raises(ValueError, match="linear"):
        init_network((2, 3, 1), ("tanh", "tanh"))
    with pytest.raises(ValueError, match="hidden"):
        init_network((2, 1))


def test_forward_hand_computed():
    net = MlpNetwork((2, 2, 1), ("tanh", "linear"), ([[1.0, 0.0], [0.0, -1.0]], [[2.0, 3.0]]),
                     ([0.0, 0.5], [0.1]))
    x = np.array([0.3, 0.2])
    expected = 2 * np.tanh(0.3) + 3 * np.tanh(0.5 - 0.2) + 0.1
    assert forward(net, x) == pytest.approx(expected, abs=1e-15)
    with pytest.raises(ValueError):
        forward(net, [1.0, 2.0, 3.0])


def test_parameters_roundtrip():
    net = init_network((3, 4, 2, 1), ("sigmoid", "tanh", "linear"), seed=9)
    theta = net.parameters()
    np.testing.assert_array_equal(net.with_parameters(theta).parameters(), theta)
    with pytest.raises(ValueError):
        net.with_parameters(theta[:-1])


@pytest.mark.parametrize("act", ["linear", "sigmoid", "tanh"])
def test_backprop_matches_finite_differences(act):
    rng = np.random.default_rng(0)
    net = init_network((3, 5, 4, 1), (act, act, "linear"), seed=3)
    net = net.with_parameters(net.parameters() + rng.normal(0, 0.1, net.parameters().size))
    X, y = rng.normal(size=(7, 3)), rng.normal(size=7)
    num = numeric_gradient(net, X, y)
    ana = backprop_gradient(net, X, y).flat()
    assert np.linalg.norm(ana - num) / np.linalg.norm(num) < 1e-6


def test_save_load_roundtrip(tmp_path):
    net = init_network((4, 3, 1), seed=11)
    path = save_network(net, tmp_path / "m.json", ScaleParams(1.0, 9.0))
    doc = json.loads(path.read_text())
    assert doc["format"] == "panelflux-mlp" and doc["version"] == 1 and doc["seed"] == 11
    back, scale = load_network(path)
    assert scale == ScaleParams(1.0, 9.0)
    X = np.random.default_rng(1).normal(size=(5, 4))
    np.testing.assert_array_equal(predict(back, X), predict(net, X))


# --------------------------------------------------------------- training


def test_single_linear_neuron_learns_doubling():
    x = np.linspace(-1, 1, 21)[:, None]
    y = 2.0 * x[:, 0]
    net, hist = train(linear_net(0.1, 0.0), x, y, TrainConfig(learning_rate=0.1, epochs=2000))
    assert net.weights[1][0, 0] * net.weights[0][0, 0] == pytest.approx(2.0, abs=0.01)
    assert hist[-1] < hist[0]


def test_linear_network_reaches_least_squares():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(60, 3))
    y = X @ np.array([0.5, -1.0, 0.25]) + 0.3 + rng.normal(0, 0.1, 60)
    net = init_network((3, 1, 1), ("linear", "linear"), seed=0)
    net, _ = train(net, X, y, TrainConfig(learning_rate=0.05, epochs=4000))
    A = np.column_stack([X, np.ones(60)])
    ols = np.linalg.lstsq(A, y, rcond=None)[0]
    np.testing.assert_allclose(predict(net, X), A @ ols, atol=1e-3)


def test_training_is_deterministic_and_shuffle_seeded():
    rng = np.random.default_rng(2)
    X, y = rng.normal(size=(20, 4)), rng.normal(size=20)
    cfg = TrainConfig(epochs=50, shuffle=True, batch_size=5, seed=7)
    a, ha = train(init_network((4, 3, 1), seed=1), X, y, cfg)
    b, hb = train(init_network((4, 3, 1), seed=1), X, y, cfg)
    np.testing.assert_array_equal(ha, hb)
    np.testing.assert_array_equal(a.parameters(), b.parameters())


def test_divergence_is_reported():
    X = np.linspace(0, 1, 10)[:, None] * 100
    with pytest.raises(DivergenceError) as err:
        train(linear_net(1.0, 0.0), X, X[:, 0] * 3, TrainConfig(learning_rate=10.0, epochs=500))
    assert err.value.epoch >= 1


def test_train_rejects_empty():
    with pytest.raises(InsufficientDataError):
        train(init_network((2, 2, 1)), np.empty((0, 2)), np.empty(0))


# --------------------------------------------------------------- forecast


def test_recursive_forecast_feeds_back_predictions():
    # identity on the last input: the path repeats the final window value
    net = MlpNetwork((3, 1, 1), ("linear", "linear"), ([[0.0, 0.0, 1.0]], [[1.0]]), ([0.0], [0.0]))
    np.testing.assert_allclose(forecast_recursive(net, [1.0, 2.0, 3.0], 4), [3.0] * 4)
    # sum of last two inputs: Fibonacci-like continuation
    net = MlpNetwork((2, 1, 1), ("linear", "linear"), ([[1.0, 1.0]], [[1.0]]), ([0.0], [0.0]))
    np.testing.assert_allclose(forecast_recursive(net, [1.0, 1.0], 5), [2, 3, 5, 8, 13])
    out = forecast_recursive(net, [0.0, 0.5], 1, ScaleParams(10.0, 20.0))
    assert out[0] == pytest.approx(15.0)


def test_accuracy_examples():
    assert accuracy([100.0, 100.0], [99.0, 101.0]).accuracy == pytest.approx(99.0)
    assert accuracy([10.0], [20.0]).accuracy == pytest.approx(0.0)
    assert accuracy([10.0], [40.0]).accuracy == pytest.approx(-200.0)  # not clipped
    r = accuracy([0.0, 50.0], [1.0, 55.0])
    assert r.excluded == 1 and r.accuracy == pytest.approx(90.0)
    assert r.rmse == pytest.approx(np.sqrt((1 + 25) / 2))


def test_forecast_series_shapes_and_determinism():
    t = np.arange(60)
    y = 10 + np.sin(t / 4)
    cfg = ForecastConfig(train=TrainConfig(epochs=200))
    a, b = forecast_series(y, cfg, seed=3), forecast_series(y, cfg, seed=3)
    assert a.predicted.shape == (20,) and a.loss_history.shape == (200,)
    np.testing.assert_array_equal(a.predicted, b.predicted)
    assert a.accuracy is not None and a.accuracy.accuracy > 90


def test_forecast_series_too_short():
    with pytest.raises(InsufficientDataError):
        forecast_series(np.arange(10.0), ForecastConfig(window=8, holdout=4))
