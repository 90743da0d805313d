"""Multilayer perceptron trained by backpropagation, for univariate forecasting.

Networks map a window of ``w`` past (normalized) values to the next value.
Everything is plain numpy; weight matrices are stored ``(out, in)``.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DivergenceError, InsufficientDataError
from .panel import ScaleParams, normalize, windowize

log = logging.getLogger(__name__)

MODEL_FORMAT = "panelflux-mlp"
MODEL_VERSION = 1


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


# name -> (activation, derivative expressed through the activation value)
ACTIVATIONS = {
    "linear": (lambda z: z, lambda a: np.ones_like(a)),
    "sigmoid": (_sigmoid, lambda a: a * (1.0 - a)),
    "tanh": (np.tanh, lambda a: 1.0 - a * a),
}


@dataclass(frozen=True)
class MlpNetwork:
    layer_sizes: tuple[int, ...]
    activations: tuple[str, ...]
    weights: tuple[np.ndarray, ...] = field(repr=False)
    biases: tuple[np.ndarray, ...] = field(repr=False)
    seed: int | None = None

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        acts = tuple(self.activations)
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValueError(f"invalid layer sizes {sizes}")
        if sizes[-1] != 1:
            raise ValueError("the output layer must have exactly one unit")
        if len(acts) != len(sizes) - 1:
            raise ValueError("need one activation per non-input layer")
        unknown = set(acts) - set(ACTIVATIONS)
        if unknown:
            raise ValueError(f"unknown activations {sorted(unknown)}")
        if acts[-1] != "linear":
            raise ValueError("output activation must be linear")
        ws = tuple(np.array(w, dtype=float) for w in self.weights)
        bs = tuple(np.array(b, dtype=float).reshape(-1) for b in self.biases)
        if len(ws) != len(sizes) - 1 or len(bs) != len(ws):
            raise ValueError("one weight matrix and bias vector per layer")
        for l, (w, b) in enumerate(zip(ws, bs)):
            if w.shape != (sizes[l + 1], sizes[l]) or b.shape != (sizes[l + 1],):
                raise ValueError(
                    f"layer {l}: weight {w.shape} / bias {b.shape} do not chain "
                    f"{sizes[l]} -> {sizes[l + 1]}"
                )
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {l} has non-finite parameters")
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "activations", acts)
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    def parameters(self) -> np.ndarray:
        """All parameters flattened: per layer, weights row-major then biases."""
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(self.weights, self.biases)])

    def with_parameters(self, theta: np.ndarray) -> "MlpNetwork":
        theta = np.asarray(theta, dtype=float)
        ws, bs, pos = [], [], 0
        for w, b in zip(self.weights, self.biases):
            ws.append(theta[pos:pos + w.size].reshape(w.shape))
            pos += w.size
            bs.append(theta[pos:pos + b.size])
            pos += b.size
        if pos != theta.size:
            raise ValueError("parameter vector has the wrong length")
        return replace(self, weights=tuple(ws), biases=tuple(bs))

    def to_dict(self, scale: ScaleParams | None = None) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "layer_sizes": list(self.layer_sizes),
            "activations": list(self.activations),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "scale_params": scale.to_dict() if scale is not None else None,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> tuple["MlpNetwork", ScaleParams | None]:
        if doc.get("format") != MODEL_FORMAT:
            raise ValueError("not a panelflux MLP document")
        if doc.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {doc.get('version')}")
        net = cls(doc["layer_sizes"], doc["activations"], doc["weights"], doc["biases"], doc.get("seed"))
        sp = doc.get("scale_params")
        return net, (ScaleParams(sp["min"], sp["max"]) if sp else None)


def save_network(net: MlpNetwork, path, scale: ScaleParams | None = None) -> Path:
    path = Path(path)
    path.write_text(json.dumps(net.to_dict(scale), indent=1) + "\n", encoding="utf-8")
    return path


def load_network(path) -> tuple[MlpNetwork, ScaleParams | None]:
    return MlpNetwork.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def init_limit(fan_in: int, fan_out: int) -> float:
    return math.sqrt(6.0 / (fan_in + fan_out))


def init_network(layer_sizes: Sequence[int], activations: Sequence[str] | None = None,
                 seed: int = 0) -> MlpNetwork:
    """Glorot-uniform weights, zero biases.

    ``activations`` defaults to tanh on hidden layers and linear output.
    """
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 3:
        raise ValueError("at least one hidden layer is required")
    if activations is None:
        activations = ("tanh",) * (len(sizes) - 2) + ("linear",)
    rng = np.random.default_rng(seed)
    ws, bs = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        r = init_limit(fan_in, fan_out)
        ws.append(rng.uniform(-r, r, size=(fan_out, fan_in)))
        bs.append(np.zeros(fan_out))
    return MlpNetwork(sizes, tuple(activations), tuple(ws), tuple(bs), seed)


def _as_batch(net: MlpNetwork, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != net.input_size:
        raise ValueError(f"expected inputs of length {net.input_size}, got shape {X.shape}")
    return X


def _forward(ws, bs, acts, h):
    pre, post = [], [h]
    for w, b, act in zip(ws, bs, acts):
        z = h @ w.T + b
        h = ACTIVATIONS[act][0](z)
        pre.append(z)
        post.append(h)
    return h[:, 0], pre, post


def _gradient(ws, bs, acts, X, y):
    out, _, post = _forward(ws, bs, acts, X)
    resid = out - y
    delta = (2.0 / y.size) * resid[:, None]  # dL/d(layer output), shape (n, 1)
    gw, gb = [None] * len(ws), [None] * len(ws)
    for l in range(len(ws) - 1, -1, -1):
        delta = delta * ACTIVATIONS[acts[l]][1](post[l + 1])
        gw[l] = delta.T @ post[l]
        gb[l] = delta.sum(axis=0)
        if l:
            delta = delta @ ws[l]
    return gw, gb, float(np.mean(resid * resid))


def forward_pass(net: MlpNetwork, X) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray]]:
    """Batch forward pass.

    Returns the output vector, the pre-activations of every layer and the
    layer outputs (the first entry being the input itself).
    """
    return _forward(net.weights, net.biases, net.activations, _as_batch(net, X))


def forward(net: MlpNetwork, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("forward takes a single input vector")
    return float(forward_pass(net, x)[0][0])


def predict(net: MlpNetwork, X) -> np.ndarray:
    return forward_pass(net, X)[0]


class Gradient(NamedTuple):
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    loss: float

    def flat(self) -> np.ndarray:
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(self.weights, self.biases)])


def mse(net: MlpNetwork, X, y) -> float:
    r = predict(net, X) - np.asarray(y, dtype=float)
    return float(np.mean(r * r))


def backprop_gradient(net: MlpNetwork, X, y) -> Gradient:
    """Gradient of the batch mean squared error with respect to every parameter."""
    X = _as_batch(net, X)
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size == 0 or y.size != X.shape[0]:
        raise ValueError("need a nonempty batch with one target per input row")
    gw, gb, loss = _gradient(net.weights, net.biases, net.activations, X, y)
    return Gradient(tuple(gw), tuple(gb), loss)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 3000
    seed: int = 0
    shuffle: bool = False
    batch_size: int | None = None  # None: full batch
    loss: str = "mse"

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.loss != "mse":
            raise ValueError("only the mse loss is supported")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be positive")


def train(net: MlpNetwork, X, y, cfg: TrainConfig = TrainConfig()) -> tuple[MlpNetwork, np.ndarray]:
    """Gradient descent at a fixed learning rate.

    Returns the trained copy of ``net`` and the full-batch MSE after each epoch.
    """
    X = _as_batch(net, X)
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size < 1 or y.size != X.shape[0]:
        raise InsufficientDataError("training needs at least one (input, target) pair")
    rng = np.random.default_rng(cfg.seed)
    ws = [w.copy() for w in net.weights]
    bs = [b.copy() for b in net.biases]
    acts = net.activations
    batch = cfg.batch_size or y.size
    history = np.empty(cfg.epochs)
    with np.errstate(over="ignore", invalid="ignore"):  # a non-finite loss raises DivergenceError
        _run_epochs(ws, bs, acts, X, y, cfg, rng, batch, history)
    return MlpNetwork(net.layer_sizes, acts, tuple(ws), tuple(bs), net.seed), history


def _run_epochs(ws, bs, acts, X, y, cfg, rng, batch, history) -> None:
    for epoch in range(cfg.epochs):
        order = rng.permutation(y.size) if cfg.shuffle else np.arange(y.size)
        for start in range(0, y.size, batch):
            idx = order[start:start + batch]
            gw, gb, _ = _gradient(ws, bs, acts, X[idx], y[idx])
            for l in range(len(ws)):
                ws[l] -= cfg.learning_rate * gw[l]
                bs[l] -= cfg.learning_rate * gb[l]
        r = _forward(ws, bs, acts, X)[0] - y
        loss = float(np.mean(r * r))
        if not math.isfinite(loss):
            raise DivergenceError(epoch + 1, loss)
        history[epoch] = loss


def forecast_recursive(net: MlpNetwork, last_window, steps: int = 20,
                       scale: ScaleParams | None = None) -> np.ndarray:
    """Iterated one-step forecasts; each prediction is pushed into the window.

    ``last_window`` is on the network's (normalized) scale; the returned path
    is mapped back through ``scale`` when given.
    """
    window = np.asarray(last_window, dtype=float).copy()
    if window.shape != (net.input_size,):
        raise ValueError(f"window must have length {net.input_size}, got {window.shape}")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    out = np.empty(steps)
    for k in range(steps):
        out[k] = forward(net, window)
        window = np.roll(window, -1)
        window[-1] = out[k]
    return scale.invert(out) if scale is not None else out


class ForecastAccuracy(NamedTuple):
    accuracy: float  # percent, 100 * (1 - MAPE)
    mape: float
    rmse: float
    excluded: int  # zero actuals left out of MAPE


def accuracy(actual, predicted) -> ForecastAccuracy:
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape or a.ndim != 1 or a.size == 0:
        raise ValueError("actual and predicted must be nonempty and of equal length")
    nz = a != 0
    excluded = int((~nz).sum())
    if excluded:
        log.warning("accuracy: %d zero actual value(s) excluded from MAPE", excluded)
    mape = float(np.mean(np.abs(a[nz] - p[nz]) / np.abs(a[nz]))) if nz.any() else math.nan
    rmse = float(np.sqrt(np.mean((a - p) ** 2)))
    return ForecastAccuracy(100.0 * (1.0 - mape), mape, rmse, excluded)


@dataclass(frozen=True)
class ForecastConfig:
    window: int = 8
    hidden: tuple[int, ...] = (16,)
    activation: str = "tanh"
    holdout: int = 4
    steps: int = 20
    train: TrainConfig = TrainConfig()

    def layer_sizes(self) -> tuple[int, ...]:
        return (self.window, *self.hidden, 1)

    def activations(self) -> tuple[str, ...]:
        return (self.activation,) * len(self.hidden) + ("linear",)


@dataclass(frozen=True)
class ForecastResult:
    predicted: np.ndarray
    loss_history: np.ndarray
    accuracy: ForecastAccuracy | None
    network: MlpNetwork = field(repr=False)
    scale: ScaleParams = field(repr=False)


def fit_series(values, cfg: ForecastConfig, seed: int) -> tuple[MlpNetwork, ScaleParams, np.ndarray]:
    """Normalize on ``values``, window it and train a fresh network."""
    z, scale = normalize(np.asarray(values, dtype=float))
    X, y = windowize(z, cfg.window)
    net = init_network(cfg.layer_sizes(), cfg.activations(), seed=seed)
    net, history = train(net, X, y, replace(cfg.train, seed=seed))
    return net, scale, history


def forecast_series(values, cfg: ForecastConfig = ForecastConfig(), seed: int = 0) -> ForecastResult:
    """Hold out the last ``cfg.holdout`` points to score, then refit on everything
    and forecast ``cfg.steps`` periods ahead."""
    v = np.asarray(values, dtype=float)
    if np.isnan(v).any():
        raise InsufficientDataError("series has missing values")
    score = None
    if cfg.holdout:
        train_part = v[:-cfg.holdout]
        if train_part.size <= cfg.window:
            raise InsufficientDataError(
                f"{v.size} observations leave too few for window {cfg.window} after holdout"
            )
        net, scale, _ = fit_series(train_part, cfg, seed)
        pred = forecast_recursive(net, scale.apply(train_part[-cfg.window:]), cfg.holdout, scale)
        score = accuracy(v[-cfg.holdout:], pred)
    net, scale, history = fit_series(v, cfg, seed)
    path = forecast_recursive(net, scale.apply(v[-cfg.window:]), cfg.steps, scale)
    return ForecastResult(path, history, score, net, scale)
