"""The three forecasting networks and their forward/backward passes.

``fused_lstm``  (N, window, 4) -> LSTM(50, seq) -> LSTM(50, seq) -> LSTM(50) -> Dense(1)
``price_lstm``  (N, window, 1) -> same stack
``dnn``         (N, window)    -> standardize -> Dense(256) -> Dense(128) -> Dense(64) -> Dense(1)

Hidden dense layers use leaky ReLU with slope 0.01; every head is linear.
Parameters live in one ordered ``name -> float64 array`` mapping so the
optimizer, gradient checker and checkpoint writer can treat them uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ArgumentError, ShapeError, StateError
from ..numerics import LEAKY_ALPHA, init_params, make_rng
from .dense import DenseLayerParams, dense_backward, dense_forward
from .lstm import LstmLayerParams, lstm_backward, lstm_forward

ARCHITECTURES = ("fused_lstm", "price_lstm", "dnn")
FEATURE_DIMS = {"fused_lstm": 4, "price_lstm": 1, "dnn": 1}
DEFAULT_UNITS = (50, 50, 50)
DEFAULT_HIDDEN = (256, 128, 64)


@dataclass
class ModelParams:
    arch: str
    window: int
    feature_dim: int
    arrays: dict
    units: tuple = DEFAULT_UNITS
    hidden: tuple = DEFAULT_HIDDEN
    alpha: float = LEAKY_ALPHA
    # standardization stats of the dnn input stage; not learnable
    input_mean: np.ndarray = None
    input_std: np.ndarray = None

    def __post_init__(self):
        if self.arch == "dnn":
            if self.input_mean is None:
                self.input_mean = np.zeros(self.window)
            if self.input_std is None:
                self.input_std = np.ones(self.window)

    @property
    def is_recurrent(self) -> bool:
        return self.arch != "dnn"

    def layers(self):
        """Layer views sharing memory with ``arrays``."""
        a = self.arrays
        out = []
        if self.is_recurrent:
            for k in range(len(self.units)):
                p = f"lstm{k + 1}"
                out.append(
                    LstmLayerParams(
                        a[f"{p}.W"], a[f"{p}.U"], a[f"{p}.b"],
                        return_sequences=k < len(self.units) - 1, name=p,
                    )
                )
        else:
            for k in range(len(self.hidden)):
                p = f"dense{k + 1}"
                out.append(DenseLayerParams(a[f"{p}.W"], a[f"{p}.b"], "leaky_relu", self.alpha, p))
        out.append(DenseLayerParams(a["head.W"], a["head.b"], "linear", name="head"))
        return out

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.arch, self.window, self.feature_dim,
            {k: v.copy() for k, v in self.arrays.items()},
            tuple(self.units), tuple(self.hidden), self.alpha,
            None if self.input_mean is None else self.input_mean.copy(),
            None if self.input_std is None else self.input_std.copy(),
        )

    def with_arrays(self, arrays: dict) -> "ModelParams":
        new = self.copy()
        new.arrays = arrays
        return new

    def zeros_like(self) -> dict:
        return {k: np.zeros_like(v) for k, v in self.arrays.items()}

    def input_shape(self) -> tuple:
        if self.is_recurrent:
            return (self.window, self.feature_dim)
        return (self.window,)


def param_shapes(arch, window=8, units=DEFAULT_UNITS, hidden=DEFAULT_HIDDEN):
    """Ordered ``(name, shape)`` list for an architecture."""
    if arch not in ARCHITECTURES:
        raise ArgumentError(f"unknown architecture {arch!r}; expected one of {ARCHITECTURES}")
    shapes = []
    if arch == "dnn":
        prev = window
        for k, width in enumerate(hidden):
            shapes += [(f"dense{k + 1}.W", (width, prev)), (f"dense{k + 1}.b", (width,))]
            prev = width
    else:
        prev = FEATURE_DIMS[arch]
        for k, h in enumerate(units):
            p = f"lstm{k + 1}"
            shapes += [(f"{p}.W", (4 * h, prev)), (f"{p}.U", (4 * h, h)), (f"{p}.b", (4 * h,))]
            prev = h
    shapes += [("head.W", (1, prev)), ("head.b", (1,))]
    return shapes


def build_model(arch, seed=42, window=8, units=DEFAULT_UNITS, hidden=DEFAULT_HIDDEN):
    """Glorot-uniform weights and zero biases, drawn in parameter order."""
    rng = make_rng(seed)
    arrays = {}
    for name, shape in param_shapes(arch, window, units, hidden):
        scheme = "zeros" if name.endswith(".b") else "glorot_uniform"
        arrays[name] = init_params(shape, rng, scheme)
    return ModelParams(arch, window, FEATURE_DIMS[arch], arrays, tuple(units), tuple(hidden))


def count_params(params: ModelParams) -> int:
    return int(sum(v.size for v in params.arrays.values()))


@dataclass
class ForwardCache:
    params: ModelParams
    layer_caches: list
    n: int


def _check_batch(params: ModelParams, batch):
    x = np.asarray(batch, dtype=np.float64)
    expected = params.input_shape()
    if x.ndim != len(expected) + 1 or x.shape[1:] != expected:
        raise ShapeError(
            f"{params.arch} expects batches of shape (N, {', '.join(map(str, expected))}), got {x.shape}"
        )
    return x


def model_forward(params: ModelParams, batch):
    """Predict for a batch. Returns ``(predictions of shape (N, 1), cache)``."""
    x = _check_batch(params, batch)
    layers = params.layers()
    caches = []
    if params.is_recurrent:
        h = x
        for layer in layers[:-1]:
            h, c = lstm_forward(layer, h, return_cache=True)
            caches.append(c)
    else:
        h = (x - params.input_mean) / params.input_std
        for layer in layers[:-1]:
            h, c = dense_forward(layer, h)
            caches.append(c)
    pred, c = dense_forward(layers[-1], h)
    caches.append(c)
    return pred, ForwardCache(params, caches, x.shape[0])


def predict(params: ModelParams, batch) -> np.ndarray:
    return model_forward(params, batch)[0]


def model_backward(params: ModelParams, cache: ForwardCache, d_pred) -> dict:
    """Gradients of the upstream loss w.r.t. every parameter, summed over the batch."""
    if cache is None or not isinstance(cache, ForwardCache):
        raise StateError("model_backward needs the cache returned by model_forward")
    if cache.params is not params:
        raise StateError("cache was produced by a different parameter set")
    d_pred = np.asarray(d_pred, dtype=np.float64)
    if d_pred.shape != (cache.n, 1):
        raise ShapeError(f"upstream gradient must have shape ({cache.n}, 1), got {d_pred.shape}")
    layers = params.layers()
    grads = {}
    d, g = dense_backward(layers[-1], cache.layer_caches[-1], d_pred)
    grads["head.W"], grads["head.b"] = g["W"], g["b"]
    for layer, lc in zip(reversed(layers[:-1]), reversed(cache.layer_caches[:-1])):
        if params.is_recurrent:
            if lc:
                d, g = lstm_backward(layer, lc, d)
            else:
                g = {"W": np.zeros_like(layer.W), "U": np.zeros_like(layer.U), "b": np.zeros_like(layer.b)}
        else:
            d, g = dense_backward(layer, lc, d)
        for k, v in g.items():
            grads[f"{layer.name}.{k}"] = v
    return {k: grads[k] for k in params.arrays}


class MSEObjective:
    """Mean squared error of a model on a fixed batch, for gradient checking.

    Calling the object returns the loss for the parameters passed in;
    :meth:`gradient` returns the analytic gradient. :meth:`focus` is the hook
    :func:`~sentilstm.numerics.grad_check` uses before perturbing one block:
    activations feeding the owning layer are computed once and reused, so
    each perturbed evaluation only reruns the downstream layers.
    """

    def __init__(self, params: ModelParams, X, y):
        self.X = _check_batch(params, X)
        self.y = np.asarray(y, dtype=np.float64).reshape(-1, 1)
        self._start = 0
        self._prefix = None

    def _layer_index(self, params, name):
        prefix = name.split(".")[0]
        names = [layer.name for layer in params.layers()]
        return names.index(prefix)

    def focus(self, params, name):
        self._start = self._layer_index(params, name)
        self._prefix = self._run(params, 0, self._start, self._input(params))

    def _input(self, params):
        if params.is_recurrent:
            return self.X
        return (self.X - params.input_mean) / params.input_std

    @staticmethod
    def _run(params, start, stop, h):
        for layer in params.layers()[start:stop]:
            if isinstance(layer, LstmLayerParams):
                h = lstm_forward(layer, h)
            else:
                h = dense_forward(layer, h)[0]
        return h

    def __call__(self, params):
        if self._prefix is None:
            pred = self._run(params, 0, None, self._input(params))
        else:
            pred = self._run(params, self._start, None, self._prefix)
        return float(np.mean((pred - self.y) ** 2))

    def gradient(self, params):
        pred, cache = model_forward(params, self.X)
        return model_backward(params, cache, 2.0 * (pred - self.y) / len(self.y))
