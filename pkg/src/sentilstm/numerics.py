"""Dense float64 helpers: activations, seeded initialization, gradient checking.

Randomness always flows through :func:`make_rng`, which wraps numpy's PCG64
bit generator. PCG64 output for a given seed is stable across platforms and
numpy releases, so seeded tensors are reproducible bit for bit.
"""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from .exceptions import ArgumentError, NumericError

DTYPE = np.float64
LEAKY_ALPHA = 0.01
ACTIVATIONS = ("sigmoid", "tanh", "leaky_relu", "linear")


def make_rng(seed: int) -> np.random.Generator:
    if seed < 0 or seed >= 2**64:
        raise ArgumentError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(int(seed)))


def softmax(logits) -> np.ndarray:
    """Numerically stable softmax over the last axis."""
    z = np.asarray(logits, dtype=DTYPE)
    if z.size == 0 or z.shape[-1] == 0:
        raise ArgumentError("softmax of an empty vector")
    if not np.all(np.isfinite(z)):
        raise NumericError("softmax input contains non-finite values")
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def sigmoid(x):
    # tanh form never overflows and is one ufunc pass
    return 0.5 + 0.5 * np.tanh(0.5 * np.asarray(x, dtype=DTYPE))


def apply_activation(kind: str, x, alpha: float = LEAKY_ALPHA) -> np.ndarray:
    x = np.asarray(x, dtype=DTYPE)
    if kind == "sigmoid":
        return sigmoid(x)
    if kind == "tanh":
        return np.tanh(x)
    if kind == "leaky_relu":
        return np.where(x > 0, x, alpha * x)
    if kind == "linear":
        return x.copy()
    raise ArgumentError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}")


def activation_grad(kind: str, x, alpha: float = LEAKY_ALPHA) -> np.ndarray:
    """Derivative of the activation evaluated at pre-activation ``x``."""
    x = np.asarray(x, dtype=DTYPE)
    if kind == "sigmoid":
        s = sigmoid(x)
        return s * (1.0 - s)
    if kind == "tanh":
        return 1.0 - np.tanh(x) ** 2
    if kind == "leaky_relu":
        return np.where(x > 0, 1.0, alpha)
    if kind == "linear":
        return np.ones_like(x)
    raise ArgumentError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}")


def _fans(shape) -> tuple[int, int]:
    # weight matrices are stored (out, in)
    if len(shape) == 1:
        return shape[0], shape[0]
    receptive = int(np.prod(shape[2:])) if len(shape) > 2 else 1
    return shape[1] * receptive, shape[0] * receptive


def init_params(shape, rng: np.random.Generator, scheme: str = "glorot_uniform") -> np.ndarray:
    shape = tuple(int(s) for s in shape)
    if not shape or any(s <= 0 for s in shape):
        raise ArgumentError(f"shape extents must be positive, got {shape}")
    if scheme == "zeros":
        return np.zeros(shape, dtype=DTYPE)
    if scheme == "glorot_uniform":
        fan_in, fan_out = _fans(shape)
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=shape).astype(DTYPE, copy=False)
    raise ArgumentError(f"unknown init scheme {scheme!r}")


def _as_mapping(params) -> Mapping[str, np.ndarray]:
    if isinstance(params, np.ndarray):
        return {"p": params}
    if hasattr(params, "arrays"):
        return params.arrays
    return params


def grad_check(
    loss_fn: Callable,
    analytic_grad: Callable,
    params,
    epsilon: float = 1e-5,
    return_worst: bool = False,
):
    """Largest relative error between analytic and central-difference gradients.

    ``params`` is a float64 array, a mapping of name to array, or any object
    exposing such a mapping as ``.arrays``. Entries are perturbed in place and
    restored exactly. ``analytic_grad`` must return arrays keyed like
    ``params`` (or a bare array when ``params`` is one).

    If ``loss_fn`` has a ``focus(params, name)`` method it is called before
    the entries of block ``name`` are perturbed, letting the loss cache work
    that does not depend on that block.

    With ``return_worst`` the result is ``(error, (name, flat_index,
    analytic, numeric))`` describing the entry that set the maximum.
    """
    if not (1e-6 <= epsilon <= 1e-4):
        raise ArgumentError(f"epsilon must lie in [1e-6, 1e-4], got {epsilon}")
    arrays = _as_mapping(params)
    analytic = analytic_grad(params)
    if isinstance(analytic, np.ndarray):
        analytic = {next(iter(arrays)): analytic}

    worst = 0.0
    where = None
    for name, arr in arrays.items():
        g = np.asarray(analytic[name], dtype=DTYPE)
        if g.shape != arr.shape:
            raise ArgumentError(f"gradient for {name!r} has shape {g.shape}, expected {arr.shape}")
        if not arr.flags.c_contiguous:
            raise ArgumentError(f"parameter {name!r} must be C-contiguous to perturb in place")
        focus = getattr(loss_fn, "focus", None)
        if focus is not None:
            focus(params, name)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + epsilon
            up = float(loss_fn(params))
            flat[k] = orig - epsilon
            down = float(loss_fn(params))
            flat[k] = orig
            if not (np.isfinite(up) and np.isfinite(down)):
                raise NumericError(f"non-finite loss while perturbing {name}[{k}]")
            numeric = (up - down) / (2.0 * epsilon)
            a = gflat[k]
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            if err > worst or where is None:
                worst = max(worst, err)
                where = (name, k, float(a), float(numeric))
    if return_worst:
        return float(worst), where
    return float(worst)
