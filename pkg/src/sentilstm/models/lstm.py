"""LSTM layer with exact backpropagation through time.

Gate blocks are stacked in the order (input, forget, candidate, output) along
the first axis of ``W`` (4*units, input_dim), ``U`` (4*units, units) and
``b`` (4*units,). The cell follows the usual formulation::

    i, f, o = sigmoid(W x + U h + b)   (their blocks)
    g       = tanh(W x + U h + b)      (candidate block)
    c_t     = f * c_prev + i * g
    h_t     = o * tanh(c_t)

Initial hidden and cell states are zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ShapeError


@dataclass
class LstmLayerParams:
    W: np.ndarray
    U: np.ndarray
    b: np.ndarray
    return_sequences: bool = True
    name: str = "lstm"

    @property
    def units(self) -> int:
        return self.U.shape[1]

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]

    def validate(self):
        h = self.U.shape[1] if self.U.ndim == 2 else -1
        if (
            self.W.ndim != 2
            or self.U.shape != (4 * h, h)
            or self.W.shape[0] != 4 * h
            or self.b.shape != (4 * h,)
        ):
            raise ShapeError(
                f"{self.name}: inconsistent gate shapes W{self.W.shape} U{self.U.shape} b{self.b.shape}"
            )


@dataclass
class StepCache:
    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    tanh_c: np.ndarray


def _gates(z, h_prev, c_prev, x, H):
    s = 0.5 + 0.5 * np.tanh(0.5 * z)
    i = s[..., :H]
    f = s[..., H : 2 * H]
    o = s[..., 3 * H :]
    g = np.tanh(z[..., 2 * H : 3 * H])
    c_t = f * c_prev + i * g
    tanh_c = np.tanh(c_t)
    return o * tanh_c, c_t, StepCache(x, h_prev, c_prev, i, f, g, o, tanh_c)


def lstm_cell_step(params: LstmLayerParams, x_t, h_prev, c_prev):
    """Advance one time step. Leading axes of the inputs are batch axes.

    Returns ``(h_t, c_t, cache)``.
    """
    x_t = np.asarray(x_t, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    H = params.units
    if x_t.shape[-1] != params.input_dim:
        raise ShapeError(f"{params.name}: input has {x_t.shape[-1]} features, layer expects {params.input_dim}")
    if h_prev.shape[-1] != H or c_prev.shape[-1] != H:
        raise ShapeError(f"{params.name}: state width must be {H}")
    z = x_t @ params.W.T + h_prev @ params.U.T + params.b
    return _gates(z, h_prev, c_prev, x_t, H)


def lstm_forward(params: LstmLayerParams, sequence, return_cache: bool = False):
    """Run the layer over ``sequence`` of shape (T, D) or (N, T, D).

    Output is (…, T, units) with ``return_sequences`` and (…, units) without.
    """
    params.validate()
    seq = np.asarray(sequence, dtype=np.float64)
    if seq.ndim not in (2, 3):
        raise ShapeError(f"{params.name}: expected (T, D) or (N, T, D) input, got shape {seq.shape}")
    if seq.shape[-1] != params.input_dim:
        raise ShapeError(f"{params.name}: input has {seq.shape[-1]} features, layer expects {params.input_dim}")
    lead = seq.shape[:-2]
    T = seq.shape[-2]
    H = params.units
    h = np.zeros(lead + (H,))
    c = np.zeros_like(h)
    # input projection for every step in one matmul
    xw = seq @ params.W.T + params.b
    UT = params.U.T
    outputs = []
    caches = []
    for t in range(T):
        h, c, cache = _gates(xw[..., t, :] + h @ UT, h, c, seq[..., t, :], H)
        outputs.append(h)
        caches.append(cache)
    if params.return_sequences:
        out = np.stack(outputs, axis=-2) if T else np.zeros(lead + (0, params.units))
    else:
        out = h
    return (out, caches) if return_cache else out


def lstm_backward(params: LstmLayerParams, caches, d_out):
    """Backpropagate through time.

    ``d_out`` matches the forward output shape. Returns ``(d_input, grads)``
    where ``grads`` maps ``"W"``, ``"U"``, ``"b"`` to arrays summed over the
    batch.
    """
    H = params.units
    T = len(caches)
    d_out = np.asarray(d_out, dtype=np.float64)
    dW = np.zeros_like(params.W)
    dU = np.zeros_like(params.U)
    db = np.zeros_like(params.b)
    lead = caches[0].h_prev.shape[:-1]
    dx = np.zeros(lead + (T, params.input_dim))
    dh_next = np.zeros(lead + (H,))
    dc_next = np.zeros(lead + (H,))
    if not params.return_sequences:
        dh_next = dh_next + d_out
    for t in range(T - 1, -1, -1):
        k = caches[t]
        dh = dh_next + d_out[..., t, :] if params.return_sequences else dh_next
        do = dh * k.tanh_c
        dc = dc_next + dh * k.o * (1.0 - k.tanh_c**2)
        di = dc * k.g
        dg = dc * k.i
        df = dc * k.c_prev
        dz = np.concatenate(
            [
                di * k.i * (1.0 - k.i),
                df * k.f * (1.0 - k.f),
                dg * (1.0 - k.g**2),
                do * k.o * (1.0 - k.o),
            ],
            axis=-1,
        )
        dz2 = dz.reshape(-1, 4 * H)
        dW += dz2.T @ k.x.reshape(-1, params.input_dim)
        dU += dz2.T @ k.h_prev.reshape(-1, H)
        db += dz2.sum(axis=0)
        dx[..., t, :] = dz @ params.W
        dh_next = dz @ params.U
        dc_next = dc * k.f
    return dx, {"W": dW, "U": dU, "b": db}
