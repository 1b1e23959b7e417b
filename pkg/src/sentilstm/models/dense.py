"""Fully connected layer with weights stored (out_dim, in_dim)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ShapeError
from ..numerics import LEAKY_ALPHA, activation_grad, apply_activation


@dataclass
class DenseLayerParams:
    W: np.ndarray
    b: np.ndarray
    activation: str = "linear"
    alpha: float = LEAKY_ALPHA
    name: str = "dense"

    def validate(self):
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ShapeError(f"{self.name}: inconsistent shapes W{self.W.shape} b{self.b.shape}")


def dense_forward(params: DenseLayerParams, x):
    params.validate()
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.W.shape[1]:
        raise ShapeError(f"{params.name}: input has {x.shape[-1]} features, layer expects {params.W.shape[1]}")
    z = x @ params.W.T + params.b
    return apply_activation(params.activation, z, params.alpha), (x, z)


def dense_backward(params: DenseLayerParams, cache, d_out):
    x, z = cache
    dz = d_out * activation_grad(params.activation, z, params.alpha)
    return dz @ params.W, {"W": dz.T @ x, "b": dz.sum(axis=0)}
