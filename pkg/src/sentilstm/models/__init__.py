from .dense import DenseLayerParams, dense_backward, dense_forward
from .lstm import LstmLayerParams, lstm_backward, lstm_cell_step, lstm_forward
from .network import (
    ARCHITECTURES,
    FEATURE_DIMS,
    ForwardCache,
    ModelParams,
    MSEObjective,
    build_model,
    count_params,
    model_backward,
    model_forward,
    param_shapes,
    predict,
)

__all__ = [
    "ARCHITECTURES",
    "FEATURE_DIMS",
    "DenseLayerParams",
    "ForwardCache",
    "LstmLayerParams",
    "ModelParams",
    "MSEObjective",
    "build_model",
    "count_params",
    "dense_backward",
    "dense_forward",
    "lstm_backward",
    "lstm_cell_step",
    "lstm_forward",
    "model_backward",
    "model_forward",
    "param_shapes",
    "predict",
]
