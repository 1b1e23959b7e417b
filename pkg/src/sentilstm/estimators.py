"""scikit-learn compatible wrappers around the from-scratch networks."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .dataset import fit_minmax
from .exceptions import ArgumentError
from .models.network import ARCHITECTURES, DEFAULT_HIDDEN, DEFAULT_UNITS, FEATURE_DIMS, build_model, predict
from .training import TrainConfig, train


class WindowForecaster(RegressorMixin, BaseEstimator):
    """Next-step regressor over fixed-length windows.

    Parameters
    ----------
    architecture : {"fused_lstm", "price_lstm", "dnn"}
        ``fused_lstm`` expects X of shape (n_samples, window, 4) with the
        sentiment block in features 0-2; ``price_lstm`` expects
        (n_samples, window, 1) or (n_samples, window); ``dnn`` expects
        (n_samples, window).
    window : int
        Time steps per sample.
    units, hidden : tuple of int
        LSTM widths and DNN hidden widths.
    epochs, batch_size, learning_rate, beta1, beta2, adam_eps, clip_norm
        Optimizer settings, see :class:`~sentilstm.training.TrainConfig`.
    validation_fraction : float
        Tail share of the training rows held out for checkpoint selection
        when ``fit`` is not given explicit validation data.
    shuffle : bool
        Reshuffle mini-batches every epoch.
    random_state : int
        Seeds both weight initialization and batch order.

    Attributes
    ----------
    params_ : ModelParams
        Parameters of the epoch with the lowest validation loss.
    checkpoint_ : Checkpoint
    history_ : list of EpochRecord
    best_epoch_ : int
    best_validation_loss_ : float
    """

    def __init__(
        self,
        architecture="fused_lstm",
        window=8,
        units=DEFAULT_UNITS,
        hidden=DEFAULT_HIDDEN,
        epochs=100,
        batch_size=32,
        learning_rate=1e-3,
        beta1=0.9,
        beta2=0.999,
        adam_eps=1e-8,
        clip_norm=None,
        validation_fraction=0.15,
        shuffle=True,
        random_state=42,
    ):
        self.architecture = architecture
        self.window = window
        self.units = units
        self.hidden = hidden
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.adam_eps = adam_eps
        self.clip_norm = clip_norm
        self.validation_fraction = validation_fraction
        self.shuffle = shuffle
        self.random_state = random_state

    def _validate_X(self, X):
        if self.architecture not in ARCHITECTURES:
            raise ArgumentError(f"unknown architecture {self.architecture!r}")
        X = check_array(X, allow_nd=True, dtype=np.float64, ensure_2d=True)
        if self.architecture == "price_lstm" and X.ndim == 2:
            X = X[..., None]
        if self.architecture == "dnn":
            expected = (self.window,)
        else:
            expected = (self.window, FEATURE_DIMS[self.architecture])
        if X.shape[1:] != expected:
            raise ArgumentError(f"{self.architecture} expects samples of shape {expected}, got {X.shape[1:]}")
        return X

    def _config(self):
        return TrainConfig(
            epochs=self.epochs, batch_size=self.batch_size, seed=self.random_state,
            learning_rate=self.learning_rate, beta1=self.beta1, beta2=self.beta2,
            adam_eps=self.adam_eps, clip_norm=self.clip_norm, shuffle_each_epoch=self.shuffle,
        )

    def fit(self, X, y, X_val=None, y_val=None):
        X = self._validate_X(X)
        y = np.asarray(y, dtype=np.float64).reshape(-1, 1)
        if len(y) != len(X):
            raise ArgumentError(f"X has {len(X)} rows but y has {len(y)}")
        if X_val is None:
            # chronological tail split, rows are assumed time ordered
            n_val = int(len(X) * self.validation_fraction)
            if n_val < 1 or n_val >= len(X):
                raise ArgumentError("too few rows to carve a validation tail; pass X_val/y_val")
            X, X_val = X[:-n_val], X[-n_val:]
            y, y_val = y[:-n_val], y[-n_val:]
        else:
            X_val = self._validate_X(X_val)
            y_val = np.asarray(y_val, dtype=np.float64).reshape(-1, 1)
        model = build_model(self.architecture, self.random_state, self.window, tuple(self.units), tuple(self.hidden))
        self.checkpoint_, self.history_ = train(model, (X, y), (X_val, y_val), self._config())
        self.params_ = self.checkpoint_.params
        self.best_epoch_ = self.checkpoint_.epoch
        self.best_validation_loss_ = self.checkpoint_.validation_loss
        self.n_features_in_ = X.shape[-1] if X.ndim == 3 else X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = self._validate_X(X)
        return predict(self.params_, X)[:, 0]


class MinMaxCloseScaler(TransformerMixin, BaseEstimator):
    """Min-max scaling fitted on training closes; refuses constant series.

    Unlike :class:`sklearn.preprocessing.MinMaxScaler`, a constant series
    raises :class:`~sentilstm.exceptions.DegenerateSeriesError` instead of silently using unit scale.
    """

    def fit(self, X, y=None):
        self.scaler_ = fit_minmax(np.asarray(X, dtype=np.float64))
        self.data_min_ = self.scaler_.min
        self.data_max_ = self.scaler_.max
        return self

    def transform(self, X):
        check_is_fitted(self, "scaler_")
        return self.scaler_.normalize(X)

    def inverse_transform(self, X):
        check_is_fitted(self, "scaler_")
        return self.scaler_.denormalize(X)

