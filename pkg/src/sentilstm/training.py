"""MSE loss, Adam, the epoch loop with best-on-validation checkpointing,
checkpoint archives and walk-forward forecasting."""

from __future__ import annotations

import json
import logging
import os
import struct
import tempfile
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import MinMaxScaler, build_windows, normalize_bars, stack_samples
from .exceptions import ArgumentError, FormatError, IoError, NumericError, ShapeError
from .models.network import ModelParams, model_backward, model_forward
from .numerics import make_rng

log = logging.getLogger(__name__)


def mse_loss(pred, target):
    """Mean squared error and its gradient with respect to ``pred``."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"prediction shape {pred.shape} != target shape {target.shape}")
    if pred.size == 0:
        raise ArgumentError("mse_loss needs at least one sample")
    diff = pred - target
    return float(np.mean(diff**2)), (2.0 / diff.size) * diff


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, params: ModelParams, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8) -> "AdamState":
        return cls(params.zeros_like(), params.zeros_like(), 0, lr, beta1, beta2, eps)


def adam_step(params: ModelParams, grads: dict, state: AdamState):
    """One Adam update. Inputs are left untouched; returns ``(params, state)``."""
    for name, g in grads.items():
        if g.shape != params.arrays[name].shape:
            raise ShapeError(f"gradient {name} has shape {g.shape}, parameter has {params.arrays[name].shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in parameter block {name}")
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_arrays, new_m, new_v = {}, {}, {}
    for name, p in params.arrays.items():
        g = grads[name]
        m = b1 * state.m[name] + (1.0 - b1) * g
        v = b2 * state.v[name] + (1.0 - b2) * (g * g)
        m_hat = m / c1
        v_hat = v / c2
        new_arrays[name] = p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
        new_m[name] = m
        new_v[name] = v
    new_state = AdamState(new_m, new_v, t, state.lr, b1, b2, state.eps)
    return params.with_arrays(new_arrays), new_state


def clip_by_global_norm(grads: dict, max_norm: float) -> dict:
    norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if norm <= max_norm or norm == 0.0:
        return grads
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    seed: int = 42
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    clip_norm: float = None
    shuffle_each_epoch: bool = True

    def problems(self) -> list:
        out = []
        if not isinstance(self.epochs, int) or self.epochs < 1:
            out.append(f"epochs must be an integer >= 1, got {self.epochs!r}")
        if not isinstance(self.batch_size, int) or self.batch_size < 1:
            out.append(f"batch_size must be a positive integer, got {self.batch_size!r}")
        if self.learning_rate < 0:
            out.append(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.clip_norm is not None and self.clip_norm <= 0:
            out.append(f"clip_norm must be positive, got {self.clip_norm}")
        if not (0 <= self.seed < 2**64):
            out.append(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        return out


@dataclass
class Checkpoint:
    params: ModelParams
    epoch: int
    validation_loss: float
    seed: int
    scalers: dict = field(default_factory=dict)

    @property
    def arch(self) -> str:
        return self.params.arch


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float


def _as_arrays(data, arch):
    if isinstance(data, tuple) and len(data) == 2 and isinstance(data[0], np.ndarray):
        X, y = data
        return np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64).reshape(-1, 1)
    return stack_samples(list(data), arch)


def dataset_loss(params: ModelParams, X, y) -> float:
    pred, _ = model_forward(params, X)
    return mse_loss(pred, y)[0]


def set_input_normalization(params: ModelParams, X) -> ModelParams:
    """Freeze the dnn standardization stage to per-position mean/std of ``X``."""
    out = params.copy()
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    out.input_mean = mean
    out.input_std = np.where(std > 0, std, 1.0)
    return out


def train(model: ModelParams, train_data, val_data, cfg: TrainConfig = None, scalers=None, on_epoch=None):
    """Run exactly ``cfg.epochs`` epochs and keep the lowest-validation snapshot.

    ``train_data``/``val_data`` are ``(X, y)`` arrays or sequences of
    :class:`~sentilstm.dataset.WindowSample`. Returns ``(checkpoint, history)``;
    ``history`` has one :class:`EpochRecord` per epoch. Ties in validation loss
    keep the earliest epoch.
    """
    cfg = cfg or TrainConfig()
    bad = cfg.problems()
    if bad:
        raise ArgumentError("; ".join(bad))
    X, y = _as_arrays(train_data, model.arch)
    Xv, yv = _as_arrays(val_data, model.arch)
    if len(X) == 0 or len(Xv) == 0:
        raise ArgumentError("training and validation sets must be non-empty")

    params = set_input_normalization(model, X) if model.arch == "dnn" else model.copy()
    state = AdamState.fresh(params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps)
    rng = make_rng(cfg.seed)
    n = len(X)
    best = None
    history = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n) if cfg.shuffle_each_epoch else np.arange(n)
        sq_sum = 0.0
        for b, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            pred, cache = model_forward(params, X[idx])
            loss, d_pred = mse_loss(pred, y[idx])
            if not np.isfinite(loss):
                raise NumericError(f"non-finite training loss at epoch {epoch}, batch {b}")
            grads = model_backward(params, cache, d_pred)
            if cfg.clip_norm is not None:
                grads = clip_by_global_norm(grads, cfg.clip_norm)
            params, state = adam_step(params, grads, state)
            sq_sum += loss * len(idx)
        val_loss = dataset_loss(params, Xv, yv)
        if not np.isfinite(val_loss):
            raise NumericError(f"non-finite validation loss at epoch {epoch}")
        rec = EpochRecord(epoch, sq_sum / n, val_loss)
        history.append(rec)
        if on_epoch is not None:
            on_epoch(rec)
        if best is None or val_loss < best.validation_loss:
            best = Checkpoint(params.copy(), epoch, val_loss, cfg.seed, dict(scalers or {}))
    log.info("best epoch %d, validation loss %.6g", best.epoch, best.validation_loss)
    return best, history


def write_history(path, history):
    lines = ["epoch,train_loss,val_loss"]
    lines += [f"{r.epoch},{r.train_loss!r},{r.val_loss!r}" for r in history]
    _atomic_write_bytes(Path(path), ("\n".join(lines) + "\n").encode("utf-8"))


def read_history(path):
    import csv

    with Path(path).open(encoding="utf-8", newline="") as fh:
        return [EpochRecord(int(r["epoch"]), float(r["train_loss"]), float(r["val_loss"])) for r in csv.DictReader(fh)]


# Checkpoint archive, all integers little-endian:
#   bytes 0-7   magic b"SLSTMCKP"
#   bytes 8-11  uint32 format version (1)
#   bytes 12-15 uint32 header length H
#   next H      UTF-8 JSON header
#   remainder   float64 values of every block listed in header["blocks"], in
#               that order, each flattened row-major
MAGIC = b"SLSTMCKP"
FORMAT_VERSION = 1


def _atomic_write_bytes(path: Path, data: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_checkpoint(path, ckpt: Checkpoint):
    p = ckpt.params
    blocks = [(name, arr) for name, arr in p.arrays.items()]
    if p.arch == "dnn":
        blocks += [("input.mean", p.input_mean), ("input.std", p.input_std)]
    header = {
        "arch": p.arch,
        "window": p.window,
        "feature_dim": p.feature_dim,
        "units": list(p.units),
        "hidden": list(p.hidden),
        "alpha": p.alpha,
        "seed": ckpt.seed,
        "epoch": ckpt.epoch,
        "validation_loss": ckpt.validation_loss,
        "scalers": {t: [s.min, s.max] for t, s in sorted(ckpt.scalers.items())},
        "blocks": [{"name": name, "shape": list(arr.shape)} for name, arr in blocks],
    }
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = b"".join(np.ascontiguousarray(arr, dtype="<f8").tobytes() for _, arr in blocks)
    _atomic_write_bytes(Path(path), MAGIC + struct.pack("<II", FORMAT_VERSION, len(head)) + head + payload)


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise IoError(f"checkpoint not found: {path}")
    raw = path.read_bytes()
    if raw[:8] != MAGIC:
        raise FormatError(f"{path} is not a checkpoint archive")
    version, hlen = struct.unpack("<II", raw[8:16])
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    header = json.loads(raw[16 : 16 + hlen].decode("utf-8"))
    offset = 16 + hlen
    arrays = {}
    for blk in header["blocks"]:
        shape = tuple(blk["shape"])
        count = int(np.prod(shape))
        end = offset + 8 * count
        if end > len(raw):
            raise FormatError(f"{path} is truncated in block {blk['name']}")
        arrays[blk["name"]] = np.frombuffer(raw[offset:end], dtype="<f8").astype(np.float64).reshape(shape)
        offset = end
    if offset != len(raw):
        raise FormatError(f"{path} has {len(raw) - offset} trailing bytes")
    mean = arrays.pop("input.mean", None)
    std = arrays.pop("input.std", None)
    params = ModelParams(
        header["arch"], header["window"], header["feature_dim"], arrays,
        tuple(header["units"]), tuple(header["hidden"]), header["alpha"], mean, std,
    )
    scalers = {t: MinMaxScaler(lo, hi) for t, (lo, hi) in header["scalers"].items()}
    return Checkpoint(params, header["epoch"], header["validation_loss"], header["seed"], scalers)


@dataclass(frozen=True)
class ForecastRow:
    date: object
    ticker: str
    predicted: float
    actual: float


def rolling_forecast(checkpoint: Checkpoint, bars, sentiment=None, horizon: int = 100):
    """Walk-forward one-step-ahead forecasts over raw-price ``bars`` of one ticker.

    The first ``window`` bars are context only. Each forecast uses the
    preceding ``window`` actual closes (never earlier predictions) and, for
    the fused model, that day's sentiment block. Predictions are returned in
    currency units next to the actual close.
    """
    params = checkpoint.params
    window = params.window
    if horizon < 0:
        raise ArgumentError(f"horizon must be >= 0, got {horizon}")
    if len(bars) < window:
        raise ArgumentError(f"need at least {window} bars of context, got {len(bars)}")
    if horizon == 0:
        return []
    available = len(bars) - window
    if horizon > available:
        warnings.warn(f"horizon {horizon} exceeds the {available} available actuals; truncating", stacklevel=2)
        horizon = available
    if horizon == 0:
        return []
    ticker = bars[0].ticker
    scaler = checkpoint.scalers.get(ticker)
    if scaler is None:
        raise ArgumentError(f"checkpoint has no scaler for ticker {ticker}")
    span = list(bars[: window + horizon])
    samples = build_windows(normalize_bars(span, scaler), sentiment, window, fused=params.arch == "fused_lstm")
    X, _ = stack_samples(samples, params.arch)
    pred = scaler.denormalize(model_forward(params, X)[0][:, 0])
    return [
        ForecastRow(s.target_date, ticker, float(p), float(b.close))
        for s, p, b in zip(samples, pred, span[window:])
    ]


def write_forecast(path, rows):
    lines = ["date,ticker,predicted,actual"]
    lines += [f"{r.date.isoformat()},{r.ticker},{r.predicted!r},{r.actual!r}" for r in rows]
    _atomic_write_bytes(Path(path), ("\n".join(lines) + "\n").encode("utf-8"))

