"""Forecast error metrics and tabular evaluation reports.

Unit convention: the testing loss is MSE on min-max normalized closes,
while MAE and MAPE are computed on denormalized closes (currency units).
"""

from __future__ import annotations

import csv
from dataclasses import astuple, dataclass
from pathlib import Path

import numpy as np

from .dataset import stack_samples
from .exceptions import ArgumentError, DivisionByZeroError
from .training import ForecastRow, mse_loss
from .models.network import model_forward

REPORT_COLUMNS = ("Approach", "Testing loss", "MAE", "MAPE", "Accuracy")
UNITS_NOTE = "# testing loss: MSE on normalized closes; MAE: currency units; MAPE, Accuracy: ratios"
APPROACH_LABELS = {
    "fused_lstm": "Sentiment-fused LSTM",
    "price_lstm": "LSTM",
    "dnn": "DNN",
}


def _pair(pred, actual):
    p = np.asarray(pred, dtype=np.float64).ravel()
    a = np.asarray(actual, dtype=np.float64).ravel()
    if p.size != a.size:
        raise ArgumentError(f"length mismatch: {p.size} predictions vs {a.size} actuals")
    if p.size == 0:
        raise ArgumentError("metrics need at least one (prediction, actual) pair")
    return p, a


def mae(pred, actual) -> float:
    p, a = _pair(pred, actual)
    return float(np.mean(np.abs(p - a)))


def mape(pred, actual) -> float:
    p, a = _pair(pred, actual)
    zero = np.flatnonzero(a == 0)
    if zero.size:
        raise DivisionByZeroError(f"actual value is zero at index {zero[0]}", index=int(zero[0]))
    return float(np.mean(np.abs((p - a) / a)))


def accuracy(mape_value: float) -> float:
    """One minus MAPE. Negative when MAPE exceeds 1."""
    return 1.0 - mape_value


@dataclass(frozen=True)
class EvalReport:
    approach: str
    testing_loss: float
    mae: float
    mape: float
    accuracy: float

    @property
    def accuracy_negative(self) -> bool:
        return self.accuracy < 0


def report_from_predictions(approach, pred_norm, target_norm, pred, actual) -> EvalReport:
    loss = mse_loss(np.asarray(pred_norm).reshape(-1, 1), np.asarray(target_norm).reshape(-1, 1))[0]
    m = mape(pred, actual)
    return EvalReport(approach, loss, mae(pred, actual), m, accuracy(m))


def predict_samples(checkpoint, samples):
    """Per-sample ``ForecastRow`` list plus normalized predictions and targets."""
    if not samples:
        raise ArgumentError("evaluation needs a non-empty test set")
    params = checkpoint.params
    X, y = stack_samples(samples, params.arch)
    pred_norm = model_forward(params, X)[0][:, 0]
    rows = []
    for s, pn in zip(samples, pred_norm):
        scaler = checkpoint.scalers.get(s.ticker)
        if scaler is None:
            raise ArgumentError(f"checkpoint has no scaler for ticker {s.ticker}")
        rows.append(ForecastRow(s.target_date, s.ticker, float(scaler.denormalize(pn)), float(scaler.denormalize(s.target))))
    return rows, pred_norm, y[:, 0]


def evaluate(checkpoint, samples, actual_closes=None):
    """Score a checkpoint on test windows.

    ``actual_closes`` optionally supplies the raw closes aligned with
    ``samples``; otherwise the denormalized targets are used. Returns
    ``(EvalReport, rows)`` where ``rows`` are the per-day predictions.
    """
    rows, pred_norm, target_norm = predict_samples(checkpoint, samples)
    if actual_closes is not None:
        rows = [ForecastRow(r.date, r.ticker, r.predicted, float(a)) for r, a in zip(rows, actual_closes)]
    pred = [r.predicted for r in rows]
    actual = [r.actual for r in rows]
    return report_from_predictions(checkpoint.arch, pred_norm, target_norm, pred, actual), rows


def write_report_csv(path, reports):
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["approach", "testing_loss", "mae", "mape", "accuracy"])
        for r in reports:
            w.writerow([r.approach] + [repr(float(v)) for v in astuple(r)[1:]])


def format_report_table(reports) -> str:
    rows = [REPORT_COLUMNS]
    for r in reports:
        rows.append((
            APPROACH_LABELS.get(r.approach, r.approach),
            f"{r.testing_loss:.5f}",
            f"{r.mae:.2f}",
            f"{r.mape:.3f}",
            f"{r.accuracy:.3f}" + (" (MAPE > 1)" if r.accuracy_negative else ""),
        ))
    widths = [max(len(row[k]) for row in rows) for k in range(len(REPORT_COLUMNS))]
    lines = [UNITS_NOTE]
    for row in rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"
