"""Static SVG figures rendered from history and prediction CSVs."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .exceptions import FormatError, IoError  # noqa: E402

# fixed salt and no Date metadata keep the SVG bytes reproducible
matplotlib.rcParams["svg.hashsalt"] = "sentilstm"
_SVG_META = {"Date": None}


def _read(path):
    path = Path(path)
    if not path.is_file():
        raise IoError(f"file not found: {path}")
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        return reader.fieldnames or [], list(reader)


def plot_history(csv_path, out_path, title="Training and validation loss"):
    fields, rows = _read(csv_path)
    if fields[:3] != ["epoch", "train_loss", "val_loss"]:
        raise FormatError(f"{csv_path} is not a history CSV")
    epochs = [int(r["epoch"]) for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(epochs, [float(r["train_loss"]) for r in rows], label="train loss")
    ax.plot(epochs, [float(r["val_loss"]) for r in rows], label="validation loss")
    ax.set_xlabel("epoch")
    ax.set_ylabel("MSE (normalized close)")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return Path(out_path)


def plot_predictions(csv_path, out_path, title="Predicted and actual close"):
    fields, rows = _read(csv_path)
    if not {"date", "predicted", "actual"} <= set(fields):
        raise FormatError(f"{csv_path} is not a prediction CSV")
    x = list(range(len(rows)))
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(x, [float(r["actual"]) for r in rows], label="actual")
    ax.plot(x, [float(r["predicted"]) for r in rows], label="predicted")
    if rows:
        step = max(1, len(rows) // 6)
        ax.set_xticks(x[::step])
        ax.set_xticklabels([rows[k]["date"] for k in x[::step]], rotation=30, ha="right")
    ax.set_ylabel("close")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return Path(out_path)


def plot_csv(csv_path, out_dir):
    """Pick the figure type from the CSV header; returns the written path."""
    fields, _ = _read(csv_path)
    out = Path(out_dir) / (Path(csv_path).stem + ".svg")
    out.parent.mkdir(parents=True, exist_ok=True)
    if fields[:1] == ["epoch"]:
        return plot_history(csv_path, out)
    return plot_predictions(csv_path, out)
