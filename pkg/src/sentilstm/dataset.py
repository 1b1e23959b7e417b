"""CSV ingestion, per-ticker chronological splits, scaling and windowing.

News CSV header:  ``date,ticker,title,publisher,url``
Price CSV header: ``date,ticker,open,high,low,close,volume``

Dates are ISO ``YYYY-MM-DD``. Rows that fail validation are collected as
:class:`Reject` entries (1-based data row number plus reason) instead of
being dropped silently.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from bisect import bisect_left
from collections import defaultdict
from dataclasses import dataclass, field, replace
from datetime import date
from fractions import Fraction
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .exceptions import ArgumentError, DegenerateSeriesError, FormatError, IoError
from .sentiment import UNIFORM

log = logging.getLogger(__name__)

NEWS_COLUMNS = ("date", "ticker", "title", "publisher", "url")
PRICE_COLUMNS = ("date", "ticker", "open", "high", "low", "close", "volume")
WINDOW = 8
MIN_TICKER_BARS = 10


@dataclass(frozen=True)
class NewsRecord:
    title: str
    publisher: str
    date: date
    ticker: str
    url: str


@dataclass(frozen=True)
class PriceBar:
    date: date
    ticker: str
    close: float
    open: float = math.nan
    high: float = math.nan
    low: float = math.nan
    volume: float = math.nan


class Reject(NamedTuple):
    row_number: int
    reason: str


class Ingested(NamedTuple):
    records: list
    rejects: list


def _open_csv(path, required):
    path = Path(path)
    if not path.is_file():
        raise IoError(f"file not found: {path}")
    fh = path.open(encoding="utf-8", newline="")
    reader = csv.DictReader(fh)
    header = reader.fieldnames or []
    for col in required:
        if col not in header:
            fh.close()
            raise FormatError(f"missing required column {col!r} in {path}")
    return fh, reader


def _parse_date(text):
    try:
        return date.fromisoformat((text or "").strip())
    except ValueError:
        return None


def load_news(path, date_range=None) -> Ingested:
    """Read a news CSV. ``date_range`` is an optional inclusive ``(first, last)``."""
    fh, reader = _open_csv(path, NEWS_COLUMNS)
    records, rejects = [], []
    with fh:
        for k, row in enumerate(reader, start=1):
            if None in row or any(row[c] is None for c in NEWS_COLUMNS):
                rejects.append(Reject(k, "wrong field count"))
                continue
            d = _parse_date(row["date"])
            if d is None:
                rejects.append(Reject(k, "bad date"))
                continue
            if date_range is not None and not (date_range[0] <= d <= date_range[1]):
                rejects.append(Reject(k, "date out of range"))
                continue
            ticker = row["ticker"].strip()
            if not ticker:
                rejects.append(Reject(k, "missing ticker"))
                continue
            records.append(NewsRecord(row["title"], row["publisher"], d, ticker, row["url"]))
    return Ingested(records, rejects)


def _parse_real(text):
    text = (text or "").strip()
    if not text:
        return math.nan
    return float(text)


def load_prices(path) -> Ingested:
    """Read a price CSV; bars come back sorted by (ticker, date).

    Duplicate (date, ticker) rows raise :class:`FormatError` because the
    close would be ambiguous.
    """
    fh, reader = _open_csv(path, PRICE_COLUMNS)
    bars, rejects = [], []
    seen = {}
    with fh:
        for k, row in enumerate(reader, start=1):
            if None in row or any(row[c] is None for c in PRICE_COLUMNS):
                rejects.append(Reject(k, "wrong field count"))
                continue
            d = _parse_date(row["date"])
            if d is None:
                rejects.append(Reject(k, "bad date"))
                continue
            ticker = row["ticker"].strip()
            if not ticker:
                rejects.append(Reject(k, "missing ticker"))
                continue
            try:
                close = float(row["close"])
            except ValueError:
                rejects.append(Reject(k, "bad close"))
                continue
            if not math.isfinite(close):
                rejects.append(Reject(k, "bad close"))
                continue
            if close <= 0:
                rejects.append(Reject(k, "non-positive close"))
                continue
            try:
                extra = {c: _parse_real(row[c]) for c in ("open", "high", "low", "volume")}
            except ValueError:
                rejects.append(Reject(k, "bad numeric field"))
                continue
            key = (d, ticker)
            if key in seen:
                raise FormatError(f"duplicate bar for {ticker} on {d} (rows {seen[key]} and {k})")
            seen[key] = k
            bars.append(PriceBar(d, ticker, close, **extra))
    bars.sort(key=lambda b: (b.ticker, b.date))
    return Ingested(bars, rejects)


def write_rejects(path, rejects):
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row_number", "reason"])
        w.writerows(rejects)
    return path


def group_by_ticker(items) -> dict:
    out = defaultdict(list)
    for it in items:
        out[it.ticker].append(it)
    return dict(sorted(out.items()))


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.85
    val_fraction_of_train: float = 0.15

    def __post_init__(self):
        for name in ("train_fraction", "val_fraction_of_train"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ArgumentError(f"{name} must lie in (0, 1), got {v}")


@dataclass
class Split:
    train: dict
    validation: dict
    test: dict
    excluded: list = field(default_factory=list)

    def totals(self) -> dict:
        t, v, s = (sum(len(x) for x in part.values()) for part in (self.train, self.validation, self.test))
        return {"train": t, "validation": v, "train+validation": t + v, "test": s, "total": t + v + s}


def _floor_frac(n, frac):
    # exact decimal fraction, so 0.85 * 100 is 85 and never 84
    return int(n * Fraction(str(frac)))


def split_counts(n, spec: SplitSpec = SplitSpec()):
    """``(train, validation, test)`` sizes for one ticker with ``n`` records."""
    trval = _floor_frac(n, spec.train_fraction)
    train = _floor_frac(trval, 1 - Fraction(str(spec.val_fraction_of_train)))
    return train, trval - train, n - trval


def stratified_split(records: dict, spec: SplitSpec = SplitSpec()) -> Split:
    """Chronological per-ticker split.

    ``records`` maps ticker to a date-sorted sequence. The first
    ``floor(train_fraction * n)`` records of each ticker form train+validation
    and the rest the test set; train+validation is cut the same way with
    ``1 - val_fraction_of_train``. Tickers with fewer than 10 records are
    excluded with a warning.
    """
    train, val, test, excluded = {}, {}, {}, []
    for ticker, seq in records.items():
        n = len(seq)
        if n < MIN_TICKER_BARS:
            warnings.warn(f"ticker {ticker} has {n} records (< {MIN_TICKER_BARS}); excluded from split", stacklevel=2)
            excluded.append(ticker)
            continue
        a, b, _ = split_counts(n, spec)
        train[ticker] = seq[:a]
        val[ticker] = seq[a : a + b]
        test[ticker] = seq[a + b :]
    return Split(train, val, test, excluded)


@dataclass(frozen=True)
class MinMaxScaler:
    min: float
    max: float

    def __post_init__(self):
        if not self.max > self.min:
            raise DegenerateSeriesError(f"scaler needs max > min, got min={self.min} max={self.max}")

    def normalize(self, x):
        return (np.asarray(x, dtype=np.float64) - self.min) / (self.max - self.min)

    def denormalize(self, y):
        return np.asarray(y, dtype=np.float64) * (self.max - self.min) + self.min


def fit_minmax(values) -> MinMaxScaler:
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size < 2:
        raise ArgumentError("min-max scaling needs at least 2 values")
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        raise DegenerateSeriesError(f"constant series ({lo}) cannot be min-max scaled")
    return MinMaxScaler(lo, hi)


def normalize(scaler: MinMaxScaler, x):
    """``(x - min) / (max - min)``; values outside the fitted range map outside [0, 1]."""
    out = scaler.normalize(x)
    return float(out) if out.ndim == 0 else out


def denormalize(scaler: MinMaxScaler, y):
    out = scaler.denormalize(y)
    return float(out) if out.ndim == 0 else out


def roll_to_trading_days(scored, calendars: dict) -> list:
    """Move each ``(date, ticker, dist)`` onto the next trading day of its ticker.

    News dated on a trading day stays there; weekend and holiday news moves
    forward. News after a ticker's last bar, or for tickers without prices,
    is dropped.
    """
    out = []
    dropped = 0
    for d, ticker, dist in scored:
        cal = calendars.get(ticker)
        if not cal:
            dropped += 1
            continue
        k = bisect_left(cal, d)
        if k == len(cal):
            dropped += 1
            continue
        out.append((cal[k], ticker, dist))
    if dropped:
        log.info("dropped %d headlines with no trading day on or after their date", dropped)
    return out


def sentiment_lookup(daily, ticker) -> dict:
    """``date -> SentimentDistribution`` for one ticker."""
    return {d.date: d.distribution for d in daily if d.ticker == ticker}


@dataclass
class WindowSample:
    inputs: np.ndarray
    target: float
    ticker: str
    target_date: date
    # date whose sentiment fills the fused block; None means uniform fallback
    sentiment_date: date = None


def build_windows(bars, sentiment=None, window: int = WINDOW, fused: bool = False, first_target: int = None):
    """Slide a ``window``-step context over normalized bars.

    Target ``t`` runs from ``max(window, first_target)`` to ``n - 1``; inputs
    are steps ``t-window .. t-1``. In fused mode every time step carries the
    aggregated sentiment of the last input day (step ``t-1``) in positions
    0-2 and the normalized close in position 3; days without news fall back
    to the uniform distribution. Price-only mode has one feature.
    """
    if window < 1:
        raise ArgumentError(f"window must be >= 1, got {window}")
    sentiment = sentiment or {}
    closes = np.array([b.close for b in bars], dtype=np.float64)
    n = len(bars)
    start = window if first_target is None else max(window, first_target)
    samples = []
    for t in range(start, n):
        ctx = closes[t - window : t]
        if fused:
            last = bars[t - 1].date
            dist = sentiment.get(last)
            block = (UNIFORM if dist is None else dist).as_array()
            inputs = np.empty((window, 4))
            inputs[:, :3] = block
            inputs[:, 3] = ctx
            samples.append(WindowSample(inputs, float(closes[t]), bars[t].ticker, bars[t].date,
                                        last if dist is not None else None))
        else:
            samples.append(WindowSample(ctx.reshape(window, 1).copy(), float(closes[t]), bars[t].ticker, bars[t].date))
    return samples


def normalize_bars(bars, scaler: MinMaxScaler):
    return [replace(b, close=float(scaler.normalize(b.close))) for b in bars]


def stack_samples(samples, arch: str):
    """Arrays ``(X, y)`` in the input layout of ``arch``."""
    if not samples:
        width = {"fused_lstm": (WINDOW, 4), "price_lstm": (WINDOW, 1), "dnn": (WINDOW,)}[arch]
        return np.zeros((0,) + width), np.zeros((0, 1))
    X = np.stack([s.inputs for s in samples])
    if arch == "dnn":
        X = X[..., -1]
    y = np.array([[s.target] for s in samples])
    return X, y
