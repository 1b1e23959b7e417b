"""From raw news and price records to train/validation/test windows."""

from __future__ import annotations

from dataclasses import dataclass

from .dataset import (
    WINDOW,
    SplitSpec,
    build_windows,
    fit_minmax,
    group_by_ticker,
    normalize_bars,
    roll_to_trading_days,
    sentiment_lookup,
    stack_samples,
    stratified_split,
)
from .exceptions import ArgumentError
from .sentiment import DEFAULT_MAX_LEN, aggregate_daily, score_news


@dataclass
class PreparedData:
    arch: str
    window: int
    train: list
    validation: list
    test: list
    scalers: dict
    bars: dict
    sentiment: dict
    split: object

    def arrays(self, part: str):
        return stack_samples(getattr(self, part), self.arch)

    def test_bars(self, ticker, context: int = None):
        """Raw bars of a ticker's test period preceded by ``context`` bars."""
        context = self.window if context is None else context
        start = len(self.split.train[ticker]) + len(self.split.validation[ticker])
        return self.bars[ticker][max(0, start - context) :]


def daily_sentiment(news, bars, scorer=None, max_len: int = DEFAULT_MAX_LEN):
    """Score headlines, move them onto trading days and average per (date, ticker)."""
    calendars = {t: [b.date for b in seq] for t, seq in group_by_ticker(bars).items()}
    scored = score_news(news, scorer, max_len)
    return aggregate_daily(roll_to_trading_days(scored, calendars))


def prepare(
    bars,
    news=None,
    arch: str = "fused_lstm",
    window: int = WINDOW,
    split_spec: SplitSpec = SplitSpec(),
    scorer=None,
    max_len: int = DEFAULT_MAX_LEN,
    tickers=None,
    daily=None,
) -> PreparedData:
    """Chronological per-ticker split, train-only scaling and windowing.

    Validation and test windows take their context from the bars right
    before the split boundary, so every split keeps all of its targets.
    """
    by_ticker = group_by_ticker(bars)
    if tickers:
        missing = [t for t in tickers if t not in by_ticker]
        if missing:
            raise ArgumentError(f"no price data for tickers {missing}")
        by_ticker = {t: by_ticker[t] for t in tickers}
    split = stratified_split(by_ticker, split_spec)
    fused = arch == "fused_lstm"
    lookups = {}
    if fused:
        if daily is None:
            daily = daily_sentiment(news or [], [b for seq in by_ticker.values() for b in seq], scorer, max_len)
        lookups = {t: sentiment_lookup(daily, t) for t in split.train}
    train, val, test, scalers = [], [], [], {}
    for t in split.train:
        a = len(split.train[t])
        b = len(split.validation[t])
        scaler = fit_minmax([bar.close for bar in split.train[t]])
        scalers[t] = scaler
        norm = normalize_bars(by_ticker[t], scaler)
        sent = lookups.get(t)
        train += build_windows(norm[:a], sent, window, fused)
        val += build_windows(norm[: a + b], sent, window, fused, first_target=a)
        test += build_windows(norm, sent, window, fused, first_target=a + b)
    return PreparedData(arch, window, train, val, test, scalers,
                        {t: by_ticker[t] for t in split.train}, lookups, split)
