"""Seeded synthetic news + price corpora with a tunable sentiment signal.

Each ticker gets a latent daily tone in [-1, 1] (an AR(1) process). Headlines
for the day are assembled from lexicon words whose class is drawn according
to that tone. The next day's log return is

    drift + coupling * (positive - negative) + volatility * noise

where (positive - negative) comes from the lexicon scorer's averaged
distribution for the day, so the planted signal is exactly what a fused
model can observe. Days without headlines contribute zero.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .dataset import PriceBar
from .sentiment import CLASSES, LexiconScorer, aggregate_daily, load_lexicon, score_headline, tokenize_and_pad

FILLER = (
    "shares", "of", "the", "company", "after", "quarterly", "results", "analysts", "say", "in", "early",
    "trading", "on", "amid", "market", "session", "report", "investors", "watch", "today", "sector",
)


@dataclass
class SynthConfig:
    tickers: int = 1
    n_bars: int = 260
    start: date = date(2019, 1, 2)
    initial_price: float = 100.0
    drift: float = 0.0
    volatility: float = 0.01
    coupling: float = 0.02
    headlines_per_day: float = 3.0
    tone_persistence: float = 0.0
    seed: int = 42


def business_days(start: date, n: int) -> list:
    out = []
    d = start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def _ticker_names(k):
    return [f"SYN{i:02d}" if k > 1 else "SYN" for i in range(k)]


def _headline(rng, ticker, cls, words_by_class):
    word = words_by_class[cls][rng.integers(len(words_by_class[cls]))]
    filler = [FILLER[j] for j in rng.choice(len(FILLER), size=4, replace=False)]
    body = filler[:2] + [word] + filler[2:]
    return f"{ticker} " + " ".join(body)


def generate(cfg: SynthConfig = SynthConfig(), lexicon=None):
    """Return ``(news_rows, bars)``; news rows are dicts in the news CSV schema."""
    lexicon = load_lexicon() if lexicon is None else lexicon
    scorer = LexiconScorer(lexicon)
    words_by_class = {c: sorted(w for w, (k, _) in lexicon.items() if k == c) for c in CLASSES}
    root = np.random.SeedSequence(cfg.seed)
    days = business_days(cfg.start, cfg.n_bars)
    news, bars = [], []
    for ticker, seq in zip(_ticker_names(cfg.tickers), root.spawn(cfg.tickers)):
        news_seed, price_seed = seq.spawn(2)
        nrng = np.random.default_rng(news_seed)
        prng = np.random.default_rng(price_seed)
        noise = prng.standard_normal(cfg.n_bars)
        rho = cfg.tone_persistence
        tone = 0.0
        signal = np.zeros(cfg.n_bars)
        for k, d in enumerate(days):
            tone = rho * tone + np.sqrt(1 - rho * rho) * nrng.uniform(-1.0, 1.0)
            tone = float(np.clip(tone, -1.0, 1.0))
            probs = np.array([1.0, 1.0 + tone, 1.0 - tone]) / 3.0
            count = nrng.poisson(cfg.headlines_per_day)
            scored = []
            for j in range(count):
                cls = CLASSES[nrng.choice(3, p=probs)]
                title = _headline(nrng, ticker, cls, words_by_class)
                url = f"https://news.example/{ticker}/{d.isoformat()}/{j}"
                news.append({"date": d.isoformat(), "ticker": ticker, "title": title, "publisher": "Synthetic Wire", "url": url})
                scored.append((d, ticker, score_headline(tokenize_and_pad(title), scorer, url)))
            if scored:
                dist = aggregate_daily(scored)[0].distribution
                signal[k] = dist.positive - dist.negative
        log_price = np.log(cfg.initial_price)
        for k, d in enumerate(days):
            if k > 0:
                log_price += cfg.drift + cfg.coupling * signal[k - 1] + cfg.volatility * noise[k]
            close = float(np.exp(log_price))
            bars.append(PriceBar(d, ticker, round(close, 6), open=round(close, 6), high=round(close * 1.005, 6),
                                 low=round(close * 0.995, 6), volume=float(1_000_000 + 1000 * k)))
    return news, bars


def write_news_csv(path, rows):
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, ["date", "ticker", "title", "publisher", "url"], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def write_prices_csv(path, bars):
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "ticker", "open", "high", "low", "close", "volume"])
        for b in bars:
            w.writerow([b.date.isoformat(), b.ticker, repr(b.open), repr(b.high), repr(b.low), repr(b.close), repr(b.volume)])
