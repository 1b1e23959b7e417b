from datetime import date

import numpy as np
import pytest

from sentilstm.dataset import NewsRecord, group_by_ticker, load_news, load_prices
from sentilstm.pipeline import daily_sentiment
from sentilstm.sentiment import load_lexicon
from sentilstm.synth import FILLER, SynthConfig, business_days, generate, write_news_csv, write_prices_csv


def roundtrip(tmp_path, cfg):
    news, bars = generate(cfg)
    write_news_csv(tmp_path / "news.csv", news)
    write_prices_csv(tmp_path / "prices.csv", bars)
    return load_news(tmp_path / "news.csv"), load_prices(tmp_path / "prices.csv")


def signal_and_returns(cfg):
    """Per ticker: (positive - negative) of day k-1 and the log return into day k."""
    news, bars = generate(cfg)
    recs = [NewsRecord(r["title"], r["publisher"], date.fromisoformat(r["date"]), r["ticker"], r["url"]) for r in news]
    daily = {(d.ticker, d.date): d.distribution for d in daily_sentiment(recs, bars)}
    sig, ret = [], []
    for ticker, seq in group_by_ticker(bars).items():
        closes = np.array([b.close for b in seq])
        dists = [daily.get((ticker, b.date)) for b in seq]
        s = np.array([d.positive - d.negative if d else 0.0 for d in dists])
        sig.append(s[:-1])
        ret.append(np.diff(np.log(closes)))
    return np.concatenate(sig), np.concatenate(ret)


def test_roundtrip_zero_rejects(tmp_path):
    (news, nrej), (bars, prej) = roundtrip(tmp_path, SynthConfig(tickers=1, n_bars=260, seed=3))
    assert nrej == [] and prej == []
    assert len(bars) == 260 and len(news) > 0
    assert all(b.close > 0 for b in bars)


def test_deterministic(tmp_path):
    a = generate(SynthConfig(tickers=2, n_bars=30, seed=11))
    b = generate(SynthConfig(tickers=2, n_bars=30, seed=11))
    c = generate(SynthConfig(tickers=2, n_bars=30, seed=12))
    assert a == b and a != c


def test_filler_outside_lexicon():
    lex = load_lexicon()
    assert not set(FILLER) & set(lex)


def test_business_days():
    days = business_days(SynthConfig().start, 10)
    assert len(days) == 10 and all(d.weekday() < 5 for d in days)


def test_price_path_independent_of_coupling_zero_news():
    # with no coupling the price path only depends on its own noise stream
    a = generate(SynthConfig(n_bars=50, coupling=0.0, headlines_per_day=1, seed=5))[1]
    b = generate(SynthConfig(n_bars=50, coupling=0.0, headlines_per_day=6, seed=5))[1]
    assert [x.close for x in a] == [x.close for x in b]


def test_positive_days_raise_next_return():
    cfg = SynthConfig(tickers=20, n_bars=1100, drift=0.0, volatility=0.01, coupling=0.02, seed=2024)
    sig, ret = signal_and_returns(cfg)
    pos = sig > 0
    assert pos.sum() >= 10_000 * 0.45 and len(ret) >= 10_000
    after_pos = ret[pos]
    se = after_pos.std(ddof=1) / np.sqrt(len(after_pos))
    assert after_pos.mean() - cfg.drift > 5 * se
    # the planted effect has the size the generator promises
    np.testing.assert_allclose(after_pos.mean(), cfg.coupling * sig[pos].mean(), atol=5 * se)


def test_zero_coupling_independent():
    cfg = SynthConfig(tickers=10, n_bars=1100, coupling=0.0, seed=99)
    sig, ret = signal_and_returns(cfg)
    r = np.corrcoef(sig, ret)[0, 1]
    assert abs(r) < 4 / np.sqrt(len(ret))


@pytest.mark.parametrize("k,names", [(1, ["SYN"]), (3, ["SYN00", "SYN01", "SYN02"])])
def test_ticker_names(k, names):
    _, bars = generate(SynthConfig(tickers=k, n_bars=12))
    assert sorted({b.ticker for b in bars}) == names
