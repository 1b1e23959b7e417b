"""Command line entry point: ``sentilstm <command> [flags]``.

Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines, then command-line flags; later sources win.
Failures print one ``<error-class>: <message>`` line to stderr and exit with
2 (configuration/validation), 3 (data) or 4 (numeric).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import sys
import warnings
from dataclasses import dataclass, fields
from datetime import date
from pathlib import Path

from . import plotting
from .dataset import SplitSpec, load_news, load_prices, stratified_split, group_by_ticker, write_rejects
from .exceptions import ArchitectureMismatchError, ConfigError, SentiLSTMError
from .metrics import evaluate, format_report_table, write_report_csv
from .models.network import ARCHITECTURES, build_model
from .pipeline import daily_sentiment, prepare
from .sentiment import LexiconScorer, load_lexicon
from .synth import SynthConfig, generate, write_news_csv, write_prices_csv
from .training import (
    TrainConfig,
    load_checkpoint,
    rolling_forecast,
    save_checkpoint,
    train,
    write_forecast,
    write_history,
)

log = logging.getLogger("sentilstm")


@dataclass
class RunConfig:
    news: str = None
    prices: str = None
    lexicon: str = None
    out: str = "runs"
    checkpoint: str = None
    arch: str = "fused_lstm"
    ticker: str = None
    window: int = 8
    max_len: int = 32
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-3
    clip_norm: float = None
    seed: int = 42
    horizon: int = 100
    train_fraction: float = 0.85
    val_fraction: float = 0.15
    synth_tickers: int = 1
    synth_bars: int = 260
    synth_start: str = "2019-01-02"
    synth_drift: float = 0.0
    synth_volatility: float = 0.01
    synth_coupling: float = 0.02
    synth_headlines_per_day: float = 3.0
    synth_tone_persistence: float = 0.0

    def problems(self) -> list:
        out = []
        if self.arch not in ARCHITECTURES:
            out.append(f"arch must be one of {', '.join(ARCHITECTURES)}, got {self.arch!r}")
        for name in ("window", "max_len", "epochs", "batch_size", "synth_tickers"):
            if getattr(self, name) < 1:
                out.append(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.horizon < 0:
            out.append(f"horizon must be >= 0, got {self.horizon}")
        if self.synth_bars < 10:
            out.append(f"synth_bars must be >= 10, got {self.synth_bars}")
        for name in ("train_fraction", "val_fraction"):
            if not 0 < getattr(self, name) < 1:
                out.append(f"{name} must lie in (0, 1), got {getattr(self, name)}")
        if self.learning_rate < 0:
            out.append(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.clip_norm is not None and self.clip_norm <= 0:
            out.append(f"clip_norm must be positive, got {self.clip_norm}")
        if not 0 <= self.seed < 2**64:
            out.append(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.synth_volatility < 0:
            out.append(f"synth_volatility must be >= 0, got {self.synth_volatility}")
        try:
            date.fromisoformat(self.synth_start)
        except ValueError:
            out.append(f"synth_start must be an ISO date, got {self.synth_start!r}")
        return out

    def train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size, seed=self.seed,
                           learning_rate=self.learning_rate, clip_norm=self.clip_norm)

    def split_spec(self) -> SplitSpec:
        return SplitSpec(self.train_fraction, self.val_fraction)

    def synth_config(self) -> SynthConfig:
        return SynthConfig(
            tickers=self.synth_tickers, n_bars=self.synth_bars, start=date.fromisoformat(self.synth_start),
            drift=self.synth_drift, volatility=self.synth_volatility, coupling=self.synth_coupling,
            headlines_per_day=self.synth_headlines_per_day, tone_persistence=self.synth_tone_persistence,
            seed=self.seed,
        )


_OPTIONAL = {"news", "prices", "lexicon", "checkpoint", "ticker", "clip_norm"}
_TYPES = {f.name: type(f.default) if f.default is not None else None for f in fields(RunConfig)}
_TYPES.update({"clip_norm": float, "news": str, "prices": str, "lexicon": str, "checkpoint": str, "ticker": str})


def _coerce(key, raw, problems):
    raw = raw.strip()
    if key in _OPTIONAL and raw.lower() in ("", "none"):
        return None
    kind = _TYPES[key]
    try:
        return kind(raw)
    except ValueError:
        problems.append(f"{key}: cannot parse {raw!r} as {kind.__name__}")
        return None


def load_config_file(path, problems=None) -> dict:
    """Parse a ``key = value`` file; unparsable entries are appended to ``problems``."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        parser.read_string("[run]\n" + path.read_text(encoding="utf-8"), source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    raise_now = problems is None
    problems = [] if problems is None else problems
    values = {}
    for key, raw in parser["run"].items():
        if key not in _TYPES:
            problems.append(f"unknown config key {key!r}")
            continue
        value = _coerce(key, raw, problems)
        if value is not None or key in _OPTIONAL:
            values[key] = value
    if problems and raise_now:
        raise ConfigError(problems)
    return values


def resolve_config(args) -> RunConfig:
    problems = []
    values = load_config_file(args.config, problems) if args.config else {}
    for key in _TYPES:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    cfg = RunConfig(**values)
    problems += cfg.problems()
    if problems:
        raise ConfigError(problems)
    return cfg


def _require(cfg, *names):
    problems = []
    for name in names:
        value = getattr(cfg, name)
        if value is None:
            problems.append(f"{name} is required for this command")
        elif not Path(value).is_file():
            problems.append(f"{name}: file not found: {value}")
    if problems:
        raise ConfigError(problems)


def _out(cfg, *parts) -> Path:
    p = Path(cfg.out).joinpath(*parts)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _load_inputs(cfg, need_news):
    _require(cfg, "prices", *(["news"] if need_news else []))
    bars, price_rejects = load_prices(cfg.prices)
    news, news_rejects = (load_news(cfg.news) if need_news else ([], []))
    out = _out(cfg)
    write_rejects(out / "price_rejects.csv", price_rejects)
    if need_news:
        write_rejects(out / "news_rejects.csv", news_rejects)
    return bars, news


def _scorer(cfg):
    return LexiconScorer(load_lexicon(cfg.lexicon))


def _prepare(cfg, arch):
    bars, news = _load_inputs(cfg, arch == "fused_lstm")
    tickers = [cfg.ticker] if cfg.ticker else None
    return prepare(bars, news, arch, cfg.window, cfg.split_spec(), _scorer(cfg), cfg.max_len, tickers)


def cmd_synth(cfg):
    news, bars = generate(cfg.synth_config(), load_lexicon(cfg.lexicon))
    out = _out(cfg)
    write_news_csv(out / "news.csv", news)
    write_prices_csv(out / "prices.csv", bars)
    print(f"wrote {len(news)} headlines to {out / 'news.csv'} and {len(bars)} bars to {out / 'prices.csv'}")


def cmd_ingest(cfg):
    _require(cfg, "news", "prices")
    bars, price_rejects = load_prices(cfg.prices)
    news, news_rejects = load_news(cfg.news)
    out = _out(cfg)
    write_rejects(out / "price_rejects.csv", price_rejects)
    write_rejects(out / "news_rejects.csv", news_rejects)
    daily = daily_sentiment(news, bars, _scorer(cfg), cfg.max_len)
    with (out / "daily_sentiment.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "ticker", "neutral", "positive", "negative", "headline_count"])
        for d in daily:
            dist = d.distribution
            w.writerow([d.date.isoformat(), d.ticker, repr(dist.neutral), repr(dist.positive), repr(dist.negative), d.headline_count])
    totals = stratified_split(group_by_ticker(bars), cfg.split_spec()).totals()
    print(f"news: {len(news)} records, {len(news_rejects)} rejects")
    print(f"prices: {len(bars)} bars, {len(price_rejects)} rejects")
    print(f"daily sentiment rows: {len(daily)}")
    print("split: " + ", ".join(f"{k}={v}" for k, v in totals.items()))


def _train_arch(cfg, arch):
    data = _prepare(cfg, arch)
    model = build_model(arch, cfg.seed, cfg.window)
    ckpt, history = train(model, data.train, data.validation, cfg.train_config(), scalers=data.scalers)
    out = _out(cfg, arch)
    save_checkpoint(out / "checkpoint.ckpt", ckpt)
    write_history(out / "history.csv", history)
    return data, ckpt


def cmd_train(cfg):
    _, ckpt = _train_arch(cfg, cfg.arch)
    print(f"{cfg.arch}: best epoch {ckpt.epoch}, validation loss {ckpt.validation_loss:.6g} (normalized MSE)")


def _load_matching_checkpoint(cfg):
    path = Path(cfg.checkpoint) if cfg.checkpoint else Path(cfg.out) / cfg.arch / "checkpoint.ckpt"
    ckpt = load_checkpoint(path)
    if ckpt.arch != cfg.arch:
        raise ArchitectureMismatchError(f"checkpoint {path} holds a {ckpt.arch} model but arch is {cfg.arch}")
    return ckpt


def cmd_evaluate(cfg):
    ckpt = _load_matching_checkpoint(cfg)
    data = _prepare(cfg, cfg.arch)
    report, rows = evaluate(ckpt, data.test)
    out = _out(cfg, cfg.arch)
    write_report_csv(out / "report.csv", [report])
    (out / "report.txt").write_text(format_report_table([report]), encoding="utf-8")
    write_forecast(out / "predictions.csv", rows)
    print(format_report_table([report]), end="")


def cmd_forecast(cfg):
    ckpt = _load_matching_checkpoint(cfg)
    data = _prepare(cfg, cfg.arch)
    ticker = cfg.ticker or next(iter(data.bars))
    rows = rolling_forecast(ckpt, data.test_bars(ticker), data.sentiment.get(ticker), cfg.horizon)
    out = _out(cfg, cfg.arch)
    write_forecast(out / "forecast.csv", rows)
    print(f"wrote {len(rows)} forecast rows to {out / 'forecast.csv'}")


def cmd_plot(cfg, paths):
    if not paths:
        raise ConfigError("plot needs at least one history or prediction CSV")
    out = _out(cfg, "plots")
    for p in paths:
        print(plotting.plot_csv(p, out))


def cmd_compare(cfg):
    reports = []
    for arch in ARCHITECTURES:
        data, ckpt = _train_arch(cfg, arch)
        report, rows = evaluate(ckpt, data.test)
        write_forecast(_out(cfg, arch) / "predictions.csv", rows)
        reports.append(report)
    out = _out(cfg, "compare")
    write_report_csv(out / "report.csv", reports)
    table = format_report_table(reports)
    (out / "report.txt").write_text(table, encoding="utf-8")
    print(table, end="")


COMMANDS = ("synth", "ingest", "train", "evaluate", "forecast", "plot", "compare")
HANDLERS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "forecast": cmd_forecast,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sentilstm", description="Sentiment-fused stock price forecasting")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("paths", nargs="*", help="CSV files for the plot command")
    parser.add_argument("--config", help="key = value settings file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--arch", choices=ARCHITECTURES)
    parser.add_argument("--ticker")
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--horizon", type=int)
    parser.add_argument("--out")
    parser.add_argument("--news")
    parser.add_argument("--prices")
    parser.add_argument("--lexicon")
    parser.add_argument("--checkpoint")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_intermixed_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            cfg = resolve_config(args)
            if args.command == "plot":
                cmd_plot(cfg, args.paths)
            else:
                HANDLERS[args.command](cfg)
            code = 0
        except SentiLSTMError as exc:
            print(f"{exc.error_class}: {exc}", file=sys.stderr)
            code = exc.exit_code
        finally:
            for w in caught:
                print(f"warning: {w.message}", file=sys.stderr)
    return code


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
