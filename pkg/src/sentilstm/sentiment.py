"""Headline scoring and per-day sentiment aggregation.

A scorer maps a padded token sequence to three logits in the fixed class
order (neutral, positive, negative); softmax turns them into a probability
vector. Per (date, ticker) the probability vectors are averaged component
wise. Probabilities, not logits, are averaged.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Protocol, Sequence, Union

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import ArgumentError, FormatError, IoError, ScorerError
from .numerics import softmax

PAD = "<PAD>"
CLASSES = ("neutral", "positive", "negative")
DEFAULT_MAX_LEN = 32

_PUNCT = re.compile(r"[^\w\s]")


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple
    pad_count: int

    @property
    def max_len(self) -> int:
        return len(self.tokens)

    @property
    def words(self) -> tuple:
        return tuple(t for t in self.tokens if t != PAD)


@dataclass(frozen=True)
class SentimentDistribution:
    neutral: float
    positive: float
    negative: float

    def __post_init__(self):
        vals = self.as_array()
        if np.any(vals < 0) or np.any(vals > 1) or abs(vals.sum() - 1.0) > 1e-9:
            raise ArgumentError(f"not a probability vector: {tuple(vals)}")

    @classmethod
    def from_array(cls, values) -> "SentimentDistribution":
        n, p, g = (float(v) for v in values)
        return cls(n, p, g)

    @classmethod
    def uniform(cls) -> "SentimentDistribution":
        return cls(1 / 3, 1 / 3, 1 / 3)

    def as_array(self) -> np.ndarray:
        return np.array([self.neutral, self.positive, self.negative])


UNIFORM = SentimentDistribution.uniform()


@dataclass(frozen=True)
class DailySentiment:
    date: object
    ticker: str
    distribution: SentimentDistribution
    headline_count: int


def tokenize_and_pad(headline: str, max_len: int = DEFAULT_MAX_LEN) -> TokenSequence:
    """Lowercase, drop punctuation, split on whitespace, truncate, then pad."""
    if max_len < 1:
        raise ArgumentError(f"max_len must be >= 1, got {max_len}")
    words = _PUNCT.sub("", (headline or "").lower()).split()[:max_len]
    pad = max_len - len(words)
    return TokenSequence(tuple(words) + (PAD,) * pad, pad)


class SentimentScorer(Protocol):
    def logits(self, tokens: TokenSequence) -> Sequence[float]: ...


Lexicon = dict


def parse_lexicon(lines: Iterable[str]) -> Lexicon:
    lexicon = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError(f"expected word<TAB>class<TAB>weight, got {len(parts)} fields", line=lineno)
        word, cls, weight = (p.strip() for p in parts)
        if not word:
            raise FormatError("empty word", line=lineno)
        if cls not in CLASSES:
            raise FormatError(f"unknown class {cls!r}", line=lineno)
        try:
            w = float(weight)
        except ValueError:
            raise FormatError(f"weight {weight!r} is not a decimal", line=lineno) from None
        if not np.isfinite(w):
            raise FormatError(f"weight {weight!r} is not finite", line=lineno)
        lexicon[word.lower()] = (cls, w)
    return lexicon


def load_lexicon(path: Union[str, Path, None] = None) -> Lexicon:
    """Read a lexicon file; ``None`` loads the bundled financial starter lexicon."""
    if path is None:
        text = resources.files("sentilstm.data").joinpath("financial_lexicon.tsv").read_text("utf-8")
        return parse_lexicon(text.splitlines())
    path = Path(path)
    if not path.is_file():
        raise IoError(f"lexicon file not found: {path}")
    with path.open(encoding="utf-8") as fh:
        return parse_lexicon(fh)


def lexicon_score(tokens: TokenSequence, lexicon: Lexicon) -> np.ndarray:
    logits = np.zeros(3)
    for tok in tokens.tokens:
        if tok == PAD:
            continue
        hit = lexicon.get(tok)
        if hit is not None:
            logits[CLASSES.index(hit[0])] += hit[1]
    return logits


class LexiconScorer:
    """Deterministic word-weight scorer; safe for concurrent read-only use."""

    def __init__(self, lexicon: Lexicon = None):
        self.lexicon = load_lexicon() if lexicon is None else lexicon

    def logits(self, tokens: TokenSequence) -> np.ndarray:
        return lexicon_score(tokens, self.lexicon)


def score_headline(
    tokens: TokenSequence,
    scorer: Union[SentimentScorer, Callable],
    headline_id=None,
) -> SentimentDistribution:
    fn = scorer.logits if hasattr(scorer, "logits") else scorer
    try:
        logits = np.asarray(fn(tokens), dtype=np.float64)
    except Exception as exc:
        raise ScorerError(str(exc), headline_id) from exc
    if logits.shape != (3,) or not np.all(np.isfinite(logits)):
        raise ScorerError(f"scorer must return 3 finite logits, got {logits!r}", headline_id)
    return SentimentDistribution.from_array(softmax(logits))


def aggregate_daily(scored) -> list:
    """Mean distribution per (date, ticker), sorted by (ticker, date).

    ``scored`` is an iterable of ``(date, ticker, SentimentDistribution)``.
    """
    groups = defaultdict(list)
    for date, ticker, dist in scored:
        groups[(ticker, date)].append(dist.as_array())
    out = []
    for (ticker, date) in sorted(groups):
        rows = groups[(ticker, date)]
        # fixed summation order keeps the mean independent of input order
        rows.sort(key=tuple)
        mean = np.sum(rows, axis=0) / len(rows)
        out.append(DailySentiment(date, ticker, SentimentDistribution.from_array(mean), len(rows)))
    return out


def score_news(records, scorer=None, max_len: int = DEFAULT_MAX_LEN) -> list:
    """Score news records into ``(date, ticker, distribution)`` triples."""
    scorer = LexiconScorer() if scorer is None else scorer
    out = []
    for k, rec in enumerate(records):
        dist = score_headline(tokenize_and_pad(rec.title, max_len), scorer, headline_id=getattr(rec, "url", k) or k)
        out.append((rec.date, rec.ticker, dist))
    return out


class HeadlineSentimentTransformer(TransformerMixin, BaseEstimator):
    """Map raw headlines to (neutral, positive, negative) probability rows.

    Parameters
    ----------
    lexicon_path : str or None
        Lexicon file; ``None`` uses the bundled starter lexicon.
    max_len : int
        Padded token length per headline.
    scorer : object or None
        Any object with a ``logits(TokenSequence)`` method. Overrides
        ``lexicon_path`` when given.
    """

    def __init__(self, lexicon_path=None, max_len=DEFAULT_MAX_LEN, scorer=None):
        self.lexicon_path = lexicon_path
        self.max_len = max_len
        self.scorer = scorer

    def fit(self, X=None, y=None):
        if self.scorer is not None:
            self.scorer_ = self.scorer
        else:
            self.scorer_ = LexiconScorer(load_lexicon(self.lexicon_path))
        return self

    def transform(self, X):
        check_is_fitted(self, "scorer_")
        rows = [
            score_headline(tokenize_and_pad(h, self.max_len), self.scorer_, headline_id=k).as_array()
            for k, h in enumerate(X)
        ]
        return np.array(rows).reshape(-1, 3)

    def get_feature_names_out(self, input_features=None):
        return np.array(CLASSES, dtype=object)
