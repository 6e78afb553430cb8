"""Deterministic text normalization and TF-IDF featurization.

The pipeline is: NFC-normalize, lowercase, split on any character outside
[a-z0-9], drop stop words, strip common suffixes, drop one-character tokens
unless numeric. A rule-based suffix stemmer stands in for dictionary
lemmatization; the rules are fixed below so the mapping is reproducible.

IDF uses smoothed weights, idf(t) = ln((1+N)/(1+df(t))) + 1, so no fitted
term ever gets weight zero. Term frequency is the raw in-document count.
"""

from __future__ import annotations

import json
import math
import re
import unicodedata
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from ._stopwords import STOP_WORDS

_TOKEN_SPLIT = re.compile(r"[^a-z0-9]+")

# Ordered suffix-stripping rules: (suffix, replacement). The first rule whose
# removal leaves at least _MIN_STEM characters is applied; at most one rule
# fires per token.
_SUFFIX_RULES = (
    ("sses", "ss"),
    ("ies", "y"),
    ("ied", "y"),
    ("ying", "y"),
    ("ings", ""),
    ("ing", ""),
    ("edly", ""),
    ("ation", "ate"),
    ("ments", "ment"),
    ("ment", ""),
    ("ness", ""),
    ("ed", ""),
    ("ly", ""),
    # "es" drops only after sibilants (boxes, watches, viruses); elsewhere the
    # bare "s" rule keeps the final e so plural and singular share a stem
    ("ches", "ch"),
    ("shes", "sh"),
    ("xes", "x"),
    ("zes", "z"),
    ("s", ""),
)
_MIN_STEM = 3
# Final-s endings that are part of the word, not a plural marker.
_S_KEEPERS = ("ss", "us", "is")


class TextPrepError(ValueError):
    """Raised for featurization contract violations."""


@dataclass(frozen=True)
class TextPrepConfig:
    """Normalization options; defaults match the standard pipeline."""

    stem: bool = True
    remove_stop_words: bool = True
    min_df: int = 1
    l2_normalize: bool = True

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "TextPrepConfig":
        return cls(**raw)


def stem(token: str) -> str:
    """Strip one common English suffix, guarding short stems."""
    for suffix, repl in _SUFFIX_RULES:
        if token.endswith(suffix):
            if suffix == "s" and token.endswith(_S_KEEPERS):
                continue
            candidate = token[: len(token) - len(suffix)] + repl
            if len(candidate) >= _MIN_STEM:
                return candidate
    return token


def tokenize(text: str, config: TextPrepConfig = TextPrepConfig()) -> list[str]:
    """Normalize a claim into a token stream.

    Empty input yields an empty stream. Every emitted token is non-empty,
    lowercase, and free of punctuation.
    """
    normalized = unicodedata.normalize("NFC", text).lower()
    tokens = []
    for raw in _TOKEN_SPLIT.split(normalized):
        if not raw:
            continue
        if config.remove_stop_words and raw in STOP_WORDS:
            continue
        token = stem(raw) if config.stem else raw
        if len(token) < 2 and not token.isdigit():
            continue
        tokens.append(token)
    return tokens


@dataclass(frozen=True)
class FeatureVector:
    """Sparse non-negative feature values with strictly increasing indices."""

    indices: tuple[int, ...]
    values: tuple[float, ...]
    dimension: int

    def __post_init__(self) -> None:
        if len(self.indices) != len(self.values):
            raise TextPrepError("indices and values length mismatch")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise TextPrepError("indices must be strictly increasing")
        if self.indices and self.indices[-1] >= self.dimension:
            raise TextPrepError("index out of range")
        for v in self.values:
            if not math.isfinite(v) or v < 0:
                raise TextPrepError(f"feature value {v} not finite and >= 0")

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dimension)
        if self.indices:
            dense[list(self.indices)] = self.values
        return dense

    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.values))


def stack_features(vectors: Sequence[FeatureVector]) -> np.ndarray:
    """Dense (n, V) matrix from a batch of feature vectors."""
    if not vectors:
        raise TextPrepError("no feature vectors to stack")
    dim = vectors[0].dimension
    out = np.zeros((len(vectors), dim))
    for row, vec in enumerate(vectors):
        if vec.dimension != dim:
            raise TextPrepError("mixed feature dimensions")
        if vec.indices:
            out[row, list(vec.indices)] = vec.values
    return out


@dataclass
class Vectorizer:
    """Fitted vocabulary with per-column IDF weights.

    Column indices run 0..V-1 in lexicographic term order, independent of
    corpus order. Immutable after fit; transform is safe to run in parallel.
    """

    vocabulary: dict[str, int]
    idf: np.ndarray
    doc_count: int
    config: TextPrepConfig

    @property
    def dimension(self) -> int:
        return len(self.vocabulary)

    def terms(self) -> list[str]:
        """Vocabulary terms in column order."""
        out = [""] * len(self.vocabulary)
        for term, col in self.vocabulary.items():
            out[col] = term
        return out

    def save(self, path: str | Path) -> None:
        payload = {
            "terms": self.terms(),
            "idf": list(map(float, self.idf)),
            "doc_count": self.doc_count,
            "config": self.config.to_dict(),
        }
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vectorizer":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        vocabulary = {term: col for col, term in enumerate(payload["terms"])}
        return cls(
            vocabulary=vocabulary,
            idf=np.asarray(payload["idf"], dtype=float),
            doc_count=int(payload["doc_count"]),
            config=TextPrepConfig.from_dict(payload["config"]),
        )


def fit_vectorizer(corpus: Sequence[Sequence[str]], config: TextPrepConfig = TextPrepConfig()) -> Vectorizer:
    """Fit vocabulary and IDF weights on tokenized documents.

    idf(t) = ln((1+N)/(1+df(t))) + 1 where N is the document count and df(t)
    the number of documents containing t at least once.
    """
    if not corpus:
        raise TextPrepError("empty corpus")
    df: dict[str, int] = {}
    for tokens in corpus:
        for token in set(tokens):
            df[token] = df.get(token, 0) + 1
    kept = sorted(t for t, n in df.items() if n >= config.min_df)
    if not kept:
        raise TextPrepError("empty vocabulary after thresholding")
    n_docs = len(corpus)
    vocabulary = {term: col for col, term in enumerate(kept)}
    idf = np.array([math.log((1 + n_docs) / (1 + df[t])) + 1.0 for t in kept])
    return Vectorizer(vocabulary=vocabulary, idf=idf, doc_count=n_docs, config=config)


def transform(vectorizer: Vectorizer, tokens: Sequence[str]) -> FeatureVector:
    """count(t) * idf(t) per vocabulary term, L2-normalized when enabled.

    Out-of-vocabulary tokens are ignored; an all-OOV stream yields the zero
    vector, to which no normalization is applied.
    """
    counts: dict[int, int] = {}
    for token in tokens:
        col = vectorizer.vocabulary.get(token)
        if col is not None:
            counts[col] = counts.get(col, 0) + 1
    if not counts:
        return FeatureVector((), (), vectorizer.dimension)
    indices = sorted(counts)
    values = [counts[col] * float(vectorizer.idf[col]) for col in indices]
    if vectorizer.config.l2_normalize:
        norm = math.sqrt(sum(v * v for v in values))
        values = [v / norm for v in values]
    return FeatureVector(tuple(indices), tuple(values), vectorizer.dimension)


def featurize_texts(
    texts: Iterable[str],
    config: TextPrepConfig = TextPrepConfig(),
    vectorizer: Optional[Vectorizer] = None,
) -> tuple[Vectorizer, list[FeatureVector]]:
    """Tokenize texts and transform them, fitting a vectorizer when none given."""
    streams = [tokenize(text, config) for text in texts]
    if vectorizer is None:
        vectorizer = fit_vectorizer(streams, config)
    return vectorizer, [transform(vectorizer, tokens) for tokens in streams]
