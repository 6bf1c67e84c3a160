"""TF-IDF vectorizer with the knobs the baseline models grid-search.

Pinned formulas (these make tests bit-stable):

    tokens     word analyzer: lowercased unicode-alphanumeric runs;
               char analyzer: character n-grams of the lowercased raw string
    idf(t)   = ln((1 + N) / (1 + df(t))) + 1
    tf       = count, or 1 + ln(count) when sublinear_tf
    cell     = tf * idf, rows L2-normalized (zero rows stay zero)

The vocabulary keeps the ``max_features`` most frequent terms by total
corpus count, ties broken lexicographically, and assigns column indices in
lexicographic order.  Stop-word removal happens before counting and only
applies to the word analyzer.  Tokenization keeps single-character and
filler tokens ("um", "uh") -- they are informative here; markers that are
pure symbols ("+...") only survive via their alphanumeric core, a known
limitation.
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyVocabulary
from .sparse import SparseMatrix
from .stopwords import ENGLISH_STOP_WORDS

_WORD = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class TfidfParams:
    analyzer: str = "word"
    ngram_range: Optional[tuple[int, int]] = None  # None = analyzer default
    stop_words: Optional[str] = None  # "english" or None
    max_features: int = 10000
    sublinear_tf: bool = False

    def __post_init__(self):
        if self.analyzer not in ("word", "char"):
            raise ValueError(f"analyzer must be 'word' or 'char', got {self.analyzer!r}")
        if self.stop_words not in (None, "english"):
            raise ValueError(f"stop_words must be 'english' or None, got {self.stop_words!r}")
        if self.max_features < 1:
            raise ValueError("max_features must be positive")
        lo, hi = self.effective_ngram_range()
        if not 1 <= lo <= hi:
            raise ValueError(f"bad ngram_range {(lo, hi)}")

    def effective_ngram_range(self) -> tuple[int, int]:
        if self.ngram_range is not None:
            return self.ngram_range
        return (2, 4) if self.analyzer == "char" else (1, 1)


def tokenize(text: str, params: TfidfParams) -> list[str]:
    """Produce the analyzer's token stream for one document."""
    lo, hi = params.effective_ngram_range()
    text = text.lower()
    if params.analyzer == "word":
        words = _WORD.findall(text)
        if params.stop_words == "english":
            words = [w for w in words if w not in ENGLISH_STOP_WORDS]
        if (lo, hi) == (1, 1):
            return words
        grams = []
        for n in range(lo, hi + 1):
            grams.extend(" ".join(words[i:i + n]) for i in range(len(words) - n + 1))
        return grams
    grams = []
    for n in range(lo, hi + 1):
        grams.extend(text[i:i + n] for i in range(len(text) - n + 1))
    return grams


@dataclass
class TfidfModel:
    vocabulary: dict[str, int]
    idf: np.ndarray
    params: TfidfParams
    n_documents: int = 0
    terms: list[str] = field(init=False)

    def __post_init__(self):
        self.terms = [""] * len(self.vocabulary)
        for term, col in self.vocabulary.items():
            self.terms[col] = term

    def to_dict(self) -> dict:
        return {
            "format": "adscreen-tfidf",
            "version": 1,
            "params": {
                "analyzer": self.params.analyzer,
                "ngram_range": list(self.params.effective_ngram_range()),
                "stop_words": self.params.stop_words,
                "max_features": self.params.max_features,
                "sublinear_tf": self.params.sublinear_tf,
            },
            "n_documents": self.n_documents,
            "vocabulary": self.terms,
            "idf": [float(v) for v in self.idf],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "TfidfModel":
        p = payload["params"]
        params = TfidfParams(
            analyzer=p["analyzer"],
            ngram_range=tuple(p["ngram_range"]),
            stop_words=p["stop_words"],
            max_features=p["max_features"],
            sublinear_tf=p["sublinear_tf"],
        )
        vocabulary = {term: i for i, term in enumerate(payload["vocabulary"])}
        return cls(vocabulary=vocabulary, idf=np.asarray(payload["idf"], dtype=np.float64),
                   params=params, n_documents=payload.get("n_documents", 0))


def fit_tfidf(corpus: Sequence[str], params: TfidfParams = TfidfParams()) -> TfidfModel:
    """Fit vocabulary and IDF weights on a corpus.

    Raises EmptyVocabulary when no token survives analysis/filtering.
    """
    if not corpus:
        raise EmptyVocabulary("cannot fit on an empty corpus")
    doc_tokens = [tokenize(doc, params) for doc in corpus]
    totals: Counter = Counter()
    df: Counter = Counter()
    for tokens in doc_tokens:
        totals.update(tokens)
        df.update(set(tokens))
    if not totals:
        raise EmptyVocabulary("all tokens were filtered away")

    # Most frequent first, lexicographic on ties; columns assigned in
    # lexicographic order of the surviving terms.
    ranked = sorted(totals, key=lambda t: (-totals[t], t))[: params.max_features]
    vocabulary = {term: col for col, term in enumerate(sorted(ranked))}

    n = len(corpus)
    idf = np.empty(len(vocabulary), dtype=np.float64)
    for term, col in vocabulary.items():
        idf[col] = math.log((1 + n) / (1 + df[term])) + 1.0
    return TfidfModel(vocabulary=vocabulary, idf=idf, params=params, n_documents=n)


def transform_tfidf(model: TfidfModel, docs: Sequence[str]) -> SparseMatrix:
    """Vectorize documents against a fitted model (OOV terms ignored)."""
    if len(model.idf) != len(model.vocabulary):
        raise DimensionMismatch("idf vector length != vocabulary size")
    rows = []
    for doc in docs:
        counts = Counter(tokenize(doc, model.params))
        row = {}
        for term, count in counts.items():
            col = model.vocabulary.get(term)
            if col is None:
                continue
            tf = 1.0 + math.log(count) if model.params.sublinear_tf else float(count)
            row[col] = tf * model.idf[col]
        rows.append(row)
    matrix = SparseMatrix.from_rows(rows, len(model.vocabulary))
    return matrix.l2_normalize_rows()


def fit_transform_tfidf(corpus: Sequence[str], params: TfidfParams = TfidfParams()):
    model = fit_tfidf(corpus, params)
    return model, transform_tfidf(model, corpus)
