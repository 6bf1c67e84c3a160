import math
import random
import re

import numpy as np
import pytest

from adscreen.errors import EmptyVocabulary
from adscreen.stopwords import ENGLISH_STOP_WORDS
from adscreen.tfidf import (TfidfModel, TfidfParams, fit_tfidf, fit_transform_tfidf,
                            tokenize, transform_tfidf)


def brute_force_tfidf(corpus, docs, params: TfidfParams):
    """Independent dense implementation of the pinned formulas.

    Deliberately structured differently from the library: dict counting,
    pure-python idf, dense rows, explicit normalization.
    """
    token_lists = [_tokens(d, params) for d in corpus]
    totals = {}
    doc_freq = {}
    for tokens in token_lists:
        seen = set()
        for tok in tokens:
            totals[tok] = totals.get(tok, 0) + 1
            if tok not in seen:
                doc_freq[tok] = doc_freq.get(tok, 0) + 1
                seen.add(tok)
    ranked = sorted(totals, key=lambda t: (-totals[t], t))[: params.max_features]
    vocab = sorted(ranked)
    idf = {t: math.log((1 + len(corpus)) / (1 + doc_freq[t])) + 1.0 for t in vocab}

    out = []
    for doc in docs:
        counts = {}
        for tok in _tokens(doc, params):
            counts[tok] = counts.get(tok, 0) + 1
        row = []
        for t in vocab:
            c = counts.get(t, 0)
            if c == 0:
                row.append(0.0)
                continue
            tf = 1.0 + math.log(c) if params.sublinear_tf else float(c)
            row.append(tf * idf[t])
        norm = math.sqrt(sum(v * v for v in row))
        if norm > 0:
            row = [v / norm for v in row]
        out.append(row)
    return vocab, idf, out


def _tokens(text, params: TfidfParams):
    text = text.lower()
    lo, hi = params.effective_ngram_range()
    if params.analyzer == "word":
        words = re.findall(r"[^\W_]+", text, re.UNICODE)
        if params.stop_words == "english":
            words = [w for w in words if w not in ENGLISH_STOP_WORDS]
        if (lo, hi) == (1, 1):
            return words
        return [" ".join(words[i:i + n]) for n in range(lo, hi + 1)
                for i in range(len(words) - n + 1)]
    return [text[i:i + n] for n in range(lo, hi + 1) for i in range(len(text) - n + 1)]


class TestFit:
    def test_hand_computed_idf(self):
        model = fit_tfidf(["a b a", "b c"], TfidfParams())
        idf_a = model.idf[model.vocabulary["a"]]
        idf_b = model.idf[model.vocabulary["b"]]
        idf_c = model.idf[model.vocabulary["c"]]
        assert idf_a == pytest.approx(math.log(3 / 2) + 1, abs=1e-12)
        assert idf_b == pytest.approx(1.0, abs=1e-12)
        assert idf_c == pytest.approx(math.log(3 / 2) + 1, abs=1e-12)

    def test_stop_words_filter_everything(self):
        with pytest.raises(EmptyVocabulary):
            fit_tfidf(["the the the"], TfidfParams(stop_words="english"))

    def test_max_features_by_frequency(self):
        model = fit_tfidf(["a a b", "a c"], TfidfParams(max_features=1))
        assert set(model.vocabulary) == {"a"}

    def test_frequency_tie_broken_lexicographically(self):
        model = fit_tfidf(["b a", "a b", "c"], TfidfParams(max_features=2))
        assert set(model.vocabulary) == {"a", "b"}

    def test_vocabulary_indices_dense(self):
        model = fit_tfidf(["c a b", "d e f"], TfidfParams())
        assert sorted(model.vocabulary.values()) == list(range(len(model.vocabulary)))

    def test_empty_corpus(self):
        with pytest.raises(EmptyVocabulary):
            fit_tfidf([], TfidfParams())

    def test_idf_monotone_in_document_frequency(self):
        model = fit_tfidf(["a b", "a b", "a c", "a d"], TfidfParams())
        df = {"a": 4, "b": 2, "c": 1, "d": 1}
        for t1 in df:
            for t2 in df:
                if df[t1] < df[t2]:
                    assert model.idf[model.vocabulary[t1]] > model.idf[model.vocabulary[t2]]


class TestTransform:
    def test_hand_computed_sublinear_row(self):
        params = TfidfParams(sublinear_tf=True)
        model = fit_tfidf(["a b a", "b c"], params)
        X = transform_tfidf(model, ["a a b"])
        row = X.to_dense()[0]
        a_val = (1 + math.log(2)) * (math.log(3 / 2) + 1)
        b_val = 1.0
        norm = math.sqrt(a_val ** 2 + b_val ** 2)
        assert row[model.vocabulary["a"]] == pytest.approx(a_val / norm, abs=1e-4)
        assert row[model.vocabulary["b"]] == pytest.approx(b_val / norm, abs=1e-4)
        assert row[model.vocabulary["a"]] == pytest.approx(0.9219, abs=1e-4)
        assert row[model.vocabulary["b"]] == pytest.approx(0.3874, abs=1e-4)

    def test_oov_is_zero_row(self):
        model = fit_tfidf(["a b", "c"], TfidfParams())
        X = transform_tfidf(model, ["zzz qqq"])
        assert X.nnz == 0

    def test_row_norms_one_or_zero(self):
        model, X = fit_transform_tfidf(["a b c", "d e", "a a"], TfidfParams())
        norms = X.row_norms()
        assert np.allclose(norms[norms > 0], 1.0)
        Y = transform_tfidf(model, ["qq", "a b"])
        assert Y.row_norms()[0] == 0.0
        assert Y.row_norms()[1] == pytest.approx(1.0)

    def test_count_scaling_invariance_raw_tf(self):
        # multiplying every count by k leaves the normalized row unchanged
        params = TfidfParams(sublinear_tf=False)
        model = fit_tfidf(["a b b", "c d"], params)
        single = transform_tfidf(model, ["a b b"]).to_dense()[0]
        tripled = transform_tfidf(model, ["a b b " * 3]).to_dense()[0]
        assert np.allclose(single, tripled, atol=1e-12)

    def test_char_analyzer(self):
        params = TfidfParams(analyzer="char", ngram_range=(2, 2))
        model, X = fit_transform_tfidf(["abab", "bc"], params)
        assert "ab" in model.vocabulary and "ba" in model.vocabulary
        assert X.shape[0] == 2

    def test_word_bigrams(self):
        params = TfidfParams(ngram_range=(1, 2))
        model = fit_tfidf(["the boy fell"], params)
        assert "boy fell" in model.vocabulary


class TestOracle:
    def test_matches_brute_force_on_random_corpora(self):
        rng = random.Random(123)
        alphabet = [f"w{i}" for i in range(30)]
        for trial in range(20):
            n_docs = rng.randint(2, 10)
            corpus = [" ".join(rng.choices(alphabet, k=rng.randint(1, 25)))
                      for _ in range(n_docs)]
            params = TfidfParams(
                analyzer="word",
                stop_words=None,
                max_features=rng.choice([5, 10, 30]),
                sublinear_tf=rng.random() < 0.5,
            )
            model, X = fit_transform_tfidf(corpus, params)
            vocab, idf, expected = brute_force_tfidf(corpus, corpus, params)
            assert sorted(model.vocabulary) == vocab
            for term in vocab:
                assert model.idf[model.vocabulary[term]] == pytest.approx(
                    idf[term], abs=1e-12)
            dense = X.to_dense()
            for i, row in enumerate(expected):
                for term, want in zip(vocab, row):
                    assert dense[i, model.vocabulary[term]] == pytest.approx(
                        want, abs=1e-9), f"trial {trial} doc {i} term {term}"


class TestSerialization:
    def test_round_trip(self):
        params = TfidfParams(sublinear_tf=True, max_features=7)
        model, X = fit_transform_tfidf(["a b c", "b c d", "e"], params)
        clone = TfidfModel.from_dict(model.to_dict())
        assert clone.vocabulary == model.vocabulary
        assert np.allclose(clone.idf, model.idf)
        Y = transform_tfidf(clone, ["a b e"])
        Z = transform_tfidf(model, ["a b e"])
        assert np.allclose(Y.to_dense(), Z.to_dense())

    def test_tokenize_keeps_single_char_and_fillers(self):
        assert tokenize("um a I", TfidfParams()) == ["um", "a", "i"]
