"""Model pipelines: feature extraction + model + transcript-level prediction.

Three families, all scored at transcript granularity:

* ``svm`` / ``gbdt`` -- TF-IDF over whole-transcript documents, optionally
  augmented with scaled timing aggregates (the PAR_TIME variant), into a
  kernel SVM or boosted trees; classification or MMSE regression.
* ``svm_crf`` / ``gbdt_crf`` -- TF-IDF over single utterances into a
  probability-producing base model; the per-utterance P(AD) sequence
  (plus optional scaled timing/demographic features and a bias term)
  feeds a linear-chain CRF whose final decoded state labels the
  transcript.  The probabilities used to TRAIN the CRF come from an inner
  grouped 5-fold split of the training partition, so the stack never
  learns from in-fold base-model outputs.
* ``embed_logistic`` / ``embed_lasso`` -- precomputed transcript embedding
  rows into the linear heads.

Feature scaling (timing, age) is always fitted on the training partition
of the fold at hand.  MMSE predictions are clamped to [0, 30] here, at the
pipeline boundary.
"""
from __future__ import annotations

import numpy as np

from . import crf as crf_mod
from . import gbdt as gbdt_mod
from . import svm as svm_mod
from .datasets import DocumentRecord, SegmentRecord
from .errors import ConfigError
from .evaluation import grouped_folds
from .linear import EmbeddingMatrix, train_lasso, train_logistic
from .sparse import SparseMatrix
from .tfidf import TfidfParams, fit_tfidf, transform_tfidf

MODEL_KINDS = ("svm", "gbdt", "svm_crf", "gbdt_crf", "embed_logistic", "embed_lasso")
MMSE_RANGE = (0.0, 30.0)

_TFIDF_KEYS = ("analyzer", "ngram_range", "stop_words", "max_features", "sublinear_tf")


def tfidf_params_from_config(config: dict) -> TfidfParams:
    kwargs = {k: config[k] for k in _TFIDF_KEYS if k in config}
    if "ngram_range" in kwargs and kwargs["ngram_range"] is not None:
        kwargs["ngram_range"] = tuple(kwargs["ngram_range"])
    return TfidfParams(**kwargs)


def svm_params_from_config(config: dict) -> svm_mod.SvmParams:
    keys = ("kernel", "C", "gamma", "coef0", "epsilon", "tol", "max_passes")
    return svm_mod.SvmParams(**{k: config[k] for k in keys if k in config})


def gbdt_params_from_config(config: dict, seed: int) -> gbdt_mod.GbdtParams:
    keys = ("n_estimators", "max_depth", "learning_rate", "min_samples_leaf", "subsample")
    kwargs = {k: config[k] for k in keys if k in config}
    kwargs.setdefault("seed", seed)
    return gbdt_mod.GbdtParams(**kwargs)


def labels_to_signs(labels) -> np.ndarray:
    return np.asarray([1.0 if lab == "AD" else -1.0 for lab in labels])


def labels_to_01(labels) -> np.ndarray:
    return np.asarray([1.0 if lab == "AD" else 0.0 for lab in labels])


class ColumnScaler:
    """Z-scores the continuous columns of a feature block; indicator
    columns (missingness, sex) pass through untouched."""

    def __init__(self, continuous_mask):
        self.mask = np.asarray(continuous_mask, dtype=bool)
        self.mean = None
        self.std = None

    def fit(self, block: np.ndarray) -> "ColumnScaler":
        block = np.asarray(block, dtype=np.float64)
        self.mean = block.mean(axis=0)
        std = block.std(axis=0)
        self.std = np.where(std > 0, std, 1.0)
        return self

    def transform(self, block: np.ndarray) -> np.ndarray:
        block = np.asarray(block, dtype=np.float64).copy()
        scaled = (block - self.mean) / self.std
        block[:, self.mask] = scaled[:, self.mask]
        return block

    def to_dict(self) -> dict:
        return {
            "mask": [bool(v) for v in self.mask],
            "mean": [float(v) for v in self.mean],
            "std": [float(v) for v in self.std],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ColumnScaler":
        scaler = cls(payload["mask"])
        scaler.mean = np.asarray(payload["mean"], dtype=np.float64)
        scaler.std = np.asarray(payload["std"], dtype=np.float64)
        return scaler


# --- transcript-level TF-IDF pipelines ----------------------------------------

class TfidfDocumentPipeline:
    """TF-IDF (+ optional timing aggregates) into SVM or GBDT."""

    def __init__(self, model_kind: str, task: str, config: dict, seed: int = 0):
        if model_kind not in ("svm", "gbdt"):
            raise ConfigError(f"unsupported document model {model_kind!r}")
        if task not in ("classify", "regress"):
            raise ConfigError(f"unsupported task {task!r}")
        self.model_kind = model_kind
        self.task = task
        self.config = dict(config)
        self.seed = seed
        self.tfidf = None
        self.scaler = None
        self.model = None

    def _features(self, docs: list[DocumentRecord], fit: bool) -> SparseMatrix:
        texts = [d.text for d in docs]
        if fit:
            self.tfidf = fit_tfidf(texts, tfidf_params_from_config(self.config))
        X = transform_tfidf(self.tfidf, texts)
        with_aggregates = [d.aggregates is not None for d in docs]
        if any(with_aggregates):
            block = np.asarray([
                d.aggregates.as_vector() if d.aggregates is not None else [0.0] * 5
                for d in docs
            ])
            miss = np.asarray([[0.0] if flag else [1.0] for flag in with_aggregates])
            block = np.hstack([block, miss])
            if fit:
                self.scaler = ColumnScaler([True] * 5 + [False]).fit(block)
            X = X.append_dense_columns(self.scaler.transform(block))
        return X

    def fit(self, docs: list[DocumentRecord]) -> "TfidfDocumentPipeline":
        X = self._features(docs, fit=True)
        if self.task == "classify":
            if self.model_kind == "svm":
                self.model = svm_mod.train_svc(
                    X, labels_to_signs(d.label for d in docs),
                    svm_params_from_config(self.config), seed=self.seed)
            else:
                self.model = gbdt_mod.train_gbdt(
                    X, labels_to_01(d.label for d in docs), "logistic",
                    gbdt_params_from_config(self.config, self.seed))
        else:
            targets = np.asarray([float(d.mmse) for d in docs])
            if self.model_kind == "svm":
                self.model = svm_mod.train_svr(
                    X, targets, svm_params_from_config(self.config), seed=self.seed)
            else:
                self.model = gbdt_mod.train_gbdt(
                    X, targets, "squared", gbdt_params_from_config(self.config, self.seed))
        return self

    def predict_labels(self, docs: list[DocumentRecord]) -> list[str]:
        X = self._features(docs, fit=False)
        if self.model_kind == "svm":
            signs = svm_mod.predict_label(self.model, X)
            return ["AD" if s > 0 else "Control" for s in signs]
        proba = gbdt_mod.predict_gbdt(self.model, X)
        return ["AD" if p > 0.5 else "Control" for p in proba]

    def predict_values(self, docs: list[DocumentRecord]) -> np.ndarray:
        X = self._features(docs, fit=False)
        if self.model_kind == "svm":
            raw = svm_mod.predict_svr(self.model, X)
        else:
            raw = gbdt_mod.predict_gbdt(self.model, X)
        return np.clip(raw, *MMSE_RANGE)


# --- utterance-level CRF stacking ----------------------------------------------

def _group_segments(segments: list[SegmentRecord]) -> dict[str, list[int]]:
    """Row indices per transcript, in first-appearance order, sorted by
    utterance position within each transcript."""
    groups: dict[str, list[int]] = {}
    for i, seg in enumerate(segments):
        groups.setdefault(seg.transcript_id, []).append(i)
    for tid, rows in groups.items():
        rows.sort(key=lambda i: (segments[i].utterance_index, i))
    return groups


def _extras_block(segments: list[SegmentRecord]):
    """Stack timing/demographic extras; returns (block, continuous_mask)
    or (None, None) when the variant carries no extras."""
    has_temporal = segments[0].temporal is not None
    has_demo = segments[0].demographics is not None
    if not has_temporal and not has_demo:
        return None, None
    rows = []
    for seg in segments:
        row: list[float] = []
        if has_temporal:
            row.extend(seg.temporal.as_vector())
        if has_demo:
            row.extend(seg.demographics)
        rows.append(row)
    mask: list[bool] = []
    if has_temporal:
        mask.extend([True] * 5 + [False])  # five timings + missing flag
    if has_demo:
        mask.extend([True, False])  # age + sex indicator
    return np.asarray(rows), mask


class CrfStackPipeline:
    """Utterance base model stacked into a CRF; final state labels the transcript."""

    def __init__(self, base_kind: str, config: dict, seed: int = 0,
                 inner_folds: int = 5):
        if base_kind not in ("svm", "gbdt"):
            raise ConfigError(f"unsupported CRF base model {base_kind!r}")
        self.base_kind = base_kind
        self.config = dict(config)
        self.seed = seed
        self.inner_folds = inner_folds
        self.tfidf = None
        self.scaler = None
        self.base_model = None
        self.crf_model = None

    # base model helpers

    def _fit_base(self, X: SparseMatrix, labels: list[str]):
        if self.base_kind == "svm":
            return svm_mod.train_svc(X, labels_to_signs(labels),
                                     svm_params_from_config(self.config),
                                     seed=self.seed, probability=True)
        return gbdt_mod.train_gbdt(X, labels_to_01(labels), "logistic",
                                   gbdt_params_from_config(self.config, self.seed))

    def _base_proba(self, model, X: SparseMatrix) -> np.ndarray:
        if self.base_kind == "svm":
            return svm_mod.predict_proba(model, X)
        return gbdt_mod.predict_gbdt(model, X)

    def stacking_features(self, segments: list[SegmentRecord], fit_scaler: bool,
                          proba: np.ndarray) -> np.ndarray:
        block, mask = _extras_block(segments)
        parts = [proba[:, None]]
        if block is not None:
            if fit_scaler:
                self.scaler = ColumnScaler(mask).fit(block)
            parts.append(self.scaler.transform(block))
        parts.append(np.ones((len(segments), 1)))  # bias
        return np.hstack(parts)

    def out_of_fold_proba(self, segments: list[SegmentRecord], X: SparseMatrix) -> np.ndarray:
        """P(AD) per training row from an inner grouped split."""
        tids = [seg.transcript_id for seg in segments]
        k = min(self.inner_folds, len(set(tids)))
        if k < 2:
            model = self._fit_base(X, [seg.label for seg in segments])
            return self._base_proba(model, X)
        proba = np.empty(len(segments))
        for train_idx, valid_idx in grouped_folds(tids, k, seed=self.seed + 1):
            sub = self._fit_base(X.take_rows(train_idx),
                                 [segments[i].label for i in train_idx])
            proba[valid_idx] = self._base_proba(sub, X.take_rows(valid_idx))
        return proba

    def _sequences(self, segments: list[SegmentRecord], features: np.ndarray):
        groups = _group_segments(segments)
        sequences = []
        labels = []
        for tid, rows in groups.items():
            sequences.append(crf_mod.FeatureSequence(tid, features[rows]))
            labels.append(segments[rows[0]].label)
        return sequences, labels

    def fit(self, segments: list[SegmentRecord]) -> "CrfStackPipeline":
        texts = [seg.text for seg in segments]
        self.tfidf = fit_tfidf(texts, tfidf_params_from_config(self.config))
        X = transform_tfidf(self.tfidf, texts)
        oof = self.out_of_fold_proba(segments, X)
        self.base_model = self._fit_base(X, [seg.label for seg in segments])
        features = self.stacking_features(segments, fit_scaler=True, proba=oof)
        sequences, transcript_labels = self._sequences(segments, features)
        label_seqs = [
            [1 if lab == "AD" else 0] * seq.steps.shape[0]
            for seq, lab in zip(sequences, transcript_labels)
        ]
        params = crf_mod.CrfParams(
            c1=float(self.config.get("c1", 0.0)),
            c2=float(self.config.get("c2", 0.0)),
            max_iter=int(self.config.get("max_iter", 500)),
            seed=self.seed,
        )
        names = self.feature_names(segments)
        self.crf_model = crf_mod.crf_train(sequences, label_seqs, params, feature_names=names)
        return self

    def feature_names(self, segments: list[SegmentRecord]) -> list[str]:
        names = ["p_ad"]
        if segments[0].temporal is not None:
            names += ["duration_z", "gap_before_z", "mean_dur_z", "max_dur_z",
                      "min_dur_z", "time_missing"]
        if segments[0].demographics is not None:
            names += ["age_z", "sex_indicator"]
        return names + ["bias"]

    def predict_labels(self, segments: list[SegmentRecord]) -> dict[str, str]:
        """Transcript id -> predicted label from the final Viterbi state."""
        X = transform_tfidf(self.tfidf, [seg.text for seg in segments])
        proba = self._base_proba(self.base_model, X)
        features = self.stacking_features(segments, fit_scaler=False, proba=proba)
        sequences, _ = self._sequences(segments, features)
        out = {}
        for seq in sequences:
            predicted = crf_mod.transcript_prediction(self.crf_model, seq)
            out[seq.transcript_id] = "AD" if predicted == "AD" else "Control"
        return out


# --- embedding heads -----------------------------------------------------------

class EmbeddingHeadPipeline:
    """Logistic or LASSO head over fixed per-transcript embeddings."""

    def __init__(self, head: str, embeddings: EmbeddingMatrix, config: dict, seed: int = 0):
        if head not in ("logistic", "lasso"):
            raise ConfigError(f"unsupported embedding head {head!r}")
        self.head = head
        self.embeddings = embeddings
        self.config = dict(config)
        self.seed = seed
        self.model = None

    def _rows(self, docs: list[DocumentRecord]) -> np.ndarray:
        return self.embeddings.rows_for([d.transcript_id for d in docs])

    def fit(self, docs: list[DocumentRecord]) -> "EmbeddingHeadPipeline":
        X = self._rows(docs)
        reg = float(self.config.get("regularization", 1e-2))
        if self.head == "logistic":
            self.model = train_logistic(X, labels_to_01(d.label for d in docs),
                                        l2_lambda=reg, seed=self.seed)
        else:
            targets = np.asarray([float(d.mmse) for d in docs])
            self.model = train_lasso(X, targets, l1_alpha=reg, seed=self.seed)
        return self

    def predict_labels(self, docs: list[DocumentRecord]) -> list[str]:
        proba = self.model.predict_proba(self._rows(docs))
        return ["AD" if p >= 0.5 else "Control" for p in proba]

    def predict_values(self, docs: list[DocumentRecord]) -> np.ndarray:
        return np.clip(self.model.decision(self._rows(docs)), *MMSE_RANGE)


def pipeline_to_dict(pipeline) -> dict:
    """Serialize a fitted pipeline (of any family) to a JSON-safe dict."""
    if isinstance(pipeline, TfidfDocumentPipeline):
        return {
            "format": "adscreen-pipeline",
            "version": 1,
            "family": "tfidf_document",
            "model_kind": pipeline.model_kind,
            "task": pipeline.task,
            "config": pipeline.config,
            "tfidf": pipeline.tfidf.to_dict(),
            "scaler": None if pipeline.scaler is None else pipeline.scaler.to_dict(),
            "model": pipeline.model.to_dict(),
        }
    if isinstance(pipeline, CrfStackPipeline):
        return {
            "format": "adscreen-pipeline",
            "version": 1,
            "family": "crf_stack",
            "model_kind": pipeline.base_kind + "_crf",
            "task": "classify",
            "config": pipeline.config,
            "tfidf": pipeline.tfidf.to_dict(),
            "scaler": None if pipeline.scaler is None else pipeline.scaler.to_dict(),
            "base_model": pipeline.base_model.to_dict(),
            "crf": pipeline.crf_model.to_dict(),
        }
    if isinstance(pipeline, EmbeddingHeadPipeline):
        return {
            "format": "adscreen-pipeline",
            "version": 1,
            "family": "embedding_head",
            "model_kind": "embed_" + pipeline.head,
            "task": "classify" if pipeline.head == "logistic" else "regress",
            "config": pipeline.config,
            "model": pipeline.model.to_dict(),
        }
    raise TypeError(f"cannot serialize pipeline of type {type(pipeline).__name__}")


def pipeline_from_dict(payload: dict, embeddings: EmbeddingMatrix = None):
    """Rebuild a fitted pipeline saved by ``pipeline_to_dict``."""
    from .crf import CrfModel
    from .gbdt import GbdtModel
    from .linear import LinearModel
    from .tfidf import TfidfModel

    family = payload.get("family")
    if family == "tfidf_document":
        pipe = TfidfDocumentPipeline(payload["model_kind"], payload["task"],
                                     payload["config"])
        pipe.tfidf = TfidfModel.from_dict(payload["tfidf"])
        if payload.get("scaler"):
            pipe.scaler = ColumnScaler.from_dict(payload["scaler"])
        model = payload["model"]
        pipe.model = (svm_mod.SvmModel.from_dict(model)
                      if model["format"] == "adscreen-svm" else GbdtModel.from_dict(model))
        return pipe
    if family == "crf_stack":
        pipe = CrfStackPipeline(payload["model_kind"].split("_")[0], payload["config"])
        pipe.tfidf = TfidfModel.from_dict(payload["tfidf"])
        if payload.get("scaler"):
            pipe.scaler = ColumnScaler.from_dict(payload["scaler"])
        base = payload["base_model"]
        pipe.base_model = (svm_mod.SvmModel.from_dict(base)
                           if base["format"] == "adscreen-svm" else GbdtModel.from_dict(base))
        pipe.crf_model = CrfModel.from_dict(payload["crf"])
        return pipe
    if family == "embedding_head":
        if embeddings is None:
            raise ConfigError("loading an embedding-head pipeline requires the embedding matrix")
        head = payload["model_kind"].split("_")[1]
        pipe = EmbeddingHeadPipeline(head, embeddings, payload["config"])
        pipe.model = LinearModel.from_dict(payload["model"])
        return pipe
    raise ValueError(f"unknown pipeline family {family!r}")


def make_pipeline(model_kind: str, task: str, config: dict, seed: int = 0,
                  embeddings: EmbeddingMatrix = None):
    """Instantiate the pipeline for a model kind, validating compatibility."""
    if model_kind not in MODEL_KINDS:
        raise ConfigError(f"unknown model kind {model_kind!r}; expected one of {MODEL_KINDS}")
    if model_kind in ("svm_crf", "gbdt_crf"):
        if task == "regress":
            raise ConfigError("CRF pipelines do not support regression")
        return CrfStackPipeline(model_kind.split("_")[0], config, seed=seed)
    if model_kind in ("embed_logistic", "embed_lasso"):
        if embeddings is None:
            raise ConfigError(f"{model_kind} requires an embedding matrix")
        head = "logistic" if model_kind == "embed_logistic" else "lasso"
        if head == "logistic" and task == "regress":
            raise ConfigError("embed_logistic is a classifier; use embed_lasso for MMSE")
        if head == "lasso" and task == "classify":
            raise ConfigError("embed_lasso is a regressor; use embed_logistic for labels")
        return EmbeddingHeadPipeline(head, embeddings, config, seed=seed)
    return TfidfDocumentPipeline(model_kind, task, config, seed=seed)
