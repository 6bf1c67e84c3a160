"""Linear heads over precomputed transcript embedding matrices.

The embeddings are produced elsewhere (any N x H matrix keyed by
transcript id, CSV with header ``id,e0,...,e{H-1}`` plus a ``<path>.json``
sidecar recording provenance).  Only these small heads are ever fitted
here: L2-regularized logistic regression for the diagnosis label and
L1-penalized (LASSO) least squares for the MMSE score.

Both heads standardize features internally with means/stds fitted on their
training rows, so predictions are invariant to affine rescaling of any
input column.  Logistic training minimizes

    mean log-loss + l2_lambda * ||w||^2

with an exact gradient handed to a quasi-Newton minimizer; LASSO runs
cyclic coordinate descent with soft-thresholding on

    1/(2n) * ||y - Xw - b||^2 + l1_alpha * ||w||_1

until the largest coordinate change falls below tolerance, which leaves
exact zeros in the weight vector.
"""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from .errors import DimensionMismatch, NonFinite, SingleClass, UnknownId


@dataclass
class EmbeddingMatrix:
    ids: list[str]
    values: np.ndarray  # (N, H)
    model_name: str = "unknown"
    pooling: str = "unknown"
    layer: str = "unknown"

    @property
    def hidden_size(self) -> int:
        return self.values.shape[1]

    def rows_for(self, wanted_ids: Sequence[str]) -> np.ndarray:
        index = {tid: i for i, tid in enumerate(self.ids)}
        missing = [tid for tid in wanted_ids if tid not in index]
        if missing:
            raise UnknownId(f"embedding file lacks ids: {', '.join(sorted(missing))}")
        return self.values[[index[tid] for tid in wanted_ids]]


def sidecar_path(path: str) -> str:
    return path + ".json"


def load_embeddings(path: str, expected_ids: Optional[Sequence[str]] = None) -> EmbeddingMatrix:
    """Read an embedding CSV (+ optional sidecar); validate shape and ids.

    With ``expected_ids`` given, the file must contain exactly those ids;
    missing or extra ids raise UnknownId naming the offenders.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DimensionMismatch(f"{path}: empty embedding file") from None
        if not header or header[0] != "id":
            raise DimensionMismatch(f"{path}: first header column must be 'id'")
        width = len(header) - 1
        if width < 1 or header[1:] != [f"e{i}" for i in range(width)]:
            raise DimensionMismatch(f"{path}: header must be id,e0,...,e{{H-1}}")
        ids: list[str] = []
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width + 1:
                raise DimensionMismatch(
                    f"{path}:{lineno}: row has {len(row) - 1} values, header says {width}")
            ids.append(row[0])
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise NonFinite(f"{path}:{lineno}: unparseable value ({exc})") from None

    values = np.asarray(rows, dtype=np.float64).reshape(len(ids), width)
    if values.size and not np.all(np.isfinite(values)):
        raise NonFinite(f"{path}: embedding matrix contains NaN/inf")
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise UnknownId(f"{path}: duplicate ids: {', '.join(dupes)}")

    meta = {"model_name": "unknown", "pooling": "unknown", "layer": "unknown"}
    side = sidecar_path(path)
    if os.path.exists(side):
        with open(side, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if "H" in payload and payload["H"] != width:
            raise DimensionMismatch(
                f"{side}: sidecar H={payload['H']} but file has H={width}")
        for key in meta:
            if key in payload:
                meta[key] = str(payload[key])

    if expected_ids is not None:
        missing = sorted(set(expected_ids) - set(ids))
        extra = sorted(set(ids) - set(expected_ids))
        problems = []
        if missing:
            problems.append("missing ids: " + ", ".join(missing))
        if extra:
            problems.append("extra ids: " + ", ".join(extra))
        if problems:
            raise UnknownId(f"{path}: " + "; ".join(problems))

    return EmbeddingMatrix(ids=ids, values=values, **meta)


@dataclass
class LinearModel:
    kind: str  # "logistic" or "lasso"
    weights: np.ndarray  # in standardized feature space
    bias: float
    regularization: float
    feature_mean: np.ndarray
    feature_std: np.ndarray

    def _standardize(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.feature_mean) / self.feature_std

    def decision(self, X: np.ndarray) -> np.ndarray:
        return self._standardize(X) @ self.weights + self.bias

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        z = self.decision(X)
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        out[~pos] = np.exp(z[~pos]) / (1.0 + np.exp(z[~pos]))
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.kind == "logistic":
            return (self.predict_proba(X) >= 0.5).astype(np.float64)
        return self.decision(X)

    def to_dict(self) -> dict:
        return {
            "format": "adscreen-linear",
            "version": 1,
            "kind": self.kind,
            "regularization": self.regularization,
            "bias": self.bias,
            "weights": [float(v) for v in self.weights],
            "feature_mean": [float(v) for v in self.feature_mean],
            "feature_std": [float(v) for v in self.feature_std],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "LinearModel":
        return cls(
            kind=payload["kind"],
            weights=np.asarray(payload["weights"], dtype=np.float64),
            bias=float(payload["bias"]),
            regularization=float(payload["regularization"]),
            feature_mean=np.asarray(payload["feature_mean"], dtype=np.float64),
            feature_std=np.asarray(payload["feature_std"], dtype=np.float64),
        )


def _fit_standardizer(X: np.ndarray):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)  # constant columns become all-zero
    return mean, std


def logistic_loss_grad(theta: np.ndarray, X: np.ndarray, y01: np.ndarray, l2: float):
    """Mean logistic loss + l2*||w||^2 (bias unpenalized) and its gradient."""
    w, b = theta[:-1], theta[-1]
    z = X @ w + b
    # log(1 + e^-z) + (1-y) z, stable for both signs
    loss = np.mean(np.where(z >= 0, np.log1p(np.exp(-z)) + (1 - y01) * z,
                            np.log1p(np.exp(z)) - y01 * z))
    loss += l2 * float(np.dot(w, w))
    p = np.empty_like(z)
    pos = z >= 0
    p[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    p[~pos] = np.exp(z[~pos]) / (1.0 + np.exp(z[~pos]))
    diff = (p - y01) / len(y01)
    grad = np.concatenate([X.T @ diff + 2.0 * l2 * w, [np.sum(diff)]])
    return float(loss), grad


def train_logistic(X, y, l2_lambda: float = 1e-2, seed: int = 0) -> LinearModel:
    """Binary logistic head; y holds 0/1 labels (1 = positive class)."""
    X = np.asarray(X, dtype=np.float64)
    y01 = np.asarray(y, dtype=np.float64)
    if not np.all(np.isin(y01, (0.0, 1.0))):
        raise ValueError("logistic labels must be 0/1")
    if len(np.unique(y01)) < 2:
        raise SingleClass("need both classes to fit the logistic head")
    if not np.all(np.isfinite(X)):
        raise NonFinite("features contain NaN/inf")

    mean, std = _fit_standardizer(X)
    Xs = (X - mean) / std
    theta0 = np.zeros(X.shape[1] + 1)
    result = optimize.minimize(
        logistic_loss_grad, theta0, args=(Xs, y01, l2_lambda),
        jac=True, method="L-BFGS-B",
        options={"maxiter": 2000, "ftol": 1e-14, "gtol": 1e-9},
    )
    theta = result.x
    return LinearModel(kind="logistic", weights=theta[:-1], bias=float(theta[-1]),
                       regularization=l2_lambda, feature_mean=mean, feature_std=std)


def train_lasso(X, y, l1_alpha: float = 1e-2, seed: int = 0,
                max_iter: int = 10_000, tol: float = 1e-8) -> LinearModel:
    """LASSO regression head by cyclic coordinate descent."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise NonFinite("inputs contain NaN/inf")
    n, d = X.shape

    mean, std = _fit_standardizer(X)
    Xs = (X - mean) / std
    bias = float(np.mean(y))  # columns are centered, so the intercept is fixed
    w = np.zeros(d)
    residual = y - bias - Xs @ w
    col_sq = np.sum(Xs * Xs, axis=0) / n

    for _ in range(max_iter):
        max_change = 0.0
        for j in range(d):
            if col_sq[j] == 0.0:
                continue
            old = w[j]
            rho = float(Xs[:, j] @ residual) / n + col_sq[j] * old
            new = math.copysign(max(abs(rho) - l1_alpha, 0.0), rho) / col_sq[j]
            if new != old:
                residual += Xs[:, j] * (old - new)
                w[j] = new
                max_change = max(max_change, abs(new - old))
        if max_change < tol:
            break

    return LinearModel(kind="lasso", weights=w, bias=bias,
                       regularization=l1_alpha, feature_mean=mean, feature_std=std)


def lasso_null_alpha(X, y) -> float:
    """Smallest l1_alpha at which every LASSO weight is exactly zero."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    mean, std = _fit_standardizer(X)
    Xs = (X - mean) / std
    centered = y - np.mean(y)
    return float(np.max(np.abs(Xs.T @ centered)) / len(y))
