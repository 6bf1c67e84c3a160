"""Gradient-boosted regression trees for binary classification and regression.

Each boosting stage fits one regression tree to the negative gradient of
the loss at the current predictions, with Newton-style leaf values
sum(residual) / sum(hessian).  Squared loss uses unit hessians (so splits
reduce variance); logistic loss uses p(1-p).  Split search is exact greedy
over midpoints of consecutive distinct sorted feature values, scanning
features in ascending index order with strictly-better gain required to
replace the incumbent (so ties resolve to the lowest feature index, then
the lowest threshold).

    gain(split) = 1/2 * (GL^2/HL + GR^2/HR - G^2/H)

Sparse feature columns are densified one at a time during search, which
keeps implicit zeros in play without materializing the whole matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NonFinite, SingleClass
from .sparse import SparseMatrix

_MIN_HESSIAN = 1e-12


@dataclass(frozen=True)
class GbdtParams:
    n_estimators: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    min_samples_leaf: int = 1
    subsample: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 0:
            raise ValueError("n_estimators must be >= 0")
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if not 0 < self.subsample <= 1:
            raise ValueError("subsample must be in (0, 1]")


@dataclass
class TreeNode:
    feature: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    value: float = 0.0
    gain: float = 0.0
    n_samples: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"leaf": self.value, "n": self.n_samples}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "gain": self.gain,
            "n": self.n_samples,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "TreeNode":
        if "leaf" in payload:
            return cls(value=payload["leaf"], n_samples=payload.get("n", 0))
        return cls(
            feature=payload["feature"],
            threshold=payload["threshold"],
            gain=payload.get("gain", 0.0),
            n_samples=payload.get("n", 0),
            left=cls.from_dict(payload["left"]),
            right=cls.from_dict(payload["right"]),
        )


@dataclass
class GbdtModel:
    base_score: float
    trees: list[TreeNode]
    loss: str  # "logistic" or "squared"
    params: GbdtParams
    n_features: int
    train_losses: list[float] = field(default_factory=list)  # per stage, not serialized

    def to_dict(self) -> dict:
        return {
            "format": "adscreen-gbdt",
            "version": 1,
            "loss": self.loss,
            "base_score": self.base_score,
            "n_features": self.n_features,
            "params": {
                "n_estimators": self.params.n_estimators,
                "max_depth": self.params.max_depth,
                "learning_rate": self.params.learning_rate,
                "min_samples_leaf": self.params.min_samples_leaf,
                "subsample": self.params.subsample,
                "seed": self.params.seed,
            },
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "GbdtModel":
        return cls(
            base_score=payload["base_score"],
            trees=[TreeNode.from_dict(t) for t in payload["trees"]],
            loss=payload["loss"],
            params=GbdtParams(**payload["params"]),
            n_features=payload["n_features"],
        )


def best_split(column: np.ndarray, residual: np.ndarray, hessian: np.ndarray,
               min_samples_leaf: int) -> Optional[tuple[float, float]]:
    """Best (gain, threshold) for one feature column, or None if unsplittable."""
    order = np.argsort(column, kind="stable")
    vals = column[order]
    r = residual[order]
    h = hessian[order]
    n = len(vals)
    if n < 2 * min_samples_leaf or vals[0] == vals[-1]:
        return None
    r_cum = np.cumsum(r)
    h_cum = np.cumsum(h)
    g_total, h_total = r_cum[-1], h_cum[-1]
    parent = g_total * g_total / max(h_total, _MIN_HESSIAN)

    best_gain = 0.0
    best_threshold = None
    # split after position k (left = first k+1 sorted samples)
    for k in range(n - 1):
        if vals[k] == vals[k + 1]:
            continue
        n_left = k + 1
        if n_left < min_samples_leaf or n - n_left < min_samples_leaf:
            continue
        gl, hl = r_cum[k], h_cum[k]
        gr, hr = g_total - gl, h_total - hl
        gain = 0.5 * (gl * gl / max(hl, _MIN_HESSIAN)
                      + gr * gr / max(hr, _MIN_HESSIAN) - parent)
        if gain > best_gain + 1e-12:
            best_gain = gain
            best_threshold = (vals[k] + vals[k + 1]) / 2.0
    if best_threshold is None:
        return None
    return best_gain, best_threshold


def _leaf_value(residual: np.ndarray, hessian: np.ndarray) -> float:
    return float(np.sum(residual) / max(np.sum(hessian), _MIN_HESSIAN))


def _grow_tree(columns, rows: np.ndarray, residual, hessian, depth: int,
               params: GbdtParams) -> TreeNode:
    node = TreeNode(n_samples=len(rows))
    if depth >= params.max_depth or len(rows) < 2 * params.min_samples_leaf:
        node.value = _leaf_value(residual[rows], hessian[rows])
        return node

    best = None  # (gain, feature, threshold)
    for j in range(len(columns)):
        found = best_split(columns[j][rows], residual[rows], hessian[rows],
                           params.min_samples_leaf)
        if found is None:
            continue
        gain, threshold = found
        if best is None or gain > best[0] + 1e-12:
            best = (gain, j, threshold)

    if best is None:
        node.value = _leaf_value(residual[rows], hessian[rows])
        return node

    gain, j, threshold = best
    mask = columns[j][rows] < threshold
    node.feature = j
    node.threshold = threshold
    node.gain = gain
    node.left = _grow_tree(columns, rows[mask], residual, hessian, depth + 1, params)
    node.right = _grow_tree(columns, rows[~mask], residual, hessian, depth + 1, params)
    return node


def _tree_predict(node: TreeNode, x_dense: np.ndarray) -> float:
    while not node.is_leaf:
        node = node.left if x_dense[node.feature] < node.threshold else node.right
    return node.value


def _tree_predict_all(node: TreeNode, columns, rows: np.ndarray, out: np.ndarray):
    """Route row indices down the tree in bulk; writes leaf values into out."""
    if node.is_leaf:
        out[rows] = node.value
        return
    mask = columns[node.feature][rows] < node.threshold
    _tree_predict_all(node.left, columns, rows[mask], out)
    _tree_predict_all(node.right, columns, rows[~mask], out)


def _sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    out[~pos] = np.exp(z[~pos]) / (1.0 + np.exp(z[~pos]))
    return out


def _loss_value(loss: str, y: np.ndarray, raw: np.ndarray) -> float:
    if loss == "squared":
        return float(0.5 * np.mean((y - raw) ** 2))
    # numerically stable mean logistic loss: log(1+e^-z) - (y-1)z style split
    z = raw
    return float(np.mean(np.where(z >= 0, np.log1p(np.exp(-z)) + (1 - y) * z,
                                  np.log1p(np.exp(z)) - y * z)))


def train_gbdt(X: SparseMatrix, y, loss: str = "squared",
               params: GbdtParams = GbdtParams()) -> GbdtModel:
    """Boosted trees; ``loss`` is "squared" (regression) or "logistic" (y in {0,1})."""
    if loss not in ("squared", "logistic"):
        raise ValueError(f"loss must be 'squared' or 'logistic', got {loss!r}")
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != len(y):
        raise ValueError("row count mismatch between X and y")
    if not np.all(np.isfinite(y)):
        raise NonFinite("targets contain non-finite values")
    if loss == "logistic":
        if not np.all(np.isin(y, (0.0, 1.0))):
            raise ValueError("logistic loss needs labels in {0, 1}")
        if len(np.unique(y)) < 2:
            raise SingleClass("need both classes to train a classifier")
        pbar = float(np.mean(y))
        base = math.log(pbar / (1.0 - pbar))
    else:
        base = float(np.mean(y))

    n = X.shape[0]
    columns = X.to_dense().T  # feature-major view for split search
    raw = np.full(n, base)
    rng = np.random.default_rng(params.seed)
    trees: list[TreeNode] = []
    losses = [_loss_value(loss, y, raw)]

    for _ in range(params.n_estimators):
        if loss == "squared":
            residual = y - raw
            hessian = np.ones(n)
        else:
            p = _sigmoid(raw)
            residual = y - p
            hessian = p * (1.0 - p)

        if params.subsample < 1.0:
            size = max(1, int(math.ceil(params.subsample * n)))
            rows = np.sort(rng.choice(n, size=size, replace=False))
        else:
            rows = np.arange(n)

        tree = _grow_tree(columns, rows, residual, hessian, 0, params)
        trees.append(tree)
        increments = np.empty(n)
        _tree_predict_all(tree, columns, np.arange(n), increments)
        raw += params.learning_rate * increments
        losses.append(_loss_value(loss, y, raw))

    return GbdtModel(base_score=base, trees=trees, loss=loss, params=params,
                     n_features=X.shape[1], train_losses=losses)


def predict_raw(model: GbdtModel, X: SparseMatrix) -> np.ndarray:
    columns = X.to_dense().T
    out = np.full(X.shape[0], model.base_score)
    increments = np.empty(X.shape[0])
    rows = np.arange(X.shape[0])
    for tree in model.trees:
        _tree_predict_all(tree, columns, rows, increments)
        out += model.params.learning_rate * increments
    return out


def predict_gbdt(model: GbdtModel, X: SparseMatrix) -> np.ndarray:
    """Probabilities for logistic loss, raw estimates for squared loss."""
    raw = predict_raw(model, X)
    return _sigmoid(raw) if model.loss == "logistic" else raw


def feature_importance(model: GbdtModel) -> dict[int, float]:
    """Total split gain per feature, keyed by feature index (ascending)."""
    totals: dict[int, float] = {}

    def visit(node: TreeNode):
        if node.is_leaf:
            return
        totals[node.feature] = totals.get(node.feature, 0.0) + float(node.gain)
        visit(node.left)
        visit(node.right)

    for tree in model.trees:
        visit(tree)
    return dict(sorted(totals.items()))
