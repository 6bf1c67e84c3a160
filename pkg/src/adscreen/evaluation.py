"""Cross-validation folds, classification/regression metrics, and search.

Fold construction supports two strategies.  ``stratified`` deals each
class's shuffled rows round-robin so per-fold class counts stay within one
sample of balanced.  ``grouped`` keeps every row of a transcript inside a
single fold (greedy smallest-fold assignment over shuffled groups), which
is what makes utterance-level evaluation leak-free.

Metrics are computed per class over {NonAD, AD} with AD as the positive
class and macro-averaged with equal class weight; 0/0 ratios score zero
and set a flag instead of raising.  Hyperparameter search enumerates the
full Cartesian product of list-valued axes; distribution-valued axes are
sampled jointly a fixed number of times (inverse-CDF exponential draws,
seeded) and crossed with the list axes.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import TooFewGroups

LABEL_NEGATIVE = "Control"  # dataset label for the NonAD class
CLASS_NAMES = ("NonAD", "AD")


# --- folds -------------------------------------------------------------------

@dataclass(frozen=True)
class FoldSpec:
    k: int = 5
    strategy: str = "stratified"  # or "grouped"
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("need at least 2 folds")
        if self.strategy not in ("stratified", "grouped"):
            raise ValueError(f"strategy must be 'stratified' or 'grouped', got {self.strategy!r}")


def stratified_folds(labels: Sequence, k: int, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    labels = np.asarray(labels)
    if k > len(labels):
        raise TooFewGroups(f"k={k} but only {len(labels)} rows")
    rng = np.random.default_rng(seed)
    assignment = np.empty(len(labels), dtype=np.int64)
    for value in sorted(set(labels.tolist())):
        rows = np.nonzero(labels == value)[0]
        rows = rows[rng.permutation(len(rows))]
        for pos, row in enumerate(rows):
            assignment[row] = pos % k
    return _assignment_to_folds(assignment, k)


def grouped_folds(groups: Sequence, k: int, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    groups = list(groups)
    order: dict = {}
    for g in groups:
        if g not in order:
            order[g] = len(order)
    unique = list(order)
    if k > len(unique):
        raise TooFewGroups(f"k={k} but only {len(unique)} groups")
    rng = np.random.default_rng(seed)
    shuffled = [unique[i] for i in rng.permutation(len(unique))]
    sizes = {g: 0 for g in unique}
    for g in groups:
        sizes[g] += 1
    fold_of_group: dict = {}
    fold_sizes = [0] * k
    for g in shuffled:
        target = min(range(k), key=lambda f: (fold_sizes[f], f))
        fold_of_group[g] = target
        fold_sizes[target] += sizes[g]
    assignment = np.asarray([fold_of_group[g] for g in groups], dtype=np.int64)
    return _assignment_to_folds(assignment, k)


def _assignment_to_folds(assignment: np.ndarray, k: int):
    folds = []
    everything = np.arange(len(assignment))
    for f in range(k):
        valid = everything[assignment == f]
        train = everything[assignment != f]
        folds.append((train, valid))
    return folds


def make_folds(records, spec: FoldSpec,
               label_of: Callable = None, group_of: Callable = None):
    """Build (train_idx, valid_idx) pairs for the requested fold strategy.

    ``stratified`` needs ``label_of``; ``grouped`` needs ``group_of``
    (defaults pull .label / .transcript_id off the records).
    """
    if spec.strategy == "stratified":
        label_of = label_of or (lambda r: r.label)
        return stratified_folds([label_of(r) for r in records], spec.k, spec.seed)
    group_of = group_of or (lambda r: r.transcript_id)
    return grouped_folds([group_of(r) for r in records], spec.k, spec.seed)


# --- metrics -----------------------------------------------------------------

@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @classmethod
    def from_labels(cls, predicted: Sequence[str], gold: Sequence[str],
                    positive: str = "AD") -> "ConfusionMatrix":
        if len(predicted) != len(gold):
            raise ValueError("prediction/gold length mismatch")
        tp = fp = fn = tn = 0
        for p, g in zip(predicted, gold):
            if g == positive:
                if p == positive:
                    tp += 1
                else:
                    fn += 1
            else:
                if p == positive:
                    fp += 1
                else:
                    tn += 1
        return cls(tp=tp, fp=fp, fn=fn, tn=tn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def _ratio(num: int, den: int) -> tuple[float, bool]:
    if den == 0:
        return 0.0, True
    return num / den, False


@dataclass
class MetricsReport:
    accuracy: float
    precision: float  # macro
    recall: float  # macro
    f1: float  # macro
    per_class: dict
    rmse: Optional[float] = None
    degenerate: bool = False  # some 0/0 ratio was coerced to 0
    fold_reports: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "per_class": self.per_class,
            "rmse": self.rmse,
            "degenerate": self.degenerate,
        }
        if self.fold_reports:
            out["folds"] = [r.to_dict() for r in self.fold_reports]
        return out


def classification_metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Per-class precision/recall/F1 plus macro averages and accuracy."""
    degenerate = False
    per_class = {}
    # (class name, tp-equivalent, fp-equivalent, fn-equivalent)
    layout = {
        "AD": (cm.tp, cm.fp, cm.fn),
        "NonAD": (cm.tn, cm.fn, cm.fp),
    }
    for name in CLASS_NAMES:
        tp_c, fp_c, fn_c = layout[name]
        precision, d1 = _ratio(tp_c, tp_c + fp_c)
        recall, d2 = _ratio(tp_c, tp_c + fn_c)
        f1, d3 = _ratio_f1(precision, recall)
        degenerate = degenerate or d1 or d2 or d3
        per_class[name] = {"precision": precision, "recall": recall, "f1": f1}
    accuracy, d4 = _ratio(cm.tp + cm.tn, cm.total)
    degenerate = degenerate or d4
    return MetricsReport(
        accuracy=accuracy,
        precision=sum(per_class[c]["precision"] for c in CLASS_NAMES) / len(CLASS_NAMES),
        recall=sum(per_class[c]["recall"] for c in CLASS_NAMES) / len(CLASS_NAMES),
        f1=sum(per_class[c]["f1"] for c in CLASS_NAMES) / len(CLASS_NAMES),
        per_class=per_class,
        degenerate=degenerate,
    )


def _ratio_f1(precision: float, recall: float) -> tuple[float, bool]:
    if precision + recall == 0:
        return 0.0, True
    return 2 * precision * recall / (precision + recall), False


def rmse(predictions, golds) -> float:
    predictions = np.asarray(predictions, dtype=np.float64)
    golds = np.asarray(golds, dtype=np.float64)
    if predictions.shape != golds.shape:
        raise ValueError("prediction/gold shape mismatch")
    return float(np.sqrt(np.mean((predictions - golds) ** 2)))


def mean_fold_metrics(fold_reports: list[MetricsReport]) -> MetricsReport:
    """Unweighted mean of per-fold metrics (the reported CV numbers)."""
    if not fold_reports:
        raise ValueError("no fold reports to average")
    def avg(get):
        return sum(get(r) for r in fold_reports) / len(fold_reports)
    rmses = [r.rmse for r in fold_reports if r.rmse is not None]
    per_class = {
        name: {
            metric: avg(lambda r, n=name, m=metric: r.per_class[n][m])
            for metric in ("precision", "recall", "f1")
        }
        for name in CLASS_NAMES
    } if all(r.per_class for r in fold_reports) else {}
    return MetricsReport(
        accuracy=avg(lambda r: r.accuracy),
        precision=avg(lambda r: r.precision),
        recall=avg(lambda r: r.recall),
        f1=avg(lambda r: r.f1),
        per_class=per_class,
        rmse=sum(rmses) / len(rmses) if rmses else None,
        degenerate=any(r.degenerate for r in fold_reports),
        fold_reports=fold_reports,
    )


# --- hyperparameter search -----------------------------------------------------

def sample_exponential(scale: float, n: int, seed: int = 0) -> list[float]:
    """n inverse-CDF exponential draws: x = -scale * ln(1 - u)."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    return [float(-scale * math.log(1.0 - ui)) for ui in u]


@dataclass(frozen=True)
class ExponentialAxis:
    scale: float
    n: int = 15


@dataclass
class GridSpec:
    """Named axes: lists enumerate exhaustively, ExponentialAxis axes are
    sampled jointly ``n`` times and crossed with the list axes."""
    axes: dict

    def configurations(self, seed: int = 0) -> list[dict]:
        list_axes = {k: v for k, v in self.axes.items() if isinstance(v, (list, tuple))}
        dist_axes = {k: v for k, v in self.axes.items() if isinstance(v, ExponentialAxis)}
        unknown = set(self.axes) - set(list_axes) - set(dist_axes)
        if unknown:
            raise ValueError(f"axes must be lists or ExponentialAxis: {sorted(unknown)}")

        if dist_axes:
            counts = {axis.n for axis in dist_axes.values()}
            if len(counts) != 1:
                raise ValueError("all distribution axes must share the same draw count")
            n = counts.pop()
            streams = {
                name: sample_exponential(axis.scale, n, seed=seed + 7919 * (offset + 1))
                for offset, (name, axis) in enumerate(sorted(dist_axes.items()))
            }
            draws = [{name: streams[name][d] for name in streams} for d in range(n)]
        else:
            draws = [{}]

        names = sorted(list_axes)
        combos = []
        for values in itertools.product(*(list_axes[n_] for n_ in names)):
            base = dict(zip(names, values))
            for draw in draws:
                combo = dict(base)
                combo.update(draw)
                combos.append(combo)
        return combos


@dataclass
class SearchResult:
    best_config: dict
    best_score: float
    ranked: list[dict]  # {config, mean_score, fold_scores | error}
    n_evaluated: int


def grid_search(
    evaluate_config: Callable[[dict, tuple[np.ndarray, np.ndarray]], float],
    grid: GridSpec,
    folds: list[tuple[np.ndarray, np.ndarray]],
    seed: int = 0,
) -> SearchResult:
    """Score every configuration by mean validation score over the folds.

    ``evaluate_config(config, (train_idx, valid_idx))`` returns one fold's
    validation score (higher is better).  A configuration that raises is
    recorded as failed and skipped, not fatal.  Ties keep the
    first-enumerated configuration.
    """
    configs = grid.configurations(seed=seed)
    results = []
    best = None
    for config in configs:
        fold_scores = []
        error = None
        for fold in folds:
            try:
                fold_scores.append(float(evaluate_config(config, fold)))
            except Exception as exc:  # noqa: BLE001 - search must survive bad configs
                error = f"{type(exc).__name__}: {exc}"
                break
        if error is not None:
            results.append({"config": config, "error": error})
            continue
        mean_score = sum(fold_scores) / len(fold_scores)
        results.append({"config": config, "mean_score": mean_score,
                        "fold_scores": fold_scores})
        if best is None or mean_score > best[0]:
            best = (mean_score, config)
    if best is None:
        raise RuntimeError("every configuration failed during grid search")
    ranked = sorted((r for r in results if "mean_score" in r),
                    key=lambda r: -r["mean_score"])
    ranked += [r for r in results if "error" in r]
    return SearchResult(best_config=best[1], best_score=best[0],
                        ranked=ranked, n_evaluated=len(configs))
