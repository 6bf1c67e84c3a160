"""Kernel SVM trained by sequential minimal optimization.

Binary C-SVC and epsilon-SVR over rbf / sigmoid kernels, with Platt-scaled
probabilities.  Both problems are solved as the standard box-constrained
dual

    min  1/2 a' Q a + p' a    s.t.  y' a = 0,  0 <= a <= C

using maximal-violating-pair working-set selection: classification uses it
directly (p = -1, Q = yy' o K), regression through the stacked 2n-variable
form with Q' = [[K, -K], [-K, K]].  Pair selection is first-order and
breaks ties on the lowest index, so training is deterministic for given
inputs; the seed only drives the calibration folds.

Corpora here are small, so the full kernel matrix is precomputed densely.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import ConvergenceWarning, NonFinite, SingleClass, UncalibratedModel
from .sparse import SparseMatrix

_TAU = 1e-12


@dataclass(frozen=True)
class SvmParams:
    kernel: str = "rbf"
    C: float = 1.0
    gamma: Union[str, float] = "auto"
    coef0: float = 0.0
    epsilon: float = 0.1  # SVR tube half-width
    tol: float = 1e-3
    max_passes: int = 200_000  # cap on accepted pair updates

    def __post_init__(self):
        if self.kernel not in ("rbf", "sigmoid"):
            raise ValueError(f"kernel must be 'rbf' or 'sigmoid', got {self.kernel!r}")
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.gamma != "auto" and self.gamma <= 0:
            raise ValueError("gamma must be positive or 'auto'")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


def kernel_eval(kernel: str, gamma: float, coef0: float, x1, x2) -> float:
    """Kernel value for two single vectors (dense or 1-d array-like)."""
    x1 = np.asarray(x1, dtype=np.float64).ravel()
    x2 = np.asarray(x2, dtype=np.float64).ravel()
    if kernel == "rbf":
        diff = x1 - x2
        return float(np.exp(-gamma * np.dot(diff, diff)))
    if kernel == "sigmoid":
        return float(np.tanh(gamma * np.dot(x1, x2) + coef0))
    raise ValueError(f"unknown kernel {kernel!r}")


def kernel_matrix(kernel: str, gamma: float, coef0: float,
                  a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise kernel between the rows of two dense matrices."""
    inner = a @ b.T
    if kernel == "sigmoid":
        return np.tanh(gamma * inner + coef0)
    sq = (np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :] - 2.0 * inner)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def resolve_gamma(params: SvmParams, X: SparseMatrix) -> float:
    """gamma='auto' resolves to 1 / (n_features * mean per-feature variance)."""
    if params.gamma != "auto":
        return float(params.gamma)
    n, d = X.shape
    col_sum = np.zeros(d)
    col_sumsq = np.zeros(d)
    np.add.at(col_sum, X.indices, X.data)
    np.add.at(col_sumsq, X.indices, X.data ** 2)
    variances = col_sumsq / n - (col_sum / n) ** 2
    mean_var = float(np.mean(variances)) if d else 0.0
    return 1.0 / max(d * mean_var, _TAU)


@dataclass
class SvmModel:
    kind: str  # "svc" or "svr"
    support: SparseMatrix
    dual_coef: np.ndarray  # alpha_i * y_i (svc) or beta_i (svr)
    bias: float
    params: SvmParams
    gamma_value: float
    platt: Optional[tuple[float, float]] = None
    objective_trace: Optional[list[float]] = None  # max-form dual, not serialized
    support_idx: Optional[np.ndarray] = None  # training-row indices, not serialized

    def to_dict(self) -> dict:
        return {
            "format": "adscreen-svm",
            "version": 1,
            "kind": self.kind,
            "params": {
                "kernel": self.params.kernel,
                "C": self.params.C,
                "gamma": self.params.gamma,
                "coef0": self.params.coef0,
                "epsilon": self.params.epsilon,
                "tol": self.params.tol,
                "max_passes": self.params.max_passes,
            },
            "gamma_value": self.gamma_value,
            "bias": self.bias,
            "dual_coef": [float(v) for v in self.dual_coef],
            "support": {
                "shape": list(self.support.shape),
                "indptr": [int(v) for v in self.support.indptr],
                "indices": [int(v) for v in self.support.indices],
                "data": [float(v) for v in self.support.data],
            },
            "platt": None if self.platt is None else [self.platt[0], self.platt[1]],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SvmModel":
        p = payload["params"]
        sup = payload["support"]
        return cls(
            kind=payload["kind"],
            support=SparseMatrix(sup["indptr"], sup["indices"], sup["data"], sup["shape"]),
            dual_coef=np.asarray(payload["dual_coef"], dtype=np.float64),
            bias=float(payload["bias"]),
            params=SvmParams(**p),
            gamma_value=float(payload["gamma_value"]),
            platt=None if payload.get("platt") is None else tuple(payload["platt"]),
        )


def _check_targets(X: SparseMatrix, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != len(y):
        raise ValueError(f"X has {X.shape[0]} rows but y has {len(y)} entries")
    if not np.all(np.isfinite(y)):
        raise NonFinite("targets contain non-finite values")
    return y


def _smo(Q_column, QD, p, y_sign, C, tol, max_updates):
    """Solve min 1/2 a'Qa + p'a, y'a = 0, 0 <= a <= C by MVP pair updates.

    ``Q_column(t)`` returns column t of Q; QD is its diagonal.  Returns
    (alpha, bias, max-form objective trace).
    """
    n = len(p)
    alpha = np.zeros(n)
    g = p.astype(np.float64).copy()  # gradient Q alpha + p
    trace: list[float] = []
    edge = 1e-12 * max(C, 1.0)

    def objective_max_form():
        return -(0.5 * np.dot(alpha, g - p) + np.dot(p, alpha))

    updates = 0
    while True:
        v = -y_sign * g
        up = ((y_sign > 0) & (alpha < C - edge)) | ((y_sign < 0) & (alpha > edge))
        low = ((y_sign < 0) & (alpha < C - edge)) | ((y_sign > 0) & (alpha > edge))
        if not up.any() or not low.any():
            break
        i = int(np.argmax(np.where(up, v, -np.inf)))
        j = int(np.argmin(np.where(low, v, np.inf)))
        if v[i] - v[j] <= tol:
            break
        if updates >= max_updates:
            warnings.warn(
                f"SMO stopped after {max_updates} pair updates with gap "
                f"{v[i] - v[j]:.3g} > tol {tol:.3g}", ConvergenceWarning, stacklevel=3,
            )
            break

        Qi = Q_column(i)
        Qj = Q_column(j)
        old_i, old_j = alpha[i], alpha[j]
        if y_sign[i] != y_sign[j]:
            quad = QD[i] + QD[j] + 2.0 * Qi[j]
            if quad <= 0:
                quad = _TAU
            delta = (-g[i] - g[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = QD[i] + QD[j] - 2.0 * Qi[j]
            if quad <= 0:
                quad = _TAU
            delta = (g[i] - g[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total

        d_i = alpha[i] - old_i
        d_j = alpha[j] - old_j
        if d_i == 0.0 and d_j == 0.0:
            break  # numerically stuck pair; gap is already at float resolution
        g += Qi * d_i + Qj * d_j
        updates += 1
        trace.append(objective_max_form())

    # Bias from the stationarity interval; free vectors give the tight value.
    v = -y_sign * g
    free = (alpha > edge) & (alpha < C - edge)
    if free.any():
        bias = float(np.mean(v[free]))
    else:
        up = ((y_sign > 0) & (alpha < C - edge)) | ((y_sign < 0) & (alpha > edge))
        low = ((y_sign < 0) & (alpha < C - edge)) | ((y_sign > 0) & (alpha > edge))
        hi = np.max(v[up]) if up.any() else 0.0
        lo = np.min(v[low]) if low.any() else 0.0
        bias = float((hi + lo) / 2.0)
    return alpha, bias, trace


def train_svc(
    X: SparseMatrix,
    y,
    params: SvmParams = SvmParams(),
    seed: int = 0,
    probability: bool = False,
) -> SvmModel:
    """Train a binary classifier on labels in {-1, +1}.

    With ``probability=True`` a Platt sigmoid is fitted on pooled
    out-of-fold decision values from a 3-fold split of the training data,
    so the calibration never sees its own training decisions.
    """
    y = _check_targets(X, y)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("classification labels must be -1 or +1")
    if len(np.unique(y)) < 2:
        raise SingleClass("need both classes to train a classifier")

    gamma = resolve_gamma(params, X)
    dense = X.to_dense()
    K = kernel_matrix(params.kernel, gamma, params.coef0, dense, dense)
    yv = y.astype(np.float64)
    Q = (yv[:, None] * yv[None, :]) * K
    p = -np.ones(len(yv))

    alpha, bias, trace = _smo(lambda t: Q[:, t], np.diag(Q).copy(), p, yv,
                              params.C, params.tol, params.max_passes)

    keep = alpha > 1e-12 * params.C
    model = SvmModel(
        kind="svc",
        support=X.take_rows(np.nonzero(keep)[0]),
        dual_coef=alpha[keep] * yv[keep],
        bias=bias,
        params=params,
        gamma_value=gamma,
        objective_trace=trace,
        support_idx=np.nonzero(keep)[0],
    )
    if probability:
        decisions, labels = _out_of_fold_decisions(X, yv, params, seed)
        model.platt = fit_platt(decisions, labels)
    return model


def _out_of_fold_decisions(X, y, params, seed, n_folds=3):
    """Pooled held-out decision values for Platt fitting."""
    rng = np.random.default_rng(seed)
    pos = np.nonzero(y > 0)[0]
    neg = np.nonzero(y < 0)[0]
    if len(pos) < n_folds or len(neg) < n_folds:
        # Too small to split; calibrate on in-sample decisions instead.
        model = train_svc(X, y, params, seed=seed, probability=False)
        return predict_decision(model, X), y
    folds = [[] for _ in range(n_folds)]
    for block in (pos, neg):
        order = block[rng.permutation(len(block))]
        for k, idx in enumerate(order):
            folds[k % n_folds].append(idx)
    decisions = np.empty(len(y))
    for hold in folds:
        hold = np.asarray(sorted(hold))
        train = np.asarray(sorted(set(range(len(y))) - set(hold.tolist())))
        sub = train_svc(X.take_rows(train), y[train], params, probability=False)
        decisions[hold] = predict_decision(sub, X.take_rows(hold))
    return decisions, y


def train_svr(X: SparseMatrix, y, params: SvmParams = SvmParams(), seed: int = 0) -> SvmModel:
    """Train epsilon-insensitive regression via the stacked 2n-variable dual."""
    y = _check_targets(X, y)
    n = X.shape[0]
    gamma = resolve_gamma(params, X)
    dense = X.to_dense()
    K = kernel_matrix(params.kernel, gamma, params.coef0, dense, dense)

    sign = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([params.epsilon - y, params.epsilon + y])
    KD = np.diag(K)

    def q_column(t):
        base = t % n
        col = np.concatenate([K[:, base], K[:, base]])
        return sign * (sign[t] * col)

    QD = np.concatenate([KD, KD])
    alpha2, bias, trace = _smo(q_column, QD, p, sign, params.C, params.tol, params.max_passes)
    beta = alpha2[:n] - alpha2[n:]

    keep = np.abs(beta) > 1e-12 * params.C
    return SvmModel(
        kind="svr",
        support=X.take_rows(np.nonzero(keep)[0]),
        dual_coef=beta[keep],
        bias=bias,
        params=params,
        gamma_value=gamma,
        objective_trace=trace,
        support_idx=np.nonzero(keep)[0],
    )


def predict_decision(model: SvmModel, X: SparseMatrix) -> np.ndarray:
    """Raw decision values f(x) (signed margin for svc, estimate for svr)."""
    if model.support.shape[0] == 0:
        return np.full(X.shape[0], model.bias)
    K = kernel_matrix(model.params.kernel, model.gamma_value, model.params.coef0,
                      X.to_dense(), model.support.to_dense())
    return K @ model.dual_coef + model.bias


def predict_label(model: SvmModel, X: SparseMatrix) -> np.ndarray:
    """Hard labels in {-1, +1}; zero decisions fall to the negative class."""
    return np.where(predict_decision(model, X) > 0, 1.0, -1.0)


def predict_proba(model: SvmModel, X: SparseMatrix) -> np.ndarray:
    """Calibrated P(y=+1 | x) via the fitted Platt sigmoid."""
    if model.platt is None:
        raise UncalibratedModel("model has no Platt calibration; train with probability=True")
    a, b = model.platt
    return platt_probability(predict_decision(model, X), a, b)


def predict_svr(model: SvmModel, X: SparseMatrix) -> np.ndarray:
    if model.kind != "svr":
        raise ValueError("predict_svr needs an svr model")
    return predict_decision(model, X)


# --- Platt scaling -----------------------------------------------------------

def platt_probability(decision, a: float, b: float) -> np.ndarray:
    f = np.asarray(decision, dtype=np.float64)
    z = a * f + b
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = np.exp(-z[pos]) / (1.0 + np.exp(-z[pos]))
    out[~pos] = 1.0 / (1.0 + np.exp(z[~pos]))
    return out


def fit_platt(decisions, labels, max_iter: int = 200) -> tuple[float, float]:
    """Fit the sigmoid P(y=+1|f) = 1/(1+exp(A f + B)) by penalized NLL.

    Uses the smoothed targets t+ = (N+ + 1)/(N+ + 2), t- = 1/(N- + 2) and a
    damped Newton iteration (the numerically careful variant that avoids
    catastrophic cancellation for large |A f + B|).  Degenerate inputs where
    every decision value is identical collapse to A=0 with B set from the
    smoothed class prior.
    """
    f = np.asarray(decisions, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if len(f) != len(y):
        raise ValueError("decisions and labels length mismatch")
    n_pos = int(np.sum(y > 0))
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("Platt fitting needs both classes")

    prior = (n_pos + 1.0) / (n_pos + n_neg + 2.0)
    if np.ptp(f) < 1e-12:
        return 0.0, float(math.log((1.0 - prior) / prior))

    hi = (n_pos + 1.0) / (n_pos + 2.0)
    lo = 1.0 / (n_neg + 2.0)
    t = np.where(y > 0, hi, lo)

    def nll(a, b):
        z = a * f + b
        # t*z + log(1+exp(-z)) written stably for either sign of z
        return float(np.sum(np.where(z >= 0, t * z + np.log1p(np.exp(-z)),
                                     (t - 1.0) * z + np.log1p(np.exp(z)))))

    a, b = 0.0, math.log((n_neg + 1.0) / (n_pos + 1.0))
    best = nll(a, b)
    sigma = 1e-12
    for _ in range(max_iter):
        p = platt_probability(f, a, b)
        w = p * (1.0 - p)
        d = t - p  # dNLL/dz
        g_a = float(np.dot(d, f))
        g_b = float(np.sum(d))
        if max(abs(g_a), abs(g_b)) < 1e-8:
            break
        h_aa = float(np.dot(w, f * f)) + sigma
        h_bb = float(np.sum(w)) + sigma
        h_ab = float(np.dot(w, f))
        det = h_aa * h_bb - h_ab * h_ab
        if det <= 0:
            break
        da = -(h_bb * g_a - h_ab * g_b) / det
        db = -(h_aa * g_b - h_ab * g_a) / det
        step = 1.0
        while step >= 1e-10:
            cand = nll(a + step * da, b + step * db)
            if cand < best + 1e-12:
                a += step * da
                b += step * db
                best = cand
                break
            step /= 2.0
        else:
            break
    return float(a), float(b)
