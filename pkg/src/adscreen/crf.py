"""Linear-chain CRF over per-utterance feature sequences.

Two labels (NonAD=0, AD=1).  Position t of a sequence contributes
state_weights[y_t] . x_t, and each adjacent pair contributes
transition_weights[y_{t-1}, y_t]; observation features are real-valued
(base-model probability, scaled timing features, demographics, plus an
always-on bias term), so they multiply the state weights directly.

Training maximizes

    sum log P(y-seq | x-seq)  -  c1 * ||w||_1  -  c2 * ||w||_2^2

by full-batch proximal gradient ascent with backtracking line search: the
smooth part's gradient comes from forward-backward marginals, and the L1
term is applied as a soft-threshold after each gradient step, which is
what lets weights reach exactly zero.  All recurrences run in log space.

Transcript-level classification reads the label at the last position of
the Viterbi path.  Score ties break toward NonAD everywhere, so an
all-zero model predicts NonAD.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConvergenceWarning, DimensionMismatch, EmptySequence, NonFinite

LABELS = ("NonAD", "AD")
N_LABELS = 2


@dataclass(frozen=True)
class CrfParams:
    c1: float = 0.0  # L1 coefficient
    c2: float = 0.0  # L2 coefficient
    max_iter: int = 500
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("penalty coefficients must be >= 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class FeatureSequence:
    transcript_id: str
    steps: np.ndarray  # (length, n_features)

    def __post_init__(self):
        object.__setattr__(self, "steps", np.asarray(self.steps, dtype=np.float64))
        if self.steps.ndim != 2 or self.steps.shape[0] == 0:
            raise EmptySequence(f"{self.transcript_id}: sequence must be (length>0, features)")
        if not np.all(np.isfinite(self.steps)):
            raise NonFinite(f"{self.transcript_id}: sequence features must be finite")


@dataclass
class CrfModel:
    state_weights: np.ndarray  # (N_LABELS, n_features)
    transition_weights: np.ndarray  # (N_LABELS, N_LABELS)
    n_features: int
    labels: tuple[str, str] = LABELS
    feature_names: Optional[list[str]] = None
    objective_trace: list[float] = field(default_factory=list)  # not serialized

    def to_dict(self) -> dict:
        return {
            "format": "adscreen-crf",
            "version": 1,
            "labels": list(self.labels),
            "n_features": self.n_features,
            "feature_names": self.feature_names,
            "state_weights": [[float(v) for v in row] for row in self.state_weights],
            "transition_weights": [[float(v) for v in row] for row in self.transition_weights],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "CrfModel":
        return cls(
            state_weights=np.asarray(payload["state_weights"], dtype=np.float64),
            transition_weights=np.asarray(payload["transition_weights"], dtype=np.float64),
            n_features=payload["n_features"],
            labels=tuple(payload["labels"]),
            feature_names=payload.get("feature_names"),
        )


def _logsumexp(values: np.ndarray, axis=None):
    peak = np.max(values, axis=axis, keepdims=True)
    out = peak + np.log(np.sum(np.exp(values - peak), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis) if axis is not None else float(out)


def _log_add(a: float, b: float) -> float:
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


def _fb_core(emit: np.ndarray, trans: np.ndarray):
    """Two-state forward-backward with scalar log-space recurrences.

    Sequences here are short and two-label, so plain float arithmetic beats
    array ops by an order of magnitude.  Returns (log_z, alpha, beta) where
    alpha/beta are (L, 2) lists of log values.
    """
    length = emit.shape[0]
    t00, t01 = float(trans[0, 0]), float(trans[0, 1])
    t10, t11 = float(trans[1, 0]), float(trans[1, 1])
    e = emit.tolist()

    alpha = [[0.0, 0.0] for _ in range(length)]
    alpha[0][0] = e[0][0]
    alpha[0][1] = e[0][1]
    for t in range(1, length):
        a0, a1 = alpha[t - 1]
        alpha[t][0] = e[t][0] + _log_add(a0 + t00, a1 + t10)
        alpha[t][1] = e[t][1] + _log_add(a0 + t01, a1 + t11)
    log_z = _log_add(alpha[length - 1][0], alpha[length - 1][1])

    beta = [[0.0, 0.0] for _ in range(length)]
    for t in range(length - 2, -1, -1):
        b0 = e[t + 1][0] + beta[t + 1][0]
        b1 = e[t + 1][1] + beta[t + 1][1]
        beta[t][0] = _log_add(t00 + b0, t01 + b1)
        beta[t][1] = _log_add(t10 + b0, t11 + b1)
    return log_z, alpha, beta


def _emissions(model: CrfModel, sequence: FeatureSequence) -> np.ndarray:
    if sequence.steps.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"{sequence.transcript_id}: {sequence.steps.shape[1]} features, "
            f"model expects {model.n_features}")
    return sequence.steps @ model.state_weights.T  # (L, N_LABELS)


def forward_backward(model: CrfModel, sequence: FeatureSequence):
    """Log partition plus per-step and pairwise marginals.

    Returns (log_z, unary, pairwise): unary[t, y] = P(y_t = y | x) with each
    row summing to one; pairwise[t, y, y'] = P(y_t = y, y_{t+1} = y' | x)
    for t in 0..L-2 (empty for length-1 sequences).
    """
    emit = _emissions(model, sequence)
    trans = model.transition_weights
    length = emit.shape[0]
    log_z, alpha, beta = _fb_core(emit, trans)
    alpha = np.asarray(alpha)
    beta = np.asarray(beta)

    unary = np.exp(alpha + beta - log_z)
    unary /= unary.sum(axis=1, keepdims=True)

    pairwise = np.empty((max(length - 1, 0), N_LABELS, N_LABELS))
    for t in range(length - 1):
        joint = alpha[t][:, None] + trans + (emit[t + 1] + beta[t + 1])[None, :] - log_z
        pairwise[t] = np.exp(joint)
        pairwise[t] /= pairwise[t].sum()
    return log_z, unary, pairwise


def sequence_log_likelihood(model: CrfModel, sequence: FeatureSequence,
                            labels: Sequence[int]) -> float:
    emit = _emissions(model, sequence)
    if len(labels) != emit.shape[0]:
        raise DimensionMismatch("label sequence length mismatch")
    score = float(emit[0, labels[0]])
    for t in range(1, len(labels)):
        score += float(model.transition_weights[labels[t - 1], labels[t]] + emit[t, labels[t]])
    log_z, _, _ = forward_backward(model, sequence)
    return score - log_z


def viterbi_decode(model: CrfModel, sequence: FeatureSequence) -> list[int]:
    """Highest-scoring label path; ties resolve to the lower label (NonAD)."""
    emit = _emissions(model, sequence)
    trans = model.transition_weights
    length = emit.shape[0]
    score = emit[0].copy()
    back = np.zeros((length, N_LABELS), dtype=np.int64)
    for t in range(1, length):
        cand = score[:, None] + trans  # cand[prev, cur]
        # argmax over prev with ties to the lower index
        back[t] = np.argmax(cand, axis=0)
        score = emit[t] + np.max(cand, axis=0)
    last = int(np.argmax(score))
    path = [last]
    for t in range(length - 1, 0, -1):
        last = int(back[t, last])
        path.append(last)
    path.reverse()
    return path


def transcript_prediction(model: CrfModel, sequence: FeatureSequence) -> str:
    """Transcript label = label of the final decoded state."""
    return LABELS[viterbi_decode(model, sequence)[-1]]


def _pack(state: np.ndarray, trans: np.ndarray) -> np.ndarray:
    return np.concatenate([state.ravel(), trans.ravel()])


def _unpack(theta: np.ndarray, n_features: int):
    split = N_LABELS * n_features
    return (theta[:split].reshape(N_LABELS, n_features),
            theta[split:].reshape(N_LABELS, N_LABELS))


def _smooth_objective_and_grad(theta, sequences, label_seqs, n_features, c2,
                               need_grad: bool = True):
    """Log-likelihood minus the L2 term, with its gradient (observed minus
    expected feature counts from forward-backward marginals)."""
    state, trans = _unpack(theta, n_features)
    total = 0.0
    g_state = np.zeros_like(state)
    g_trans = np.zeros_like(trans)
    for seq, labels in zip(sequences, label_seqs):
        emit = seq.steps @ state.T
        length = emit.shape[0]
        lab = [int(v) for v in labels]
        log_z, alpha, beta = _fb_core(emit, trans)
        e = emit.tolist()
        score = e[0][lab[0]]
        for t in range(1, length):
            score += trans[lab[t - 1], lab[t]] + e[t][lab[t]]
        total += score - log_z
        if not need_grad:
            continue
        a = np.asarray(alpha)
        b = np.asarray(beta)
        unary = np.exp(a + b - log_z)
        observed = np.zeros((length, N_LABELS))
        observed[np.arange(length), lab] = 1.0
        g_state += (observed - unary).T @ seq.steps
        for t in range(1, length):
            g_trans[lab[t - 1], lab[t]] += 1.0
        for src in range(N_LABELS):
            for dst in range(N_LABELS):
                t_sd = trans[src, dst]
                expected = 0.0
                for t in range(length - 1):
                    expected += math.exp(alpha[t][src] + t_sd
                                         + e[t + 1][dst] + beta[t + 1][dst] - log_z)
                g_trans[src, dst] -= expected
    total -= c2 * float(np.dot(theta, theta))
    if not need_grad:
        return total, None
    grad = _pack(g_state, g_trans) - 2.0 * c2 * theta
    return total, grad


def _soft_threshold(x: np.ndarray, radius: float) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - radius, 0.0)


def penalized_objective(theta, sequences, label_seqs, n_features, c1, c2) -> float:
    smooth, _ = _smooth_objective_and_grad(theta, sequences, label_seqs, n_features, c2)
    return smooth - c1 * float(np.sum(np.abs(theta)))


def crf_train(
    sequences: Sequence[FeatureSequence],
    label_sequences: Sequence[Sequence[int]],
    params: CrfParams = CrfParams(),
    feature_names: Optional[list[str]] = None,
) -> CrfModel:
    """Fit the penalized model on sequences with per-step label indices."""
    if not sequences:
        raise EmptySequence("no training sequences")
    if len(sequences) != len(label_sequences):
        raise DimensionMismatch("sequences and label_sequences length mismatch")
    n_features = sequences[0].steps.shape[1]
    label_seqs = []
    for seq, labels in zip(sequences, label_sequences):
        if seq.steps.shape[1] != n_features:
            raise DimensionMismatch(f"{seq.transcript_id}: inconsistent feature dimension")
        labels = np.asarray(labels, dtype=np.int64)
        if len(labels) != seq.steps.shape[0]:
            raise DimensionMismatch(f"{seq.transcript_id}: label sequence length mismatch")
        if labels.min() < 0 or labels.max() >= N_LABELS:
            raise ValueError("labels must be 0 (NonAD) or 1 (AD)")
        label_seqs.append(labels)

    theta = np.zeros(N_LABELS * n_features + N_LABELS * N_LABELS)
    value, grad = _smooth_objective_and_grad(theta, sequences, label_seqs, n_features, params.c2)
    objective = value - params.c1 * float(np.sum(np.abs(theta)))
    trace = [objective]
    step = 1.0

    converged = False
    for _ in range(params.max_iter):
        accepted = False
        while step >= 1e-14:
            candidate = _soft_threshold(theta + step * grad, step * params.c1)
            cand_value, _ = _smooth_objective_and_grad(
                candidate, sequences, label_seqs, n_features, params.c2, need_grad=False)
            cand_objective = cand_value - params.c1 * float(np.sum(np.abs(candidate)))
            if cand_objective > objective - 1e-15:
                accepted = True
                improvement = cand_objective - objective
                theta = candidate
                _, grad = _smooth_objective_and_grad(
                    theta, sequences, label_seqs, n_features, params.c2)
                objective = cand_objective
                trace.append(objective)
                step = min(step * 1.5, 1e6)
                break
            step /= 2.0
        if not accepted:
            converged = True
            break
        if improvement < params.tol:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"CRF training hit max_iter={params.max_iter} before tol={params.tol}",
            ConvergenceWarning, stacklevel=2,
        )

    state, trans = _unpack(theta, n_features)
    return CrfModel(state_weights=state, transition_weights=trans, n_features=n_features,
                    feature_names=feature_names, objective_trace=trace)
