import json

import numpy as np
import pytest

from adscreen.errors import SingleClass, UncalibratedModel
from adscreen.sparse import SparseMatrix
from adscreen.svm import (SvmModel, SvmParams, fit_platt, kernel_eval,
                          platt_probability, predict_decision, predict_label,
                          predict_proba, predict_svr, train_svc, train_svr)


def dense(rows):
    return SparseMatrix.from_dense(np.asarray(rows, dtype=float))


def random_problem(rng, n=30, d=3):
    X = rng.normal(size=(n, d))
    w = rng.normal(size=d)
    y = np.where(X @ w + 0.3 * rng.normal(size=n) > 0, 1.0, -1.0)
    if len(np.unique(y)) == 1:
        y[0] = -y[0]
    return dense(X), y


def kkt_violations(model: SvmModel, X: SparseMatrix, y: np.ndarray, tol: float):
    """Max violation of the stationarity conditions, reconstructed from the
    stored support set (everything else has alpha = 0)."""
    f = predict_decision(model, X)
    margins = y * f
    C = model.params.C
    alpha = np.zeros(X.shape[0])
    alpha[model.support_idx] = np.abs(model.dual_coef)
    worst = 0.0
    for i in range(X.shape[0]):
        if alpha[i] <= 1e-9 * C:
            worst = max(worst, (1 - tol) - margins[i])  # need y f >= 1 - tol
        elif alpha[i] >= C * (1 - 1e-9):
            worst = max(worst, margins[i] - (1 + tol))  # need y f <= 1 + tol
        else:
            worst = max(worst, abs(margins[i] - 1) - tol)
    return worst


class TestKernels:
    def test_rbf_self_is_one(self):
        rng = np.random.default_rng(0)
        for gamma in (0.1, 1.0, 5.0):
            x = rng.normal(size=4)
            assert kernel_eval("rbf", gamma, 0.0, x, x) == pytest.approx(1.0)

    def test_sigmoid_orthogonal_is_zero(self):
        assert kernel_eval("sigmoid", 1.0, 0.0, [1, 0], [0, 1]) == pytest.approx(0.0)

    def test_rbf_symmetry(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            a, b = rng.normal(size=5), rng.normal(size=5)
            assert kernel_eval("rbf", 0.7, 0.0, a, b) == pytest.approx(
                kernel_eval("rbf", 0.7, 0.0, b, a))

    def test_rbf_formula(self):
        assert kernel_eval("rbf", 2.0, 0.0, [0.0], [1.0]) == pytest.approx(np.exp(-2.0))

    def test_sigmoid_formula(self):
        assert kernel_eval("sigmoid", 0.5, 1.0, [2.0], [3.0]) == pytest.approx(
            np.tanh(0.5 * 6.0 + 1.0))

    def test_gamma_auto_resolution(self):
        from adscreen.svm import resolve_gamma
        X = dense([[0.0, 2.0], [2.0, 2.0]])  # per-feature variances 1, 0
        got = resolve_gamma(SvmParams(gamma="auto"), X)
        assert got == pytest.approx(1.0 / (2 * 0.5))
        # constant matrix: denominator floored instead of dividing by zero
        flat = dense([[1.0], [1.0]])
        assert resolve_gamma(SvmParams(gamma="auto"), flat) == pytest.approx(1e12)
        assert resolve_gamma(SvmParams(gamma=0.3), X) == 0.3


class TestTrainSvc:
    def test_two_point_toy(self):
        X = dense([[0.0], [1.0]])
        model = train_svc(X, [-1, 1], SvmParams(kernel="rbf", gamma=1.0, C=1.0))
        d = predict_decision(model, X)
        assert d[0] < 0 < d[1]
        assert np.array_equal(predict_label(model, X), [-1.0, 1.0])

    def test_single_class_error(self):
        X = dense([[0.0], [1.0]])
        with pytest.raises(SingleClass):
            train_svc(X, [1, 1], SvmParams())

    def test_xor_rbf(self):
        X = dense([[0, 0], [0, 1], [1, 0], [1, 1]])
        y = np.array([-1.0, 1.0, 1.0, -1.0])
        model = train_svc(X, y, SvmParams(kernel="rbf", gamma=1.0, C=10.0))
        assert np.array_equal(predict_label(model, X), y)

    def test_dual_feasibility(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            X, y = random_problem(rng)
            model = train_svc(X, y, SvmParams(kernel="rbf", gamma=0.8, C=1.0))
            signs = y[model.support_idx]
            assert abs(np.sum(np.abs(model.dual_coef) * signs)) < 1e-6

    def test_kkt_audit(self):
        rng = np.random.default_rng(11)
        for trial in range(10):
            X, y = random_problem(rng, n=25)
            params = SvmParams(kernel="rbf", gamma=0.5,
                               C=float(rng.choice([0.1, 0.5, 1.0])), tol=1e-3)
            model = train_svc(X, y, params)
            assert kkt_violations(model, X, y, 1e-3) <= 0, f"trial {trial}"

    def test_objective_monotone(self):
        rng = np.random.default_rng(3)
        X, y = random_problem(rng, n=40)
        model = train_svc(X, y, SvmParams(kernel="rbf", gamma=1.0, C=1.0))
        trace = np.asarray(model.objective_trace)
        assert np.all(np.diff(trace) >= -1e-9)

    def test_determinism_identical_bytes(self):
        rng = np.random.default_rng(9)
        X, y = random_problem(rng)
        params = SvmParams(kernel="sigmoid", gamma=0.3, coef0=0.1, C=0.5)
        a = json.dumps(train_svc(X, y, params, seed=4).to_dict(), sort_keys=True)
        b = json.dumps(train_svc(X, y, params, seed=4).to_dict(), sort_keys=True)
        assert a == b

    def test_sigmoid_kernel_trains(self):
        rng = np.random.default_rng(21)
        X, y = random_problem(rng, n=30)
        model = train_svc(X, y, SvmParams(kernel="sigmoid", gamma=0.2, C=1.0))
        acc = np.mean(predict_label(model, X) == y)
        assert acc > 0.6

    def test_serialization_round_trip(self):
        rng = np.random.default_rng(13)
        X, y = random_problem(rng)
        model = train_svc(X, y, SvmParams(kernel="rbf", gamma=0.5, C=1.0))
        clone = SvmModel.from_dict(model.to_dict())
        assert np.allclose(predict_decision(clone, X), predict_decision(model, X))


class TestPlatt:
    def test_sigmoid_midpoint(self):
        assert platt_probability(0.0, -1.0, 0.0) == pytest.approx(0.5)

    def test_symmetric_pair_sums_to_one(self):
        p = platt_probability(np.array([-2.0, 2.0]), -1.0, 0.0)
        assert p[0] + p[1] == pytest.approx(1.0)

    def test_monotone_when_a_negative(self):
        d = np.linspace(-3, 3, 25)
        p = platt_probability(d, -1.5, 0.2)
        assert np.all(np.diff(p) > 0)

    def test_separated_fit_is_monotone_and_bounded(self):
        decisions = np.array([-1.0, -1.0, 1.0, 1.0])
        labels = np.array([-1.0, -1.0, 1.0, 1.0])
        a, b = fit_platt(decisions, labels)
        p = platt_probability(np.sort(decisions), a, b)
        assert np.all(np.diff(p) >= 0)
        assert np.all((p > 0) & (p < 1))
        assert a < 0

    def test_degenerate_decisions_give_prior(self):
        labels = np.array([1.0, 1.0, 1.0, -1.0])
        a, b = fit_platt(np.zeros(4), labels)
        assert a == 0.0
        prior = (3 + 1) / (4 + 2)
        assert platt_probability(0.0, a, b) == pytest.approx(prior)

    def test_label_flip_reverses_ordering(self):
        rng = np.random.default_rng(2)
        decisions = rng.normal(size=40)
        labels = np.where(decisions + 0.2 * rng.normal(size=40) > 0, 1.0, -1.0)
        if len(np.unique(labels)) == 1:
            labels[0] = -labels[0]
        a1, _ = fit_platt(decisions, labels)
        a2, _ = fit_platt(decisions, -labels)
        assert np.sign(a1) != np.sign(a2)

    def test_proba_requires_calibration(self):
        X = dense([[0.0], [1.0]])
        model = train_svc(X, [-1, 1], SvmParams(kernel="rbf", gamma=1.0))
        with pytest.raises(UncalibratedModel):
            predict_proba(model, X)

    def test_probability_training_path(self):
        rng = np.random.default_rng(17)
        X, y = random_problem(rng, n=30)
        model = train_svc(X, y, SvmParams(kernel="rbf", gamma=0.5, C=1.0),
                          seed=3, probability=True)
        p = predict_proba(model, X)
        assert np.all((p > 0) & (p < 1))
        # calibrated probabilities track the decision ordering
        d = predict_decision(model, X)
        order = np.argsort(d)
        assert np.all(np.diff(p[order]) >= -1e-12)


class TestSvr:
    def test_constant_target(self):
        X = dense([[0.0], [1.0], [2.0]])
        model = train_svr(X, [5.0, 5.0, 5.0],
                          SvmParams(kernel="rbf", gamma=1.0, C=1.0, epsilon=0.5))
        assert np.allclose(predict_svr(model, X), 5.0, atol=1e-9)

    def test_collinear_fit(self):
        X = dense([[0.0], [1.0], [2.0]])
        y = np.array([0.0, 1.0, 2.0])
        model = train_svr(X, y, SvmParams(kernel="rbf", gamma=0.1, C=100.0,
                                          epsilon=0.01, tol=1e-5))
        rmse = float(np.sqrt(np.mean((predict_svr(model, X) - y) ** 2)))
        assert rmse <= 0.1

    def test_wide_epsilon_collapses_to_constant(self):
        rng = np.random.default_rng(8)
        X = dense(rng.normal(size=(12, 2)))
        y = rng.uniform(10, 11, size=12)
        model = train_svr(X, y, SvmParams(kernel="rbf", gamma=1.0, C=1.0, epsilon=5.0))
        assert model.support.shape[0] == 0  # all dual coefficients at zero
        preds = predict_svr(model, X)
        assert np.allclose(preds, model.bias)
        assert 10 <= model.bias <= 11

    def test_predictions_finite(self):
        rng = np.random.default_rng(30)
        X = dense(rng.normal(size=(20, 3)))
        y = rng.normal(size=20)
        model = train_svr(X, y, SvmParams(kernel="rbf", gamma=0.5, C=1.0, epsilon=0.1))
        assert np.all(np.isfinite(predict_svr(model, X)))
