import numpy as np
import pytest

from adscreen.errors import SingleClass
from adscreen.gbdt import (GbdtModel, GbdtParams, TreeNode, best_split,
                           feature_importance, predict_gbdt, train_gbdt)
from adscreen.sparse import SparseMatrix


def dense(rows):
    return SparseMatrix.from_dense(np.asarray(rows, dtype=float))


def brute_force_root_split(X: np.ndarray, residual, hessian, min_leaf=1):
    """Enumerate every (feature, midpoint) split and score it with the same
    gain definition, written independently with explicit group sums."""
    n, d = X.shape
    def node_score(rows):
        g = sum(residual[i] for i in rows)
        h = sum(hessian[i] for i in rows)
        return g * g / max(h, 1e-12)
    parent = node_score(range(n))
    best = None  # (gain, feature, threshold)
    for j in range(d):
        values = sorted(set(X[:, j]))
        for lo, hi in zip(values, values[1:]):
            threshold = (lo + hi) / 2
            left = [i for i in range(n) if X[i, j] < threshold]
            right = [i for i in range(n) if X[i, j] >= threshold]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            gain = 0.5 * (node_score(left) + node_score(right) - parent)
            if gain <= 1e-12:
                continue
            if best is None or gain > best[0] + 1e-12:
                best = (gain, j, threshold)
    return best


class TestTraining:
    def test_depth_zero_single_tree_predicts_mean(self):
        X = dense([[0.0], [1.0], [2.0], [3.0]])
        y = [1.0, 2.0, 3.0, 6.0]
        model = train_gbdt(X, y, "squared", GbdtParams(n_estimators=1, max_depth=0))
        assert np.allclose(predict_gbdt(model, X), np.mean(y))

    def test_perfect_binary_split_exact_fit(self):
        X = dense([[0.0], [0.0], [1.0], [1.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        model = train_gbdt(X, y, "squared",
                           GbdtParams(n_estimators=1, max_depth=1, learning_rate=1.0))
        preds = predict_gbdt(model, X)
        assert np.allclose(preds, y)
        assert np.mean((preds - y) ** 2) == 0.0

    def test_thresholded_predictions_match_hand_tree(self):
        X = dense([[0.0], [0.0], [1.0], [1.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        model = train_gbdt(X, y, "squared",
                           GbdtParams(n_estimators=1, max_depth=1, learning_rate=1.0))
        labels = (predict_gbdt(model, X) > 0.5).astype(float)
        assert np.array_equal(labels, [0.0, 0.0, 1.0, 1.0])

    def test_logistic_separable(self):
        rng = np.random.default_rng(1)
        x = np.sort(rng.normal(size=40))
        X = dense(x[:, None])
        y = (x > 0).astype(float)
        model = train_gbdt(X, y, "logistic",
                           GbdtParams(n_estimators=100, max_depth=3, learning_rate=0.1))
        assert np.mean((predict_gbdt(model, X) > 0.5) == y) == 1.0

    def test_single_class_logistic_error(self):
        X = dense([[0.0], [1.0]])
        with pytest.raises(SingleClass):
            train_gbdt(X, [1.0, 1.0], "logistic", GbdtParams(n_estimators=1))

    def test_monotone_training_loss(self):
        rng = np.random.default_rng(4)
        for trial in range(5):
            X = dense(rng.normal(size=(25, 3)))
            if trial % 2:
                y = rng.normal(size=25)
                loss = "squared"
            else:
                y = (rng.random(25) > 0.5).astype(float)
                if len(np.unique(y)) == 1:
                    y[0] = 1 - y[0]
                loss = "logistic"
            model = train_gbdt(X, y, loss,
                               GbdtParams(n_estimators=15, max_depth=2, subsample=1.0))
            assert np.all(np.diff(model.train_losses) <= 1e-12), f"trial {trial}"

    def test_depth_bound_respected(self):
        rng = np.random.default_rng(6)
        X = dense(rng.normal(size=(60, 4)))
        y = rng.normal(size=60)
        for depth in (1, 2, 3):
            model = train_gbdt(X, y, "squared",
                               GbdtParams(n_estimators=5, max_depth=depth))
            assert all(t.depth() <= depth for t in model.trees)


class TestSplits:
    def test_root_split_matches_brute_force(self):
        rng = np.random.default_rng(7)
        for trial in range(10):
            n = int(rng.integers(4, 21))
            d = int(rng.integers(1, 4))
            X = np.round(rng.normal(size=(n, d)), 2)
            residual = rng.normal(size=n)
            hessian = np.ones(n)
            want = brute_force_root_split(X, residual, hessian)
            got = None
            for j in range(d):
                found = best_split(X[:, j], residual, hessian, 1)
                if found and (got is None or found[0] > got[0] + 1e-12):
                    got = (found[0], j, found[1])
            if want is None:
                assert got is None
            else:
                assert got is not None, f"trial {trial}"
                assert got[1] == want[1], f"trial {trial}: feature"
                assert got[2] == pytest.approx(want[2]), f"trial {trial}: threshold"
                assert got[0] == pytest.approx(want[0]), f"trial {trial}: gain"

    def test_constant_column_unsplittable(self):
        assert best_split(np.zeros(6), np.arange(6.0), np.ones(6), 1) is None

    def test_min_samples_leaf(self):
        col = np.array([0.0, 1.0, 2.0, 3.0])
        res = np.array([0.0, 0.0, 1.0, 1.0])
        found = best_split(col, res, np.ones(4), 2)
        assert found is not None
        _, threshold = found
        assert threshold == 1.5  # the only split leaving 2 per side


class TestPredictAndImportance:
    def test_zero_trees_logistic_is_base_rate(self):
        X = dense([[0.0], [1.0], [2.0]])
        y = np.array([1.0, 0.0, 1.0])
        model = train_gbdt(X, y, "logistic", GbdtParams(n_estimators=0))
        assert np.allclose(predict_gbdt(model, X), 2 / 3)

    def test_all_zero_leaf_tree_is_identity(self):
        X = dense([[0.0], [1.0]])
        model = train_gbdt(X, np.array([1.0, 0.0]), "squared", GbdtParams(n_estimators=0))
        before = predict_gbdt(model, X).copy()
        model.trees.append(TreeNode(value=0.0, n_samples=2))
        assert np.allclose(predict_gbdt(model, X), before)

    def test_importance_single_stump(self):
        X = dense([[0.0, 5.0], [0.0, 5.0], [1.0, 5.0], [1.0, 5.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        model = train_gbdt(X, y, "squared", GbdtParams(n_estimators=1, max_depth=1))
        importance = feature_importance(model)
        assert list(importance) == [0]
        assert importance[0] > 0

    def test_importance_zero_trees(self):
        X = dense([[0.0], [1.0]])
        model = train_gbdt(X, np.array([0.0, 1.0]), "squared", GbdtParams(n_estimators=0))
        assert feature_importance(model) == {}

    def test_importance_accumulates_gains(self):
        rng = np.random.default_rng(9)
        X = dense(rng.normal(size=(30, 3)))
        y = rng.normal(size=30)
        model = train_gbdt(X, y, "squared", GbdtParams(n_estimators=4, max_depth=2))
        importance = feature_importance(model)
        total_gain = 0.0
        def visit(node):
            nonlocal total_gain
            if node.is_leaf:
                return
            total_gain += node.gain
            visit(node.left)
            visit(node.right)
        for tree in model.trees:
            visit(tree)
        assert sum(importance.values()) == pytest.approx(total_gain)
        assert all(v >= 0 for v in importance.values())
        assert list(importance) == sorted(importance)

    def test_serialization_round_trip(self):
        rng = np.random.default_rng(10)
        X = dense(rng.normal(size=(20, 2)))
        y = (rng.random(20) > 0.4).astype(float)
        model = train_gbdt(X, y, "logistic", GbdtParams(n_estimators=3, max_depth=2))
        clone = GbdtModel.from_dict(model.to_dict())
        assert np.allclose(predict_gbdt(clone, X), predict_gbdt(model, X))
