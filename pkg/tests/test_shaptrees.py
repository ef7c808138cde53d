import numpy as np
import pytest

from plumescreen.learners import (
    BoostedParams,
    ForestParams,
    SvcParams,
    train_boosted,
    train_forest,
    train_svc,
)
from plumescreen.learners._tree import Tree
from plumescreen.shaptrees import (
    Attribution,
    SummaryStats,
    UnsupportedModelError,
    brute_force_shap,
    brute_force_tree_phi,
    expected_value,
    explain_matrix,
    read_attribution_csv,
    summarize,
    tree_phi,
    tree_shap,
    write_attribution_csv,
    write_beeswarm_csv,
    write_summary_csv,
)


def leaf_tree(value, cover=10):
    return Tree(
        feature=np.array([-1], np.int32),
        threshold=np.array([np.nan]),
        left=np.array([-1], np.int32),
        right=np.array([-1], np.int32),
        value=np.array([float(value)]),
        n_samples=np.array([cover], np.int64),
    )


def stump(feature, threshold, left_value, right_value, cover=(10, 4, 6)):
    return Tree(
        feature=np.array([feature, -1, -1], np.int32),
        threshold=np.array([threshold, np.nan, np.nan]),
        left=np.array([1, -1, -1], np.int32),
        right=np.array([2, -1, -1], np.int32),
        value=np.array([0.0, left_value, right_value]),
        n_samples=np.array(cover, np.int64),
    )


def random_tree(rng, n_features, max_depth, cover_lo=20, cover_hi=200):
    feature, threshold, left, right, value, cover = [], [], [], [], [], []

    def build(depth, cov):
        idx = len(feature)
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        cover.append(cov)
        if depth < max_depth and cov >= 2 and rng.random() < 0.85:
            feature[idx] = int(rng.integers(n_features))
            threshold[idx] = float(rng.normal())
            cl = int(rng.integers(1, cov))
            left[idx] = build(depth + 1, cl)
            right[idx] = build(depth + 1, cov - cl)
        else:
            value[idx] = float(rng.normal())
        return idx

    build(0, int(rng.integers(cover_lo, cover_hi)))
    return Tree(
        feature=np.asarray(feature, np.int32),
        threshold=np.asarray(threshold),
        left=np.asarray(left, np.int32),
        right=np.asarray(right, np.int32),
        value=np.asarray(value),
        n_samples=np.asarray(cover, np.int64),
    )


class TestSingleTrees:
    def test_constant_tree_has_zero_phi(self):
        t = leaf_tree(3.25)
        phi = tree_phi(t, np.zeros(5), 5)
        assert np.array_equal(phi, np.zeros(5))
        assert expected_value(t) == 3.25

    def test_stump_phi_is_output_minus_base(self):
        t = stump(feature=2, threshold=0.0, left_value=1.0, right_value=-1.0)
        base = expected_value(t)  # (4*1 + 6*(-1)) / 10 = -0.2
        assert base == pytest.approx(-0.2, abs=1e-12)
        x = np.array([9.0, 9.0, -1.0, 9.0])
        phi = tree_phi(t, x, 4)
        assert phi[2] == pytest.approx(1.0 - base, abs=1e-12)
        assert np.abs(np.delete(phi, 2)).max() == 0.0
        # Brute-force oracle agrees.
        assert brute_force_tree_phi(t, x, 4) == pytest.approx(phi, abs=1e-12)

    def test_random_trees_match_brute_force(self):
        rng = np.random.default_rng(17)
        worst = 0.0
        for _ in range(60):
            p = int(rng.integers(1, 10))
            t = random_tree(rng, p, max_depth=int(rng.integers(1, 5)))
            for _ in range(4):
                x = rng.normal(size=p)
                a = tree_phi(t, x, p)
                b = brute_force_tree_phi(t, x, p)
                worst = max(worst, float(np.abs(a - b).max()))
        assert worst <= 1e-9

    def test_repeated_feature_along_path(self):
        # Root and both children split on feature 0 (interval splits).
        t = Tree(
            feature=np.array([0, 0, 0, -1, -1, -1, -1], np.int32),
            threshold=np.array([0.0, -1.0, 1.0, np.nan, np.nan, np.nan, np.nan]),
            left=np.array([1, 3, 5, -1, -1, -1, -1], np.int32),
            right=np.array([2, 4, 6, -1, -1, -1, -1], np.int32),
            value=np.array([0.0, 0.0, 0.0, 5.0, 1.0, -1.0, -5.0]),
            n_samples=np.array([100, 40, 60, 10, 30, 45, 15], np.int64),
        )
        for xv in (-2.0, -0.5, 0.5, 2.0):
            x = np.array([xv])
            a = tree_phi(t, x, 1)
            b = brute_force_tree_phi(t, x, 1)
            assert a == pytest.approx(b, abs=1e-12)
            assert a[0] + expected_value(t) == pytest.approx(
                t.predict(x[None, :])[0], abs=1e-9
            )

    def test_dummy_axiom(self):
        rng = np.random.default_rng(3)
        t = random_tree(rng, n_features=3, max_depth=3)
        used = set(t.feature[t.feature >= 0].tolist())
        phi = tree_phi(t, rng.normal(size=10), 10)
        for j in range(10):
            if j not in used:
                assert phi[j] == 0.0

    def test_symmetry_for_exchangeable_features(self):
        # f(x) = [x0 > 0] + [x1 > 0] with equal covers: phi0 == phi1 at (1, 1).
        t = Tree(
            feature=np.array([0, 1, 1, -1, -1, -1, -1], np.int32),
            threshold=np.array([0.0, 0.0, 0.0, np.nan, np.nan, np.nan, np.nan]),
            left=np.array([1, 3, 5, -1, -1, -1, -1], np.int32),
            right=np.array([2, 4, 6, -1, -1, -1, -1], np.int32),
            value=np.array([0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 2.0]),
            n_samples=np.array([100, 50, 50, 25, 25, 25, 25], np.int64),
        )
        phi = tree_phi(t, np.array([1.0, 1.0]), 2)
        assert phi[0] == pytest.approx(phi[1], abs=1e-12)


class TestEnsembles:
    def _data(self, n=80, p=6, seed=0):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(n, p))
        y = ((X[:, 0] + 0.5 * X[:, 1] + 0.2 * rng.normal(size=n)) > 0).astype(int)
        return X, y

    def test_forest_local_accuracy_and_oracle(self):
        X, y = self._data()
        params = ForestParams(n_estimators=5, min_samples_split=4,
                              max_features=0.5, max_depth=3, min_samples_leaf=2)
        model = train_forest(X, y, params, seed=0)
        for row in X[:10]:
            att = tree_shap(model, row)
            out = model.raw_output(row[None, :])[0]
            assert abs(att.total() - out) <= 1e-6
            oracle = brute_force_shap(model, row)
            assert att.phi == pytest.approx(oracle.phi, abs=1e-9)
            assert att.base_value == pytest.approx(oracle.base_value, abs=1e-12)

    def test_boosted_margin_space_local_accuracy(self):
        X, y = self._data(seed=1)
        params = BoostedParams(n_estimators=12, learning_rate=0.3, max_depth=3,
                               min_child_weight=0.0, gamma=1e-4)
        model = train_boosted(X, y, params, seed=0)
        for row in X[:10]:
            att = tree_shap(model, row)
            margin = model.margin(row[None, :])[0]
            assert abs(att.total() - margin) <= 1e-6
            oracle = brute_force_shap(model, row)
            assert att.phi == pytest.approx(oracle.phi, abs=1e-9)

    def test_forest_of_identical_stumps_base(self):
        trees = [stump(0, 0.0, 1.0, 0.0) for _ in range(4)]
        from plumescreen.learners import ForestModel

        model = ForestModel(kind="forest", trees=trees, feature_names=["a", "b"],
                            params=ForestParams(n_estimators=4), seed=0)
        att = tree_shap(model, np.array([-1.0, 0.0]))
        assert att.base_value == pytest.approx(0.4, abs=1e-12)
        assert att.total() == pytest.approx(1.0, abs=1e-12)

    def test_svm_unsupported(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(20, 2))
        y = (X[:, 0] > 0).astype(int)
        model = train_svc(X, y, SvcParams(C=1.0, kernel="linear", gamma=1.0, degree=2), seed=0)
        with pytest.raises(UnsupportedModelError):
            tree_shap(model, X[0])


class TestSummarize:
    def test_all_zero_ranking_is_canonical(self):
        atts = [Attribution(phi=np.zeros(3), base_value=0.0, feature_values=np.zeros(3))]
        stats = summarize(atts, ["a", "b", "c"])
        assert list(stats.order) == [0, 1, 2]
        assert stats.top(2) == ["a", "b"]

    def test_singleton_mean_abs(self):
        atts = [Attribution(phi=np.array([-2.0, 1.0]), base_value=0.0,
                            feature_values=np.zeros(2))]
        stats = summarize(atts, ["a", "b"])
        assert stats.mean_abs == pytest.approx([2.0, 1.0])

    def test_hand_case(self):
        atts = [
            Attribution(phi=np.array([1.0, 0.0]), base_value=0.0, feature_values=np.zeros(2)),
            Attribution(phi=np.array([-1.0, 0.5]), base_value=0.0, feature_values=np.zeros(2)),
        ]
        stats = summarize(atts, ["a", "b"])
        assert stats.mean_abs == pytest.approx([1.0, 0.25])
        assert stats.mean_pos == pytest.approx([0.5, 0.25])
        assert stats.mean_neg == pytest.approx([-0.5, 0.0])
        assert stats.rank_of("a") == 1
        assert stats.rank_of("b") == 2

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            summarize([], ["a"])


class TestExports:
    def test_attribution_csv_roundtrip(self, tmp_path):
        atts = [
            Attribution(phi=np.array([0.25, -1.5]), base_value=0.75,
                        feature_values=np.array([1.0, 2.0])),
            Attribution(phi=np.array([0.0, 3.25]), base_value=0.75,
                        feature_values=np.array([3.0, 4.0])),
        ]
        path = tmp_path / "att.csv"
        write_attribution_csv(path, ["s1", "s2"], atts, ["a", "b"])
        ids, names, bases, phi = read_attribution_csv(path)
        assert ids == ["s1", "s2"]
        assert names == ["a", "b"]
        assert bases == pytest.approx([0.75, 0.75])
        assert np.array_equal(phi, [[0.25, -1.5], [0.0, 3.25]])

    def test_beeswarm_and_summary_files(self, tmp_path):
        atts = [Attribution(phi=np.array([1.0, -0.5]), base_value=0.0,
                            feature_values=np.array([10.0, 20.0]))]
        stats = summarize(atts, ["a", "b"])
        bee = tmp_path / "bee.csv"
        summ = tmp_path / "sum.csv"
        write_beeswarm_csv(bee, ["s1"], atts, ["a", "b"])
        write_summary_csv(summ, stats)
        assert bee.read_text().splitlines()[0] == "id,feature,phi,feature_value"
        assert len(bee.read_text().splitlines()) == 3
        assert summ.read_text().splitlines()[1].startswith("1,a,")
