import numpy as np
import pytest

from plumescreen import learners
from plumescreen.learners import (
    BoostedParams,
    ConvergenceError,
    ForestParams,
    ParamError,
    SvcParams,
    TrainingError,
    load_model,
    save_model,
    train_boosted,
    train_forest,
    train_svc,
)


def blobs(n=60, gap=3.0, seed=0, p=4):
    """Two well-separated Gaussian blobs in p dimensions."""
    rng = np.random.default_rng(seed)
    X0 = rng.normal(-gap / 2, 1.0, (n // 2, p))
    X1 = rng.normal(gap / 2, 1.0, (n - n // 2, p))
    X = np.vstack([X0, X1])
    y = np.concatenate([np.zeros(n // 2, int), np.ones(n - n // 2, int)])
    perm = rng.permutation(n)
    return X[perm], y[perm]


class TestParams:
    def test_best_found_defaults(self):
        f = ForestParams()
        assert (f.n_estimators, f.criterion, f.min_samples_split) == (500, "entropy", 8)
        assert (f.max_features, f.max_depth) == ("sqrt", None)
        assert (f.max_samples, f.min_samples_leaf) == (0.9206, 5)
        b = BoostedParams()
        assert (b.n_estimators, b.learning_rate, b.gamma, b.max_depth) == (800, 0.026, 0.046, 6)
        assert (b.min_child_weight, b.subsample, b.colsample_bytree) == (1.0, 0.940, 0.732)
        assert (b.reg_alpha, b.reg_lambda) == (4.467e-8, 0.347)
        s = SvcParams()
        assert (s.C, s.kernel, s.gamma, s.degree) == (10.564, "rbf", 0.0027, 4)

    @pytest.mark.parametrize(
        "cls,kwargs",
        [
            (ForestParams, {"n_estimators": 0}),
            (ForestParams, {"criterion": "mse"}),
            (ForestParams, {"max_samples": 1.5}),
            (ForestParams, {"max_features": 0.0}),
            (BoostedParams, {"learning_rate": -0.1}),
            (BoostedParams, {"subsample": 0.0}),
            (SvcParams, {"C": -1.0}),
            (SvcParams, {"kernel": "sigmoid"}),
            (SvcParams, {"degree": 1}),
        ],
    )
    def test_validation(self, cls, kwargs):
        with pytest.raises(ParamError):
            cls(**kwargs)


class TestForest:
    def test_single_threshold_problem(self):
        # Oracle: one depth-1 tree must recover class = sign(x).
        x = np.linspace(-1, 1, 40)
        x = x[x != 0]
        X = x[:, None]
        y = (x > 0).astype(int)
        params = ForestParams(
            n_estimators=1, criterion="gini", min_samples_split=2,
            max_features=1.0, max_depth=1, max_samples=1.0, min_samples_leaf=1,
        )
        model = train_forest(X, y, params, seed=0, bootstrap=False)
        pred = (model.score(X) >= 0.5).astype(int)
        assert np.array_equal(pred, y)

    def test_forest_of_one_tree_equals_tree(self):
        X, y = blobs(50)
        params = ForestParams(n_estimators=1, max_samples=1.0, max_features=1.0,
                              min_samples_split=2, min_samples_leaf=1)
        model = train_forest(X, y, params, seed=3, bootstrap=False)
        assert np.array_equal(model.score(X), model.trees[0].predict(X))

    def test_score_is_mean_of_tree_leaf_fractions(self):
        X, y = blobs(80)
        params = ForestParams(n_estimators=7, min_samples_split=4, min_samples_leaf=2)
        model = train_forest(X, y, params, seed=1)
        per_tree = np.vstack([t.predict(X) for t in model.trees])
        assert model.score(X) == pytest.approx(per_tree.mean(axis=0), abs=1e-12)
        assert (model.score(X) >= 0).all() and (model.score(X) <= 1).all()

    def test_determinism_and_seed_sensitivity(self):
        X, y = blobs(80)
        params = ForestParams(n_estimators=5, min_samples_leaf=2)
        a = train_forest(X, y, params, seed=9).score(X)
        b = train_forest(X, y, params, seed=9).score(X)
        c = train_forest(X, y, params, seed=10).score(X)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_thread_count_does_not_change_result(self):
        X, y = blobs(60)
        params = ForestParams(n_estimators=8, min_samples_leaf=2)
        a = train_forest(X, y, params, seed=2, threads=1).score(X)
        b = train_forest(X, y, params, seed=2, threads=4).score(X)
        assert np.array_equal(a, b)

    def test_monotone_feature_transform_keeps_train_predictions(self):
        X, y = blobs(60, p=3)
        params = ForestParams(n_estimators=3, max_features=1.0, min_samples_leaf=2)
        base = train_forest(X, y, params, seed=5, bootstrap=False)
        Xt = X.copy()
        Xt[:, 1] = Xt[:, 1] ** 3  # strictly monotone on R
        trans = train_forest(Xt, y, params, seed=5, bootstrap=False)
        p1 = (base.score(X) >= 0.5).astype(int)
        p2 = (trans.score(Xt) >= 0.5).astype(int)
        assert np.array_equal(p1, p2)

    def test_single_class_rejected(self):
        X = np.zeros((10, 2))
        with pytest.raises(TrainingError, match="single class"):
            train_forest(X, np.ones(10, int), ForestParams(n_estimators=1))

    def test_non_finite_rejected(self):
        X, y = blobs(20)
        X[0, 0] = np.nan
        with pytest.raises(TrainingError, match="finite"):
            train_forest(X, y, ForestParams(n_estimators=1))


class TestBoosted:
    def test_zero_learning_rate_scores_constant(self):
        X, y = blobs(40)
        params = BoostedParams(n_estimators=5, learning_rate=0.0)
        model = train_boosted(X, y, params, seed=0)
        expected = 1.0 / (1.0 + np.exp(-model.base_score))
        assert model.score(X) == pytest.approx(np.full(len(y), expected), abs=1e-12)

    def test_base_score_is_prevalence_log_odds(self):
        X, y = blobs(40)
        model = train_boosted(X, y, BoostedParams(n_estimators=1), seed=0)
        p = y.mean()
        assert model.base_score == pytest.approx(np.log(p / (1 - p)), abs=1e-12)

    def test_huge_gamma_gives_constant_model(self):
        X, y = blobs(40)
        params = BoostedParams(n_estimators=5, gamma=1e9)
        model = train_boosted(X, y, params, seed=0)
        for tree in model.trees:
            assert tree.n_nodes == 1  # no split beats the gamma penalty
        assert np.unique(model.score(X)).size == 1

    def test_scores_in_open_unit_interval(self):
        X, y = blobs(60)
        model = train_boosted(X, y, BoostedParams(n_estimators=20, learning_rate=0.3), seed=1)
        s = model.score(X)
        assert (s > 0).all() and (s < 1).all()

    def test_learns_separable_data(self):
        X, y = blobs(100)
        params = BoostedParams(n_estimators=30, learning_rate=0.3, max_depth=3,
                               min_child_weight=0.0, gamma=1e-3)
        model = train_boosted(X, y, params, seed=0)
        assert ((model.score(X) >= 0.5).astype(int) == y).mean() == 1.0

    def test_determinism(self):
        X, y = blobs(60)
        params = BoostedParams(n_estimators=10)
        a = train_boosted(X, y, params, seed=4).score(X)
        b = train_boosted(X, y, params, seed=4).score(X)
        assert np.array_equal(a, b)

    def test_monotone_feature_transform_keeps_train_predictions(self):
        X, y = blobs(60, p=3)
        params = BoostedParams(n_estimators=10, learning_rate=0.2, subsample=1.0,
                               colsample_bytree=1.0, min_child_weight=0.0)
        base = train_boosted(X, y, params, seed=5)
        Xt = X.copy()
        Xt[:, 0] = np.exp(Xt[:, 0])  # strictly monotone
        trans = train_boosted(Xt, y, params, seed=5)
        assert np.array_equal(
            (base.score(X) >= 0.5).astype(int), (trans.score(Xt) >= 0.5).astype(int)
        )


class TestSvc:
    def test_two_point_linear_boundary(self):
        X = np.array([[-1.0], [1.0]])
        y = np.array([0, 1])
        model = train_svc(X, y, SvcParams(C=1e3, kernel="linear", gamma=1.0, degree=2), seed=0)
        s = model.score(np.array([[-1.0], [0.0], [1.0]]))
        assert s[0] < 0.0 < s[2]
        assert abs(s[1]) < 1e-6

    def test_duplicating_points_keeps_decision_function(self):
        X, y = blobs(40, gap=6.0, seed=2, p=2)
        params = SvcParams(C=100.0, kernel="rbf", gamma=0.1, degree=2)
        m1 = train_svc(X, y, params, seed=0, tol=1e-8)
        m2 = train_svc(np.vstack([X, X]), np.concatenate([y, y]), params, seed=0, tol=1e-8)
        grid = np.random.default_rng(0).normal(0, 3, (50, 2))
        assert m1.score(grid) == pytest.approx(m2.score(grid), abs=1e-6)

    def test_dual_constraints_hold(self):
        X, y = blobs(60, gap=2.0, seed=3)
        params = SvcParams(C=1.0, kernel="rbf", gamma=0.5, degree=2)
        model = train_svc(X, y, params, seed=0)
        alphas = np.abs(model.dual_coefs)
        assert (alphas >= 0).all() and (alphas <= params.C + 1e-9).all()
        assert abs(model.dual_coefs.sum()) <= 1e-6  # sum alpha_i y_i

    @pytest.mark.parametrize("kernel", ["linear", "rbf", "poly"])
    def test_kernels_learn_separable_blobs(self, kernel):
        X, y = blobs(60, gap=4.0, seed=1, p=2)
        params = SvcParams(C=10.0, kernel=kernel, gamma=0.5, degree=3)
        model = train_svc(X, y, params, seed=0)
        acc = ((model.score(X) >= 0.0).astype(int) == y).mean()
        assert acc == 1.0

    def test_determinism(self):
        X, y = blobs(50)
        a = train_svc(X, y, SvcParams(), seed=7).score(X)
        b = train_svc(X, y, SvcParams(), seed=7).score(X)
        assert np.array_equal(a, b)

    def test_nonconvergence_raises_with_diagnostics(self):
        X, y = blobs(40, gap=0.5, seed=5)
        with pytest.raises(ConvergenceError) as err:
            train_svc(X, y, SvcParams(C=1e3, kernel="rbf", gamma=5.0, degree=2),
                      seed=0, max_passes=1)
        assert "passes" in err.value.diagnostics


class TestSerialization:
    @pytest.mark.parametrize("kind", ["forest", "boosted", "svc"])
    def test_save_load_scores_bit_exact(self, tmp_path, kind):
        X, y = blobs(60)
        if kind == "forest":
            model = train_forest(X, y, ForestParams(n_estimators=5, min_samples_leaf=2), seed=0)
        elif kind == "boosted":
            model = train_boosted(X, y, BoostedParams(n_estimators=10), seed=0)
        else:
            model = train_svc(X, y, SvcParams(), seed=0)
        path = tmp_path / f"{kind}.json"
        save_model(model, path)
        back = load_model(path)
        rows = np.random.default_rng(1).normal(0, 2, (100, X.shape[1]))
        assert np.array_equal(model.score(rows), back.score(rows))

    def test_corrupt_file_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(learners.ModelFormatError):
            load_model(path)
        path.write_text('{"format": "other"}')
        with pytest.raises(learners.ModelFormatError):
            load_model(path)

    def test_dimension_mismatch_rejected(self, tmp_path):
        X, y = blobs(30)
        model = train_forest(X, y, ForestParams(n_estimators=1), seed=0)
        with pytest.raises(ValueError, match="feature columns"):
            model.score(np.zeros((3, X.shape[1] + 1)))
