import numpy as np
import pytest

from oracles import best_linear_separator_accuracy, best_threshold_accuracy
from speechblend.errors import (
    BadParam,
    EmptyInput,
    FormatError,
    LabelError,
    NonFiniteFeature,
    ShapeMismatch,
)
from speechblend.learners import (
    DEFAULT_HYPERPARAMETERS,
    KINDS,
    ClassifierSpec,
    Model,
    fit,
    from_json,
    load_model,
    make_spec,
    model_from_dict,
    model_to_dict,
    predict,
    predict_score,
    save_model,
    score_threshold,
    to_json,
)

XOR_X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
XOR_Y = np.array([0, 1, 1, 0])


def blobs(n_per_class, gap, seed, nf=7):
    rng = np.random.Generator(np.random.PCG64(seed))
    x = rng.standard_normal((2 * n_per_class, nf))
    x[n_per_class:] += gap
    y = np.concatenate([np.zeros(n_per_class, dtype=int), np.ones(n_per_class, dtype=int)])
    order = rng.permutation(len(y))
    return x[order], y[order]


def noisy_xor(n, seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    corner = rng.integers(0, 2, (n, 2))
    y = corner[:, 0] ^ corner[:, 1]
    x = corner.astype(float) + rng.standard_normal((n, 2)) * 0.15
    return x, y


class TestMakeSpec:
    def test_defaults_filled(self):
        for kind in KINDS:
            spec = make_spec(kind, seed=4)
            assert spec.hyperparameters == DEFAULT_HYPERPARAMETERS[kind]
            assert spec.seed == 4

    def test_override(self):
        spec = make_spec("knn", k=3)
        assert spec.hyperparameters["k"] == 3

    def test_unknown_kind(self):
        with pytest.raises(BadParam):
            make_spec("perceptron")

    def test_unknown_key(self):
        with pytest.raises(BadParam):
            make_spec("knn", neighbours=3)

    @pytest.mark.parametrize(
        "kind,kwargs",
        [
            ("knn", {"k": 0}),
            ("knn", {"standardize": 1}),
            ("decision_tree", {"max_depth": -1}),
            ("decision_tree", {"min_samples_split": 1}),
            ("random_forest", {"n_trees": 0}),
            ("random_forest", {"max_features": 0}),
            ("logistic_regression", {"learning_rate": 0.0}),
            ("logistic_regression", {"epochs": 0}),
            ("logistic_regression", {"l2_penalty": -1.0}),
            ("svm", {"l2_penalty": 0.0}),
            ("naive_bayes", {"var_smoothing": -1e-9}),
        ],
    )
    def test_range_validation(self, kind, kwargs):
        with pytest.raises(BadParam):
            make_spec(kind, **kwargs)


class TestFitValidation:
    def test_empty_x(self):
        with pytest.raises(EmptyInput):
            fit(make_spec("knn"), np.zeros((0, 3)), np.zeros(0, dtype=int))

    def test_nan_feature(self):
        x = np.zeros((4, 2))
        x[1, 1] = np.nan
        with pytest.raises(NonFiniteFeature):
            fit(make_spec("knn"), x, [0, 1, 0, 1])

    def test_label_shape(self):
        with pytest.raises(ShapeMismatch):
            fit(make_spec("knn"), np.zeros((4, 2)), [0, 1])

    def test_non_binary_labels(self):
        with pytest.raises(LabelError):
            fit(make_spec("knn"), np.zeros((3, 2)), [0, 1, 2])


class TestKnn:
    def test_exact_neighbor(self):
        m = fit(make_spec("knn", k=1), [[0.0, 0.0], [1.0, 1.0]], [0, 1])
        assert predict(m, [[0.0, 0.0]])[0] == 0
        assert predict(m, [[1.0, 1.0]])[0] == 1

    def test_k1_training_accuracy(self):
        rng = np.random.Generator(np.random.PCG64(40))
        x = rng.standard_normal((50, 4))
        y = rng.integers(0, 2, 50)
        m = fit(make_spec("knn", k=1), x, y)
        assert (predict(m, x) == y).all()

    def test_unanimous_vote_score(self):
        x = np.vstack([np.zeros((5, 2)) + [[0, 0], [0.1, 0], [0, 0.1], [0.1, 0.1], [0.05, 0.05]], [[9.0, 9.0]]])
        y = np.array([1, 1, 1, 1, 1, 0])
        m = fit(make_spec("knn", k=5), x, y)
        assert predict_score(m, [[0.0, 0.0]])[0] == 1.0

    def test_vote_tie_goes_to_zero(self):
        x = np.array([[0.0], [0.0], [2.0], [2.0]])
        y = np.array([0, 1, 0, 1])
        m = fit(make_spec("knn", k=2, standardize=False), x, y)
        assert predict(m, [[0.0]])[0] == 0


class TestDecisionTree:
    def test_single_threshold_task(self):
        rng = np.random.Generator(np.random.PCG64(41))
        x = rng.standard_normal((20, 1)) * 3
        y = (x[:, 0] >= 0).astype(int)
        assert best_threshold_accuracy(x[:, 0], y) == 1.0
        m = fit(make_spec("decision_tree"), x, y)
        assert (predict(m, x) == y).all()

    def test_unlimited_depth_training_accuracy(self):
        rng = np.random.Generator(np.random.PCG64(42))
        x = rng.standard_normal((60, 3))
        y = rng.integers(0, 2, 60)
        m = fit(make_spec("decision_tree"), x, y)
        assert (predict(m, x) == y).all()

    def test_depth_zero_is_majority_leaf(self):
        x = np.array([[0.0], [1.0], [2.0]])
        m = fit(make_spec("decision_tree", max_depth=0), x, [1, 1, 0])
        assert list(predict(m, x)) == [1, 1, 1]

    def test_leaf_tie_goes_to_zero(self):
        x = np.array([[0.0], [0.0]])
        m = fit(make_spec("decision_tree", max_depth=0), x, [0, 1])
        assert list(predict(m, x)) == [0, 0]


class TestRandomForest:
    def test_vote_fraction_range(self):
        x, y = noisy_xor(120, seed=43)
        m = fit(make_spec("random_forest", seed=7), x, y)
        scores = predict_score(m, x)
        assert ((scores >= 0.0) & (scores <= 1.0)).all()
        frac = scores * m.spec.hyperparameters["n_trees"]
        assert np.allclose(frac, np.round(frac), atol=1e-9)

    def test_seed_changes_model(self):
        x, y = blobs(30, 1.0, seed=44, nf=3)
        a = to_json(fit(make_spec("random_forest", seed=1), x, y))
        b = to_json(fit(make_spec("random_forest", seed=2), x, y))
        assert a != b


class TestLogisticRegression:
    def test_xor_bounded_by_linear_limit(self):
        assert abs(best_linear_separator_accuracy(XOR_X, XOR_Y) - 0.75) < 1e-12
        m = fit(make_spec("logistic_regression"), XOR_X, XOR_Y)
        acc = (predict(m, XOR_X) == XOR_Y).mean()
        assert acc <= 0.75

    def test_zero_weights_score_half(self):
        spec = make_spec("logistic_regression")
        m = Model(
            spec,
            {
                "n_features": 2,
                "mean": np.zeros(2),
                "std": np.ones(2),
                "weights": np.zeros(2),
                "bias": 0.0,
            },
        )
        assert (predict_score(m, np.random.rand(5, 2)) == 0.5).all()


class TestNaiveBayes:
    def test_predicts_nearer_mean(self):
        rng = np.random.Generator(np.random.PCG64(45))
        x = np.vstack([rng.standard_normal((40, 2)) - 3, rng.standard_normal((40, 2)) + 3])
        y = np.concatenate([np.zeros(40, dtype=int), np.ones(40, dtype=int)])
        m = fit(make_spec("naive_bayes"), x, y)
        assert predict(m, [[-3.0, -3.0]])[0] == 0
        assert predict(m, [[3.0, 3.0]])[0] == 1


class TestAllKinds:
    @pytest.mark.parametrize("kind", KINDS)
    def test_separated_blobs(self, kind):
        x, y = blobs(100, 4.0, seed=46)
        xt, yt = blobs(50, 4.0, seed=47)
        m = fit(make_spec(kind, seed=5), x, y)
        assert (predict(m, xt) == yt).mean() >= 0.95

    @pytest.mark.parametrize("kind", KINDS)
    def test_predict_is_thresholded_score(self, kind):
        x, y = blobs(40, 2.0, seed=48)
        m = fit(make_spec(kind, seed=6), x, y)
        q = np.random.Generator(np.random.PCG64(49)).standard_normal((30, 7)) * 2
        expected = (predict_score(m, q) > score_threshold(kind)).astype(int)
        assert np.array_equal(predict(m, q), expected)

    @pytest.mark.parametrize("kind", KINDS)
    def test_empty_predict(self, kind):
        x, y = blobs(20, 3.0, seed=50)
        m = fit(make_spec(kind, seed=1), x, y)
        assert len(predict(m, np.zeros((0, 7)))) == 0

    @pytest.mark.parametrize("kind", KINDS)
    def test_constant_model(self, kind):
        x = np.random.Generator(np.random.PCG64(51)).standard_normal((6, 7))
        m = fit(make_spec(kind, seed=2), x, np.ones(6, dtype=int))
        assert (predict(m, x) == 1).all()
        if kind == "svm":
            assert (predict_score(m, x) == 1.0).all()

    @pytest.mark.parametrize("kind", KINDS)
    def test_width_mismatch(self, kind):
        x, y = blobs(20, 3.0, seed=52)
        m = fit(make_spec(kind, seed=3), x, y)
        with pytest.raises(ShapeMismatch):
            predict(m, np.zeros((2, 6)))

    @pytest.mark.parametrize("kind", KINDS)
    def test_fit_deterministic(self, kind):
        x, y = blobs(30, 1.5, seed=53)
        a = fit(make_spec(kind, seed=9), x, y)
        b = fit(make_spec(kind, seed=9), x, y)
        assert to_json(a) == to_json(b)


class TestSerialization:
    @pytest.mark.parametrize("kind", KINDS)
    def test_round_trip_predictions(self, kind):
        x, y = blobs(40, 1.0, seed=54)
        m = fit(make_spec(kind, seed=4), x, y)
        restored = from_json(to_json(m))
        q = np.random.Generator(np.random.PCG64(55)).standard_normal((200, 7)) * 3
        assert np.array_equal(predict(m, q), predict(restored, q))
        assert np.array_equal(predict_score(m, q), predict_score(restored, q))

    def test_round_trip_exact_document(self):
        x, y = blobs(25, 1.0, seed=56)
        m = fit(make_spec("logistic_regression", seed=8), x, y)
        assert to_json(from_json(to_json(m))) == to_json(m)

    def test_file_round_trip(self, tmp_path):
        x, y = blobs(25, 1.0, seed=57)
        m = fit(make_spec("svm", seed=8), x, y)
        path = tmp_path / "model.json"
        save_model(m, path)
        restored = load_model(path)
        assert np.array_equal(predict(m, x), predict(restored, x))

    def test_wrong_format_version(self):
        x, y = blobs(10, 2.0, seed=58)
        doc = model_to_dict(fit(make_spec("knn"), x, y))
        doc["format_version"] = 99
        with pytest.raises(FormatError):
            model_from_dict(doc)

    def test_malformed_document(self):
        with pytest.raises(FormatError):
            model_from_dict({"format_version": 1})

    def test_constant_model_round_trip(self):
        x = np.zeros((3, 7))
        m = fit(make_spec("naive_bayes"), x, np.zeros(3, dtype=int))
        restored = from_json(to_json(m))
        assert (predict(restored, x) == 0).all()


class TestNoisyXor:
    @pytest.mark.parametrize("kind", ("decision_tree", "random_forest", "knn"))
    def test_nonlinear_kinds_fit_xor(self, kind):
        x, y = noisy_xor(200, seed=59)
        m = fit(make_spec(kind, seed=3), x, y)
        assert (predict(m, x) == y).mean() >= 0.9
