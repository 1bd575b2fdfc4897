import json

import numpy as np
import pytest

from speechblend.blend import (
    BlendConfig,
    BlendEnsemble,
    ensemble_from_dict,
    ensemble_to_dict,
    fit_ensemble,
    get_models,
    load_ensemble,
    make_blend_config,
    meta_features,
    predict_ensemble,
    save_ensemble,
)
from speechblend.errors import (
    BadParam,
    DegenerateSplit,
    EmptyPool,
    FormatError,
    SingleClass,
)
from speechblend.learners import fit, make_spec, predict
from speechblend.sampling import stratified_split_indices

FIVE_BASE_KINDS = ("knn", "decision_tree", "random_forest", "logistic_regression", "svm")


def blobs(n_per_class, gap, seed, nf=7):
    rng = np.random.Generator(np.random.PCG64(seed))
    x = rng.standard_normal((2 * n_per_class, nf))
    x[n_per_class:] += gap
    y = np.concatenate([np.zeros(n_per_class, dtype=int), np.ones(n_per_class, dtype=int)])
    order = rng.permutation(len(y))
    return x[order], y[order]


def constant_base(cls, nf=1):
    """A model trained on a single class, so it always predicts that class."""
    x = np.zeros((3, nf))
    return fit(make_spec("knn"), x, np.full(3, cls, dtype=int))


class TestBlendConfig:
    def test_empty_bases(self):
        with pytest.raises(EmptyPool):
            BlendConfig(meta=make_spec("knn"), bases=())

    def test_val_fraction_bounds(self):
        for bad in (0.0, 1.0):
            with pytest.raises(BadParam):
                BlendConfig(meta=make_spec("knn"), bases=(make_spec("svm"),), val_fraction=bad)

    def test_bad_mode(self):
        with pytest.raises(BadParam):
            BlendConfig(
                meta=make_spec("knn"),
                bases=(make_spec("svm"),),
                meta_feature_mode="probabilities",
            )


class TestGetModels:
    def test_pool_order_preserved(self):
        specs = get_models(FIVE_BASE_KINDS, master_seed=1)
        assert tuple(s.kind for s in specs) == FIVE_BASE_KINDS

    def test_single_element(self):
        specs = get_models(["svm"], master_seed=2)
        assert len(specs) == 1 and specs[0].kind == "svm"

    def test_duplicates_keep_distinct_seeds(self):
        specs = get_models(["svm", "knn", "svm"], master_seed=3)
        assert specs[0].kind == specs[2].kind == "svm"
        assert specs[0].seed != specs[2].seed

    def test_empty_pool(self):
        with pytest.raises(EmptyPool):
            get_models([], master_seed=0)

    def test_override_applies_where_supported(self):
        specs = get_models(["knn", "svm"], master_seed=4, standardize=False)
        assert specs[0].hyperparameters["standardize"] is False
        assert "standardize" not in specs[1].hyperparameters

    def test_accepts_existing_specs(self):
        custom = make_spec("knn", k=3)
        specs = get_models([custom, "svm"], master_seed=5)
        assert specs[0].hyperparameters["k"] == 3


class TestMetaFeatures:
    def test_labels_mode_shape(self):
        x, y = blobs(20, 3.0, seed=60)
        bases = [fit(make_spec(k, seed=i), x, y) for i, k in enumerate(("knn", "svm", "naive_bayes"))]
        table = meta_features(bases, x[:10], "labels")
        assert table.shape == (10, 3)
        assert set(np.unique(table)) <= {0.0, 1.0}

    def test_zero_rows(self):
        x, y = blobs(10, 3.0, seed=61)
        bases = [fit(make_spec("knn"), x, y)]
        assert meta_features(bases, np.zeros((0, 7)), "labels").shape == (0, 1)

    def test_constant_bases_columns(self):
        table = meta_features([constant_base(0), constant_base(1)], np.zeros((6, 1)), "labels")
        assert (table[:, 0] == 0).all()
        assert (table[:, 1] == 1).all()

    def test_scores_mode_continuous(self):
        x, y = blobs(20, 2.0, seed=62)
        bases = [fit(make_spec("logistic_regression"), x, y)]
        table = meta_features(bases, x, "scores")
        assert ((table > 0) & (table < 1)).any()

    def test_empty_model_list(self):
        with pytest.raises(EmptyPool):
            meta_features([], np.zeros((2, 3)), "labels")


class TestFitEnsemble:
    def test_single_class_rejected(self):
        config = make_blend_config("knn", ("svm",), seed=1)
        x = np.zeros((10, 2))
        with pytest.raises(SingleClass):
            fit_ensemble(config, x, np.zeros(10, dtype=int))

    def test_degenerate_split(self):
        config = make_blend_config("knn", ("svm",), seed=1, val_fraction=0.3)
        x = np.arange(12.0).reshape(6, 2)
        y = np.array([0, 0, 0, 0, 0, 1])
        with pytest.raises(DegenerateSplit):
            fit_ensemble(config, x, y)

    def test_meta_input_width_is_base_count(self):
        x, y = blobs(40, 3.0, seed=63)
        config = make_blend_config("decision_tree", ("knn", "svm", "naive_bayes"), seed=2)
        ens = fit_ensemble(config, x, y)
        assert ens.meta_model.parameters["n_features"] == 3

    def test_identical_perfect_bases_match_baseline(self):
        x, y = blobs(60, 6.0, seed=64)
        xt, yt = blobs(30, 6.0, seed=65)
        config = make_blend_config("decision_tree", ("knn", "knn", "knn"), seed=3)
        ens = fit_ensemble(config, x, y)
        baseline = fit(make_spec("knn", seed=4), x, y)
        assert (predict_ensemble(ens, xt) == yt).mean() == (predict(baseline, xt) == yt).mean() == 1.0

    def test_deterministic(self):
        x, y = blobs(40, 2.0, seed=66)
        config = make_blend_config("svm", ("knn", "decision_tree"), seed=5)
        a = json.dumps(ensemble_to_dict(fit_ensemble(config, x, y)), sort_keys=True)
        b = json.dumps(ensemble_to_dict(fit_ensemble(config, x, y)), sort_keys=True)
        assert a == b


class TestPredictEnsemble:
    def test_row_independence(self):
        x, y = blobs(40, 2.0, seed=67)
        config = make_blend_config("decision_tree", ("knn", "svm"), seed=6)
        ens = fit_ensemble(config, x, y)
        q = np.random.Generator(np.random.PCG64(68)).standard_normal((20, 7))
        perm = np.random.Generator(np.random.PCG64(69)).permutation(20)
        assert np.array_equal(predict_ensemble(ens, q)[perm], predict_ensemble(ens, q[perm]))

    def test_empty_input(self):
        x, y = blobs(20, 3.0, seed=70)
        config = make_blend_config("knn", ("svm",), seed=7)
        ens = fit_ensemble(config, x, y)
        assert len(predict_ensemble(ens, np.zeros((0, 7)))) == 0


class TestOracleConstruction:
    def test_constant_constant_oracle_reaches_one(self):
        rng = np.random.Generator(np.random.PCG64(71))
        y_train = rng.integers(0, 2, 80)
        x_train = y_train.astype(float).reshape(-1, 1)
        oracle = fit(make_spec("decision_tree"), x_train, y_train)
        bases = [constant_base(0), constant_base(1), oracle]

        specs = tuple(b.spec for b in bases)
        config = BlendConfig(meta=make_spec("decision_tree", seed=8), bases=specs)
        fit_idx, val_idx = stratified_split_indices(y_train, 0.3, seed=9)
        table = meta_features(bases, x_train[val_idx], "labels")
        meta = fit(config.meta, table, y_train[val_idx])
        ens = BlendEnsemble(config=config, base_models=bases, meta_model=meta)

        y_test = rng.integers(0, 2, 50)
        x_test = y_test.astype(float).reshape(-1, 1)
        assert (predict_ensemble(ens, x_test) == y_test).mean() == 1.0

    def test_disjoint_error_regions_blend_dominates(self):
        rng = np.random.Generator(np.random.PCG64(72))

        def rows(n):
            y = rng.integers(0, 2, n)
            r = rng.integers(0, 2, n)
            x = np.zeros((n, 3))
            x[:, 0] = np.where(r == 0, y, 1 - y)
            x[:, 1] = np.where(r == 1, y, 1 - y)
            x[:, 2] = r
            return x, y, r

        x_train, y_train, r_train = rows(200)
        x_test, y_test, _ = rows(200)

        def column_stump(col, labels):
            masked = np.zeros_like(x_train)
            masked[:, col] = x_train[:, col]
            return fit(make_spec("decision_tree", max_depth=1), masked, labels)

        bases = [
            column_stump(0, y_train),
            column_stump(1, y_train),
            column_stump(2, r_train),
        ]
        config = BlendConfig(
            meta=make_spec("decision_tree", seed=10), bases=tuple(b.spec for b in bases)
        )
        fit_idx, val_idx = stratified_split_indices(y_train, 0.3, seed=11)
        table = meta_features(bases, x_train[val_idx], "labels")
        meta = fit(config.meta, table, y_train[val_idx])
        ens = BlendEnsemble(config=config, base_models=bases, meta_model=meta)

        blend_acc = (predict_ensemble(ens, x_test) == y_test).mean()
        for base in bases:
            assert blend_acc >= (predict(base, x_test) == y_test).mean()
        assert blend_acc == 1.0


class TestEnsembleSerialization:
    def test_file_round_trip(self, tmp_path):
        x, y = blobs(40, 2.0, seed=73)
        config = make_blend_config("svm", ("knn", "decision_tree"), seed=12)
        ens = fit_ensemble(config, x, y)
        path = tmp_path / "ens.json"
        save_ensemble(ens, path)
        restored = load_ensemble(path)
        q = np.random.Generator(np.random.PCG64(74)).standard_normal((50, 7))
        assert np.array_equal(predict_ensemble(ens, q), predict_ensemble(restored, q))

    def test_wrong_format_version(self):
        x, y = blobs(20, 2.0, seed=75)
        config = make_blend_config("knn", ("svm",), seed=13)
        doc = ensemble_to_dict(fit_ensemble(config, x, y))
        doc["format_version"] = 2
        with pytest.raises(FormatError):
            ensemble_from_dict(doc)
