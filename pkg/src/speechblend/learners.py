"""Six binary classifiers behind one fit/predict/predict_score contract.

Kinds: knn, decision_tree, random_forest, logistic_regression, svm,
naive_bayes. All are implemented here directly on numpy arrays; the tree
grower and the SVM inner loop are JIT-compiled. Training is deterministic
given the spec seed, and a trained model round-trips through JSON with
bit-identical predictions.

predict always equals predict_score thresholded (0.5 for probability and
vote scores, 0 for the svm margin); a score exactly at the threshold maps
to class 0, matching the tie-to-0 vote rule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import (
    BadParam,
    EmptyInput,
    FormatError,
    LabelError,
    NonFiniteFeature,
    ShapeMismatch,
)
from .seeding import derive_seed

KINDS = (
    "knn",
    "decision_tree",
    "random_forest",
    "logistic_regression",
    "svm",
    "naive_bayes",
)

FORMAT_VERSION = 1

DEFAULT_HYPERPARAMETERS: dict[str, dict] = {
    "knn": {"k": 5, "standardize": True},
    "decision_tree": {"max_depth": None, "min_samples_split": 2},
    # 2 = floor(sqrt(7)) candidate features per split for 7-feature rows
    "random_forest": {
        "n_trees": 100,
        "max_features": 2,
        "max_depth": None,
        "min_samples_split": 2,
    },
    "logistic_regression": {"learning_rate": 0.1, "epochs": 1000, "l2_penalty": 1e-4},
    "svm": {"l2_penalty": 1e-3, "epochs": 1000},
    "naive_bayes": {"var_smoothing": 1e-9},
}


@dataclass(frozen=True)
class ClassifierSpec:
    """A classifier kind plus its full hyperparameter set and seed."""

    kind: str
    hyperparameters: dict
    seed: int = 0


@dataclass
class Model:
    """A trained classifier: its spec and kind-specific fitted parameters."""

    spec: ClassifierSpec
    parameters: dict


def _positive_int(hp, key):
    v = hp[key]
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise BadParam(f"{key} must be a positive integer")


def _validate_hyperparameters(kind: str, hp: dict) -> None:
    if kind == "knn":
        _positive_int(hp, "k")
        if not isinstance(hp["standardize"], bool):
            raise BadParam("standardize must be a bool")
    elif kind in ("decision_tree", "random_forest"):
        if hp["max_depth"] is not None and (
            not isinstance(hp["max_depth"], int) or hp["max_depth"] < 0
        ):
            raise BadParam("max_depth must be None or an integer >= 0")
        if not isinstance(hp["min_samples_split"], int) or hp["min_samples_split"] < 2:
            raise BadParam("min_samples_split must be an integer >= 2")
        if kind == "random_forest":
            _positive_int(hp, "n_trees")
            _positive_int(hp, "max_features")
    elif kind == "logistic_regression":
        if not hp["learning_rate"] > 0:
            raise BadParam("learning_rate must be > 0")
        _positive_int(hp, "epochs")
        if hp["l2_penalty"] < 0:
            raise BadParam("l2_penalty must be >= 0")
    elif kind == "svm":
        if not hp["l2_penalty"] > 0:
            raise BadParam("l2_penalty must be > 0")
        _positive_int(hp, "epochs")
    elif kind == "naive_bayes":
        if hp["var_smoothing"] < 0:
            raise BadParam("var_smoothing must be >= 0")


def make_spec(kind: str, seed: int = 0, **overrides) -> ClassifierSpec:
    """Build a spec with defaults filled in for anything not overridden."""
    if kind not in KINDS:
        raise BadParam(f"unknown classifier kind {kind!r}")
    hp = dict(DEFAULT_HYPERPARAMETERS[kind])
    for key, value in overrides.items():
        if key not in hp:
            raise BadParam(f"{kind} has no hyperparameter {key!r}")
        hp[key] = value
    _validate_hyperparameters(kind, hp)
    return ClassifierSpec(kind=kind, hyperparameters=hp, seed=seed)


def _check_x(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D feature matrix, got ndim={arr.ndim}")
    if arr.shape[1] < 1:
        raise ShapeMismatch("feature matrix needs at least one column")
    if not np.isfinite(arr).all():
        raise NonFiniteFeature("features must be finite")
    return arr


def _check_xy(x, y) -> tuple[np.ndarray, np.ndarray]:
    arr = _check_x(x)
    if len(arr) == 0:
        raise EmptyInput("training data must be non-empty")
    labels = np.asarray(y)
    if labels.ndim != 1 or len(labels) != len(arr):
        raise ShapeMismatch("labels must be 1-D and match the row count")
    if not np.isin(labels, (0, 1)).all():
        raise LabelError("labels must be 0 or 1")
    return arr, labels.astype(np.int64)


def _column_stats(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    # constant columns get unit scale so they center to zero instead of blowing up
    floor = 1e-12 * np.maximum(1.0, np.abs(mean))
    std = np.where(std <= floor, 1.0, std)
    return mean, std


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -35.0, 35.0)))


@njit(cache=True)
def _grow_tree(x, y, max_depth, min_split, cand, use_stream):  # pragma: no cover
    n, _ = x.shape
    max_nodes = 2 * n + 1
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes, np.float64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    ones = np.zeros(max_nodes, np.int64)
    size = np.zeros(max_nodes, np.int64)

    idx = np.arange(n)
    stack = np.empty((max_nodes, 4), np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    n_nodes = 1
    vals = np.empty(n, np.float64)
    while top > 0:
        top -= 1
        node = stack[top, 0]
        lo = stack[top, 1]
        hi = stack[top, 2]
        depth = stack[top, 3]
        m = hi - lo
        c1 = 0
        for i in range(lo, hi):
            c1 += y[idx[i]]
        ones[node] = c1
        size[node] = m
        if c1 == 0 or c1 == m or m < min_split:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue
        row = node if use_stream else 0
        best_g = np.inf
        best_f = -1
        best_t = 0.0
        for ci in range(cand.shape[1]):
            f = cand[row, ci]
            for i in range(m):
                vals[i] = x[idx[lo + i], f]
            order = np.argsort(vals[:m])
            sv = np.empty(m, np.float64)
            sl = np.empty(m, np.int64)
            for i in range(m):
                sv[i] = vals[order[i]]
                sl[i] = y[idx[lo + order[i]]]
            left1 = 0
            for s in range(1, m):
                left1 += sl[s - 1]
                if sv[s] == sv[s - 1]:
                    continue
                nl = s
                nr = m - s
                pl = left1 / nl
                pr = (c1 - left1) / nr
                g = (nl * 2.0 * pl * (1.0 - pl) + nr * 2.0 * pr * (1.0 - pr)) / m
                t = 0.5 * (sv[s - 1] + sv[s])
                if t >= sv[s]:
                    # midpoint rounded up to the right value; keep both sides non-empty
                    t = sv[s - 1]
                # best weighted Gini wins; ties go to the lower feature, then threshold
                if g < best_g or (
                    g == best_g and (f < best_f or (f == best_f and t < best_t))
                ):
                    best_g = g
                    best_f = f
                    best_t = t
        if best_f < 0:
            continue
        i = lo
        j = hi - 1
        while i <= j:
            if x[idx[i], best_f] <= best_t:
                i += 1
            else:
                tmp = idx[i]
                idx[i] = idx[j]
                idx[j] = tmp
                j -= 1
        mid = i
        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_t
        left[node] = left_id
        right[node] = right_id
        stack[top, 0] = right_id
        stack[top, 1] = mid
        stack[top, 2] = hi
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = left_id
        stack[top, 1] = lo
        stack[top, 2] = mid
        stack[top, 3] = depth + 1
        top += 1
    return (
        feature[:n_nodes],
        threshold[:n_nodes],
        left[:n_nodes],
        right[:n_nodes],
        ones[:n_nodes],
        size[:n_nodes],
    )


@njit(cache=True)
def _tree_fraction(xq, feature, threshold, left, right, ones, size):  # pragma: no cover
    n = xq.shape[0]
    out = np.empty(n)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if xq[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = ones[node] / size[node]
    return out


@njit(cache=True)
def _pegasos(x, y, lam, order):  # pragma: no cover
    n, nf = x.shape
    w = np.zeros(nf)
    b = 0.0
    t = 0
    for e in range(order.shape[0]):
        for k in range(n):
            i = order[e, k]
            t += 1
            eta = 1.0 / (lam * t)
            yi = 2.0 * y[i] - 1.0
            margin = b
            for j in range(nf):
                margin += w[j] * x[i, j]
            # bias decays with the weights, as if trained on a constant
            # feature; an unregularized bias blows up under the 1/(lam*t)
            # schedule whose first steps are enormous
            decay = 1.0 - eta * lam
            if yi * margin < 1.0:
                for j in range(nf):
                    w[j] = decay * w[j] + eta * yi * x[i, j]
                b = decay * b + eta * yi
            else:
                for j in range(nf):
                    w[j] = decay * w[j]
                b = decay * b
    return w, b


def _fit_knn(spec: ClassifierSpec, x: np.ndarray, y: np.ndarray) -> Model:
    params: dict = {"n_features": x.shape[1]}
    if spec.hyperparameters["standardize"]:
        mean, std = _column_stats(x)
        params["mean"] = mean
        params["std"] = std
        x = (x - mean) / std
    params["train_x"] = x
    params["train_y"] = y
    return Model(spec, params)


def _score_knn(model: Model, x: np.ndarray) -> np.ndarray:
    p = model.parameters
    if "mean" in p:
        x = (x - p["mean"]) / p["std"]
    train_x = p["train_x"]
    train_y = p["train_y"]
    k = min(model.spec.hyperparameters["k"], len(train_x))
    diff = x[:, None, :] - train_x[None, :, :]
    d2 = (diff * diff).sum(axis=2)
    # stable sort: equal distances resolve toward the earlier training row
    nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return train_y[nearest].mean(axis=1)


def _tree_arrays(spec_hp: dict, x: np.ndarray, y: np.ndarray, cand: np.ndarray, use_stream: bool):
    max_depth = -1 if spec_hp["max_depth"] is None else spec_hp["max_depth"]
    return _grow_tree(x, y, max_depth, spec_hp["min_samples_split"], cand, use_stream)


_TREE_KEYS = ("feature", "threshold", "left", "right", "ones", "size")


def _fit_tree(spec: ClassifierSpec, x: np.ndarray, y: np.ndarray) -> Model:
    nf = x.shape[1]
    cand = np.arange(nf, dtype=np.int64).reshape(1, nf)
    arrays = _tree_arrays(spec.hyperparameters, x, y, cand, False)
    params = {"n_features": nf}
    params.update(zip(_TREE_KEYS, arrays))
    return Model(spec, params)


def _score_tree(model: Model, x: np.ndarray) -> np.ndarray:
    p = model.parameters
    return _tree_fraction(
        x, p["feature"], p["threshold"], p["left"], p["right"], p["ones"], p["size"]
    )


def _fit_forest(spec: ClassifierSpec, x: np.ndarray, y: np.ndarray) -> Model:
    hp = spec.hyperparameters
    n, nf = x.shape
    m_try = min(hp["max_features"], nf)
    trees = []
    for t in range(hp["n_trees"]):
        rng = np.random.Generator(np.random.PCG64(derive_seed(spec.seed, t)))
        boot = rng.integers(0, n, size=n)
        # one pre-drawn candidate row per possible node, consumed in creation order
        keys = rng.random((2 * n + 1, nf))
        cand = np.ascontiguousarray(np.argsort(keys, axis=1)[:, :m_try].astype(np.int64))
        arrays = _tree_arrays(hp, x[boot], y[boot], cand, True)
        trees.append(dict(zip(_TREE_KEYS, arrays)))
    return Model(spec, {"n_features": nf, "trees": trees})


def _score_forest(model: Model, x: np.ndarray) -> np.ndarray:
    trees = model.parameters["trees"]
    votes = np.zeros(len(x))
    for p in trees:
        frac = _tree_fraction(
            x, p["feature"], p["threshold"], p["left"], p["right"], p["ones"], p["size"]
        )
        votes += frac > 0.5
    return votes / len(trees)


def _fit_logistic(spec: ClassifierSpec, x: np.ndarray, y: np.ndarray) -> Model:
    hp = spec.hyperparameters
    mean, std = _column_stats(x)
    z = (x - mean) / std
    n, nf = z.shape
    w = np.zeros(nf)
    b = 0.0
    yf = y.astype(np.float64)
    lr = hp["learning_rate"]
    l2 = hp["l2_penalty"]
    for _ in range(hp["epochs"]):
        err = _sigmoid(z @ w + b) - yf
        w -= lr * (z.T @ err / n + l2 * w)
        b -= lr * err.mean()
    return Model(
        spec,
        {"n_features": nf, "mean": mean, "std": std, "weights": w, "bias": float(b)},
    )


def _score_logistic(model: Model, x: np.ndarray) -> np.ndarray:
    p = model.parameters
    z = (x - p["mean"]) / p["std"]
    return _sigmoid(z @ p["weights"] + p["bias"])


def _fit_svm(spec: ClassifierSpec, x: np.ndarray, y: np.ndarray) -> Model:
    hp = spec.hyperparameters
    mean, std = _column_stats(x)
    z = (x - mean) / std
    n = len(z)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    order = np.empty((hp["epochs"], n), dtype=np.int64)
    for e in range(hp["epochs"]):
        order[e] = rng.permutation(n)
    w, b = _pegasos(z, y, hp["l2_penalty"], order)
    return Model(
        spec,
        {
            "n_features": z.shape[1],
            "mean": mean,
            "std": std,
            "weights": w,
            "bias": float(b),
        },
    )


def _score_svm(model: Model, x: np.ndarray) -> np.ndarray:
    p = model.parameters
    z = (x - p["mean"]) / p["std"]
    return z @ p["weights"] + p["bias"]


def _fit_naive_bayes(spec: ClassifierSpec, x: np.ndarray, y: np.ndarray) -> Model:
    smoothing = spec.hyperparameters["var_smoothing"] * float(x.var(axis=0).max())
    if smoothing <= 0.0:
        smoothing = 1e-12  # all-constant features still need a positive variance
    params: dict = {"n_features": x.shape[1], "prior1": float(y.mean())}
    for c in (0, 1):
        rows = x[y == c]
        params[f"mean{c}"] = rows.mean(axis=0)
        params[f"var{c}"] = rows.var(axis=0) + smoothing
    return Model(spec, params)


def _score_naive_bayes(model: Model, x: np.ndarray) -> np.ndarray:
    p = model.parameters

    def log_joint(c: int, prior: float) -> np.ndarray:
        mean = p[f"mean{c}"]
        var = p[f"var{c}"]
        ll = -0.5 * (np.log(2.0 * np.pi * var) + (x - mean) ** 2 / var).sum(axis=1)
        return ll + np.log(prior)

    lp1 = log_joint(1, p["prior1"])
    lp0 = log_joint(0, 1.0 - p["prior1"])
    return np.exp(lp1 - np.logaddexp(lp0, lp1))


_FITTERS = {
    "knn": _fit_knn,
    "decision_tree": _fit_tree,
    "random_forest": _fit_forest,
    "logistic_regression": _fit_logistic,
    "svm": _fit_svm,
    "naive_bayes": _fit_naive_bayes,
}

_SCORERS = {
    "knn": _score_knn,
    "decision_tree": _score_tree,
    "random_forest": _score_forest,
    "logistic_regression": _score_logistic,
    "svm": _score_svm,
    "naive_bayes": _score_naive_bayes,
}


def score_threshold(kind: str) -> float:
    """Decision threshold applied to predict_score; scores at it map to 0."""
    return 0.0 if kind == "svm" else 0.5


def fit(spec: ClassifierSpec, x, y) -> Model:
    """Train a classifier. Single-class input yields a constant model."""
    if spec.kind not in KINDS:
        raise BadParam(f"unknown classifier kind {spec.kind!r}")
    arr, labels = _check_xy(x, y)
    present = np.unique(labels)
    if len(present) == 1:
        return Model(
            spec, {"constant_class": int(present[0]), "n_features": arr.shape[1]}
        )
    return _FITTERS[spec.kind](spec, arr, labels)


def predict_score(model: Model, x) -> np.ndarray:
    """Class-1 score per row: posterior, sigmoid, vote fraction, or margin."""
    arr = _check_x(x)
    if arr.shape[1] != model.parameters["n_features"]:
        raise ShapeMismatch(
            f"model expects {model.parameters['n_features']} features, got {arr.shape[1]}"
        )
    if "constant_class" in model.parameters:
        c = model.parameters["constant_class"]
        if model.spec.kind == "svm":
            return np.full(len(arr), 2.0 * c - 1.0)
        return np.full(len(arr), float(c))
    return _SCORERS[model.spec.kind](model, arr)


def predict(model: Model, x) -> np.ndarray:
    """Hard 0/1 labels: predict_score thresholded."""
    return (predict_score(model, x) > score_threshold(model.spec.kind)).astype(np.int64)


# --- serialization ---

_INT_ARRAY_KEYS = {"train_y", "feature", "left", "right", "ones", "size"}
_FLOAT_ARRAY_KEYS = {"train_x", "mean", "std", "weights", "mean0", "mean1", "var0", "var1"}
_FLOAT_ARRAY_KEYS |= {"threshold"}


def _encode(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, dict):
        return {k: _encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    return value


def _decode_parameters(raw: dict) -> dict:
    out: dict = {}
    for key, value in raw.items():
        if key == "trees":
            out[key] = [_decode_parameters(tree) for tree in value]
        elif key in _INT_ARRAY_KEYS:
            out[key] = np.asarray(value, dtype=np.int64)
        elif key in _FLOAT_ARRAY_KEYS:
            out[key] = np.asarray(value, dtype=np.float64)
        else:
            out[key] = value
    return out


def spec_to_dict(spec: ClassifierSpec) -> dict:
    return {
        "kind": spec.kind,
        "hyperparameters": _encode(spec.hyperparameters),
        "seed": spec.seed,
    }


def spec_from_dict(doc: dict) -> ClassifierSpec:
    try:
        return make_spec(doc["kind"], seed=doc["seed"], **doc["hyperparameters"])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed classifier spec: {exc}") from None


def model_to_dict(model: Model) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "spec": spec_to_dict(model.spec),
        "parameters": _encode(model.parameters),
    }


def model_from_dict(doc: dict) -> Model:
    if doc.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"unsupported model format_version {doc.get('format_version')!r}")
    try:
        spec = spec_from_dict(doc["spec"])
        parameters = _decode_parameters(doc["parameters"])
    except KeyError as exc:
        raise FormatError(f"missing model field: {exc}") from None
    return Model(spec, parameters)


def to_json(model: Model) -> str:
    return json.dumps(model_to_dict(model), indent=2, sort_keys=True)


def from_json(text: str) -> Model:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc}") from None
    return model_from_dict(doc)


def save_model(model: Model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_json(model))
        fh.write("\n")


def load_model(path) -> Model:
    with open(path, "r", encoding="utf-8") as fh:
        return from_json(fh.read())
