"""Blending: base classifiers feeding a meta-classifier.

The training data is split once, stratified, into a base-training part and
a blending-validation part. Bases train on the first part; their predictions
on the second part become the meta-model's only training features, so the
meta-model never sees raw feature columns. Prediction applies the same two
steps: base outputs first, meta-model on top.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParam, DegenerateSplit, EmptyPool, FormatError, SingleClass
from .learners import (
    FORMAT_VERSION,
    ClassifierSpec,
    Model,
    _check_xy,
    fit,
    make_spec,
    model_from_dict,
    model_to_dict,
    predict,
    predict_score,
    spec_from_dict,
    spec_to_dict,
)
from .sampling import stratified_split_indices
from .seeding import derive_seed

DEFAULT_VAL_FRACTION = 0.3
META_FEATURE_MODES = ("labels", "scores")

# positional roles under a blend seed
_ROLE_BASES = 0
_ROLE_META = 1
_ROLE_SPLIT = 2


@dataclass(frozen=True)
class BlendConfig:
    """Everything needed to train a blending ensemble reproducibly."""

    meta: ClassifierSpec
    bases: tuple[ClassifierSpec, ...]
    val_fraction: float = DEFAULT_VAL_FRACTION
    meta_feature_mode: str = "labels"
    seed: int = 0

    def __post_init__(self):
        if not self.bases:
            raise EmptyPool("a blend needs at least one base classifier")
        if not 0.0 < self.val_fraction < 1.0:
            raise BadParam("val_fraction must be strictly between 0 and 1")
        if self.meta_feature_mode not in META_FEATURE_MODES:
            raise BadParam(f"meta_feature_mode must be one of {META_FEATURE_MODES}")


@dataclass
class BlendEnsemble:
    """A fitted blend: base models plus the meta-model trained on them."""

    config: BlendConfig
    base_models: list[Model] = field(default_factory=list)
    meta_model: Model | None = None


def _apply_overrides(spec: ClassifierSpec, overrides: dict) -> ClassifierSpec:
    applicable = {k: v for k, v in overrides.items() if k in spec.hyperparameters}
    if not applicable:
        return spec
    return make_spec(spec.kind, seed=spec.seed, **{**spec.hyperparameters, **applicable})


def get_models(pool, master_seed: int = 0, **overrides) -> list[ClassifierSpec]:
    """Fully-defaulted specs for a pool of kinds, seeded by position.

    ``pool`` entries are kind names or existing specs; order is preserved
    and duplicates are kept (they get distinct seeds). ``overrides`` apply
    to every member whose kind has that hyperparameter.
    """
    members = list(pool)
    if not members:
        raise EmptyPool("pool must not be empty")
    specs = []
    for position, member in enumerate(members):
        seed = derive_seed(master_seed, _ROLE_BASES, position)
        if isinstance(member, ClassifierSpec):
            base = make_spec(member.kind, seed=seed, **dict(member.hyperparameters))
        else:
            base = make_spec(member, seed=seed)
        specs.append(_apply_overrides(base, overrides))
    return specs


def make_blend_config(
    meta_kind: str,
    base_kinds,
    seed: int = 0,
    val_fraction: float = DEFAULT_VAL_FRACTION,
    meta_feature_mode: str = "labels",
    **overrides,
) -> BlendConfig:
    """Convenience constructor deriving all member seeds from one seed."""
    bases = tuple(get_models(base_kinds, master_seed=seed, **overrides))
    meta_seed = derive_seed(seed, _ROLE_META, 0)
    meta = _apply_overrides(make_spec(meta_kind, seed=meta_seed), overrides)
    return BlendConfig(
        meta=meta,
        bases=bases,
        val_fraction=val_fraction,
        meta_feature_mode=meta_feature_mode,
        seed=seed,
    )


def meta_features(base_models, x, mode: str = "labels") -> np.ndarray:
    """One column per base model: hard labels or raw scores on ``x``."""
    models = list(base_models)
    if not models:
        raise EmptyPool("need at least one base model")
    if mode not in META_FEATURE_MODES:
        raise BadParam(f"mode must be one of {META_FEATURE_MODES}")
    produce = predict if mode == "labels" else predict_score
    columns = [produce(m, x).astype(np.float64) for m in models]
    return np.column_stack(columns)


def fit_ensemble(config: BlendConfig, x, y) -> BlendEnsemble:
    """Train bases on one stratified part, the meta-model on the other."""
    arr, labels = _check_xy(x, y)
    if len(np.unique(labels)) < 2:
        raise SingleClass("blending needs both classes in the training data")
    split_seed = derive_seed(config.seed, _ROLE_SPLIT, 0)
    fit_idx, val_idx = stratified_split_indices(labels, config.val_fraction, split_seed)
    for part in (fit_idx, val_idx):
        if len(np.unique(labels[part])) < 2:
            raise DegenerateSplit("a blend split part lost one of the classes")
    bases = [fit(spec, arr[fit_idx], labels[fit_idx]) for spec in config.bases]
    table = meta_features(bases, arr[val_idx], config.meta_feature_mode)
    meta = fit(config.meta, table, labels[val_idx])
    return BlendEnsemble(config=config, base_models=bases, meta_model=meta)


def predict_ensemble(ensemble: BlendEnsemble, x) -> np.ndarray:
    """Meta-model prediction over the base models' outputs."""
    table = meta_features(ensemble.base_models, x, ensemble.config.meta_feature_mode)
    return predict(ensemble.meta_model, table)


def config_to_dict(config: BlendConfig) -> dict:
    return {
        "meta": spec_to_dict(config.meta),
        "bases": [spec_to_dict(s) for s in config.bases],
        "val_fraction": config.val_fraction,
        "meta_feature_mode": config.meta_feature_mode,
        "seed": config.seed,
    }


def config_from_dict(doc: dict) -> BlendConfig:
    try:
        return BlendConfig(
            meta=spec_from_dict(doc["meta"]),
            bases=tuple(spec_from_dict(s) for s in doc["bases"]),
            val_fraction=doc["val_fraction"],
            meta_feature_mode=doc["meta_feature_mode"],
            seed=doc["seed"],
        )
    except KeyError as exc:
        raise FormatError(f"missing blend config field: {exc}") from None


def ensemble_to_dict(ensemble: BlendEnsemble) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "config": config_to_dict(ensemble.config),
        "base_models": [model_to_dict(m) for m in ensemble.base_models],
        "meta_model": model_to_dict(ensemble.meta_model),
    }


def ensemble_from_dict(doc: dict) -> BlendEnsemble:
    if doc.get("format_version") != FORMAT_VERSION:
        raise FormatError(
            f"unsupported ensemble format_version {doc.get('format_version')!r}"
        )
    try:
        return BlendEnsemble(
            config=config_from_dict(doc["config"]),
            base_models=[model_from_dict(m) for m in doc["base_models"]],
            meta_model=model_from_dict(doc["meta_model"]),
        )
    except KeyError as exc:
        raise FormatError(f"missing ensemble field: {exc}") from None


def save_ensemble(ensemble: BlendEnsemble, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(ensemble_to_dict(ensemble), indent=2, sort_keys=True))
        fh.write("\n")


def load_ensemble(path) -> BlendEnsemble:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"not valid JSON: {exc}") from None
    return ensemble_from_dict(doc)
