"""Experiment harness: dataset files, splits, sweeps, and reports.

A sweep takes one labeled dataset, holds out a stratified test part once,
builds the four preparation variants from the training part only, then
scores every single-classifier baseline and every (meta, base-subset)
blending ensemble on the common test part. All randomness is derived from
one master seed, so a sweep is reproducible byte for byte and any row can
be recomputed in isolation from its recorded seed.
"""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass

import numpy as np

from .blend import fit_ensemble, make_blend_config, predict_ensemble
from .dataprep import VARIANT_NAMES, Dataset, SmoteParams, make_variants
from .errors import (
    BadParam,
    DegenerateSplit,
    EmptyInput,
    FormatError,
    LabelError,
    LengthMismatch,
    NonFiniteFeature,
)
from .learners import KINDS, fit, make_spec, predict
from .metrics import FEATURE_NAMES
from .sampling import shuffle_split_indices, stratified_split_indices
from .seeding import derive_seed

DATASET_HEADER = "dtw,corr,minkowski,edr,erp,lcss,msm,label"
REPORT_HEADER = "variant,meta,bases,accuracy,n_train,n_test,seed"

# the five kinds eligible as ensemble bases by default
BASE_KINDS = ("knn", "random_forest", "svm", "logistic_regression", "decision_tree")
DEFAULT_POOL = BASE_KINDS
DEFAULT_SUBSET_SIZES = (2, 3, 4)

# positional roles under a sweep master seed
_ROLE_OUTER_SPLIT = 0
_ROLE_SMOTE = 1
_ROLE_BASELINE = 2
_ROLE_ENSEMBLE = 3


@dataclass(frozen=True)
class SplitSpec:
    """How to divide a dataset into train and test parts."""

    test_fraction: float = 0.25
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise BadParam("test_fraction must be strictly between 0 and 1")


@dataclass(frozen=True)
class SweepRow:
    """One scored configuration; baselines carry an empty base tuple."""

    variant: str
    meta: str
    bases: tuple[str, ...]
    accuracy: float
    n_train: int
    n_test: int
    seed: int

    @property
    def is_baseline(self) -> bool:
        return not self.bases


@dataclass
class SweepReport:
    """All rows of one sweep plus the settings that produced them."""

    master_seed: int
    pool: tuple[str, ...]
    base_pool: tuple[str, ...]
    subset_sizes: tuple[int, ...]
    scale_features: bool
    rows: list[SweepRow]


@dataclass(frozen=True)
class VariantSummary:
    """Best baseline and best ensemble for one variant, with the gap."""

    variant: str
    best_baseline: SweepRow | None
    best_ensemble: SweepRow | None

    @property
    def improvement(self) -> float | None:
        if self.best_baseline is None or self.best_ensemble is None:
            return None
        return self.best_ensemble.accuracy - self.best_baseline.accuracy


def load_dataset_csv(path, variant: str = "original", phoneme_tag: str = "") -> Dataset:
    """Read a labeled feature table; the header line must match exactly."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != DATASET_HEADER:
        raise FormatError(f"expected header {DATASET_HEADER!r}")
    features = []
    labels = []
    for lineno in range(1, len(lines)):
        text = lines[lineno]
        if not text.strip():
            raise FormatError(f"line {lineno + 1}: blank line")
        fields = text.split(",")
        if len(fields) != len(FEATURE_NAMES) + 1:
            raise FormatError(
                f"line {lineno + 1}: expected {len(FEATURE_NAMES) + 1} fields, got {len(fields)}"
            )
        try:
            values = [float(f) for f in fields]
        except ValueError:
            raise FormatError(f"line {lineno + 1}: non-numeric field") from None
        if not all(np.isfinite(v) for v in values[:-1]):
            raise NonFiniteFeature(f"line {lineno + 1}: non-finite feature")
        if values[-1] not in (0.0, 1.0):
            raise LabelError(f"line {lineno + 1}: label must be 0 or 1")
        features.append(values[:-1])
        labels.append(int(values[-1]))
    x = np.asarray(features, dtype=np.float64).reshape(len(features), len(FEATURE_NAMES))
    return Dataset.from_arrays(x, np.asarray(labels), variant=variant, phoneme_tag=phoneme_tag)


def save_dataset_csv(d: Dataset, path) -> None:
    """Write a dataset in the exact format :func:`load_dataset_csv` reads."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(DATASET_HEADER + "\n")
        for row in d.rows:
            fields = [repr(v) for v in row.values()]
            fields.append(str(int(row.label)))
            fh.write(",".join(fields) + "\n")


def split(d: Dataset, spec: SplitSpec | None = None) -> tuple[Dataset, Dataset]:
    """Partition a dataset into (train, test) per the split spec."""
    if spec is None:
        spec = SplitSpec()
    if not d.rows:
        raise EmptyInput("cannot split an empty dataset")
    if spec.stratified:
        labels = d.labels()
        if (np.bincount(labels, minlength=2) < 2).any():
            raise DegenerateSplit("stratified split needs at least 2 rows per class")
        train_idx, test_idx = stratified_split_indices(labels, spec.test_fraction, spec.seed)
    else:
        train_idx, test_idx = shuffle_split_indices(len(d), spec.test_fraction, spec.seed)
    def pick(idx):
        return Dataset(
            rows=tuple(d.rows[i] for i in idx), variant=d.variant, phoneme_tag=d.phoneme_tag
        )

    return pick(train_idx), pick(test_idx)


def accuracy(predictions, truth) -> float:
    """Fraction of positions where the two label arrays agree."""
    p = np.asarray(predictions)
    t = np.asarray(truth)
    if p.shape != t.shape:
        raise LengthMismatch(f"shapes differ: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise EmptyInput("accuracy of zero predictions is undefined")
    return float((p == t).mean())


def synth_dataset(
    rows: int,
    minority_fraction: float,
    separation: float,
    seed: int = 0,
    region_noise: float = 0.0,
) -> Dataset:
    """Two-blob synthetic feature table shaped like the real ones.

    Seven features per row, one Gaussian blob per class, per-feature mean gap
    equal to ``separation`` pooled standard deviations. The dtw/minkowski and
    edr/lcss columns are correlated within class to mimic the redundancy of
    real similarity measures. Class 0 is the minority with
    round(rows * minority_fraction) rows.

    ``region_noise`` > 0 flips labels with that probability where the erp
    column runs high (a third of it elsewhere), making some regions
    intrinsically harder, the way difficult phonemes behave.
    """
    if not isinstance(rows, int) or rows < 10:
        raise BadParam("rows must be an integer >= 10")
    if not 0.0 < minority_fraction < 0.5:
        raise BadParam("minority_fraction must be strictly between 0 and 0.5")
    if not np.isfinite(separation) or separation < 0:
        raise BadParam("separation must be a finite real >= 0")
    if not 0.0 <= region_noise < 0.5:
        raise BadParam("region_noise must be in [0, 0.5)")

    n_minority = int(round(rows * minority_fraction))
    labels = np.ones(rows, dtype=np.int64)
    labels[:n_minority] = 0

    rng = np.random.Generator(np.random.PCG64(seed))
    e = rng.standard_normal((rows, len(FEATURE_NAMES)))
    x = e.copy()
    x[:, 2] = 0.8 * e[:, 0] + 0.6 * e[:, 2]  # minkowski tracks dtw
    x[:, 5] = 0.8 * e[:, 3] + 0.6 * e[:, 5]  # lcss tracks edr
    x += separation * labels[:, None]

    if region_noise > 0.0:
        # rows with a high erp column sit in the noisy region
        hard = x[:, 4] > separation / 2.0
        u = rng.random(rows)
        flip = np.where(hard, u < region_noise, u < region_noise / 3.0)
        labels = np.where(flip, 1 - labels, labels)

    order = rng.permutation(rows)
    return Dataset.from_arrays(x[order], labels[order], variant="original", phoneme_tag="synthetic")


def _subsets(base_pool: tuple[str, ...], sizes: tuple[int, ...]) -> list[tuple[str, ...]]:
    out = []
    for size in sizes:
        out.extend(itertools.combinations(base_pool, size))
    return out


def sweep(
    d: Dataset,
    master_seed: int,
    pool=DEFAULT_POOL,
    subset_sizes=DEFAULT_SUBSET_SIZES,
    base_pool=None,
    test_fraction: float = 0.25,
    val_fraction: float = 0.3,
    meta_feature_mode: str = "labels",
    smote: SmoteParams | None = None,
    fence_k: float = 1.5,
    scale_features: bool = True,
) -> SweepReport:
    """Score all baselines and blending ensembles under one master seed.

    The test part is held out once; variants are built from the training
    part only, so cleaning and rebalancing never see test rows. Metas range
    over ``pool``; base subsets are drawn from ``base_pool``, which defaults
    to the members of ``pool`` that are eligible base kinds. With the
    default pool and sizes this yields 20 baseline rows and 500 ensembles.
    ``scale_features`` toggles knn's internal per-column standardization.
    """
    pool = tuple(pool)
    for kind in pool:
        if kind not in KINDS:
            raise BadParam(f"unknown classifier kind {kind!r}")
    if not pool:
        raise BadParam("pool must not be empty")
    if base_pool is None:
        base_pool = tuple(k for k in pool if k in BASE_KINDS)
    else:
        base_pool = tuple(base_pool)
        for kind in base_pool:
            if kind not in KINDS:
                raise BadParam(f"unknown classifier kind {kind!r}")
    sizes = tuple(s for s in subset_sizes if s <= len(base_pool))
    if any(s < 2 for s in sizes):
        raise BadParam("ensemble subsets need at least 2 bases")

    outer = SplitSpec(
        test_fraction=test_fraction,
        stratified=True,
        seed=derive_seed(master_seed, _ROLE_OUTER_SPLIT),
    )
    train, test = split(d, outer)
    if smote is None:
        smote = SmoteParams()
    smote = dataclasses.replace(smote, seed=derive_seed(master_seed, _ROLE_SMOTE))
    variants = make_variants(train, smote=smote, fence_k=fence_k)
    x_test = test.features()
    y_test = test.labels()

    knn_overrides = {"standardize": scale_features}
    subsets = _subsets(base_pool, sizes)
    rows: list[SweepRow] = []
    for v_idx, name in enumerate(VARIANT_NAMES):
        variant = variants[name]
        x_train = variant.features()
        y_train = variant.labels()
        for k_idx, kind in enumerate(pool):
            seed = derive_seed(master_seed, _ROLE_BASELINE, v_idx, k_idx)
            overrides = knn_overrides if kind == "knn" else {}
            model = fit(make_spec(kind, seed=seed, **overrides), x_train, y_train)
            rows.append(
                SweepRow(
                    variant=name,
                    meta=kind,
                    bases=(),
                    accuracy=accuracy(predict(model, x_test), y_test),
                    n_train=len(variant),
                    n_test=len(test),
                    seed=seed,
                )
            )
        for m_idx, meta_kind in enumerate(pool):
            for s_idx, subset in enumerate(subsets):
                seed = derive_seed(master_seed, _ROLE_ENSEMBLE, v_idx, m_idx, s_idx)
                config = make_blend_config(
                    meta_kind,
                    subset,
                    seed=seed,
                    val_fraction=val_fraction,
                    meta_feature_mode=meta_feature_mode,
                    **knn_overrides,
                )
                ensemble = fit_ensemble(config, x_train, y_train)
                rows.append(
                    SweepRow(
                        variant=name,
                        meta=meta_kind,
                        bases=subset,
                        accuracy=accuracy(predict_ensemble(ensemble, x_test), y_test),
                        n_train=len(variant),
                        n_test=len(test),
                        seed=seed,
                    )
                )
    return SweepReport(
        master_seed=master_seed,
        pool=pool,
        base_pool=base_pool,
        subset_sizes=sizes,
        scale_features=scale_features,
        rows=rows,
    )


def _row_fields(row: SweepRow) -> tuple[str, ...]:
    return (
        row.variant,
        row.meta,
        "+".join(row.bases),
        f"{row.accuracy:.3f}",
        str(row.n_train),
        str(row.n_test),
        str(row.seed),
    )


def write_report_csv(report: SweepReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(REPORT_HEADER + "\n")
        for row in report.rows:
            fh.write(",".join(_row_fields(row)) + "\n")


def write_report_markdown(report: SweepReport, path) -> None:
    columns = REPORT_HEADER.split(",")
    table = [_row_fields(row) for row in report.rows]
    widths = [
        max(len(columns[i]), *(len(fields[i]) for fields in table)) if table else len(columns[i])
        for i in range(len(columns))
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# Sweep report\n\n")
        fh.write(f"- master seed: {report.master_seed}\n")
        fh.write(f"- pool: {', '.join(report.pool)}\n")
        fh.write(f"- base pool: {', '.join(report.base_pool)}\n")
        fh.write(f"- subset sizes: {', '.join(str(s) for s in report.subset_sizes)}\n")
        fh.write(f"- feature scaling (knn): {'on' if report.scale_features else 'off'}\n\n")
        fh.write("| " + " | ".join(c.ljust(w) for c, w in zip(columns, widths)) + " |\n")
        fh.write("|" + "|".join("-" * (w + 2) for w in widths) + "|\n")
        for fields in table:
            fh.write("| " + " | ".join(f.ljust(w) for f, w in zip(fields, widths)) + " |\n")


def _preference_key(row: SweepRow) -> tuple:
    # higher accuracy first; ties prefer fewer bases, then lexicographic names
    return (-row.accuracy, len(row.bases), row.meta, row.bases)


def best_of(report: SweepReport) -> list[VariantSummary]:
    """Per variant: the best baseline, best ensemble, and their gap."""
    if not report.rows:
        raise EmptyInput("report has no rows")
    seen: list[str] = []
    for row in report.rows:
        if row.variant not in seen:
            seen.append(row.variant)
    summaries = []
    for variant in seen:
        rows = [r for r in report.rows if r.variant == variant]
        baselines = sorted((r for r in rows if r.is_baseline), key=_preference_key)
        ensembles = sorted((r for r in rows if not r.is_baseline), key=_preference_key)
        summaries.append(
            VariantSummary(
                variant=variant,
                best_baseline=baselines[0] if baselines else None,
                best_ensemble=ensembles[0] if ensembles else None,
            )
        )
    return summaries
