"""Syllable-pronunciation scoring from paired recordings.

The pipeline turns a (control, assessed) recording pair into seven
similarity features, prepares labeled feature tables (outlier removal,
cluster-aware minority oversampling), trains from-scratch classifiers and
blending ensembles over them, and sweeps every configuration to compare
ensembles against single-classifier baselines.
"""

from .blend import (
    DEFAULT_VAL_FRACTION,
    META_FEATURE_MODES,
    BlendConfig,
    BlendEnsemble,
    config_from_dict,
    config_to_dict,
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
from .dataprep import (
    VARIANT_NAMES,
    Dataset,
    SmoteParams,
    iqr_clean,
    kmeans,
    kmeans_smote,
    make_variants,
)
from .errors import (
    BadParam,
    BandTooNarrow,
    DegenerateSplit,
    EmptyInput,
    EmptyPool,
    FormatError,
    LabelError,
    LengthMismatch,
    NonFiniteFeature,
    ParseError,
    PipelineError,
    ShapeMismatch,
    SingleClass,
    TooShort,
    UnsupportedFormat,
    ZeroVariance,
)
from .harness import (
    BASE_KINDS,
    DATASET_HEADER,
    DEFAULT_POOL,
    DEFAULT_SUBSET_SIZES,
    REPORT_HEADER,
    SplitSpec,
    SweepReport,
    SweepRow,
    VariantSummary,
    accuracy,
    best_of,
    load_dataset_csv,
    save_dataset_csv,
    split,
    sweep,
    synth_dataset,
    write_report_csv,
    write_report_markdown,
)
from .learners import (
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
    spec_from_dict,
    spec_to_dict,
    to_json,
)
from .metrics import (
    FEATURE_NAMES,
    FeatureRow,
    MetricParams,
    correlation,
    dtw_distance,
    edr,
    erp,
    feature_vector,
    lcss_length,
    minkowski_distance,
    msm,
)
from .sampling import shuffle_split_indices, stratified_split_indices
from .seeding import derive_seed
from .signal import (
    DEFAULT_ENVELOPE_HOP,
    DEFAULT_ENVELOPE_WINDOW,
    Sequence,
    dtw_align,
    envelope,
    preprocess,
    read_sequence_csv,
    read_wav,
    z_normalize,
)

__version__ = "0.1.0"
