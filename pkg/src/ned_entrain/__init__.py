"""Neural entrainment distance toolkit.

Trains encoder-decoder MLPs that predict the next cross-speaker unit of a
dyadic conversation, and measures entrainment as the distance between
bottleneck embeddings (NED). Ships the canonical corpus format, LLD
functional extraction, a from-scratch network engine with compiled kernels,
session-grouped k-fold experiment drivers, and a synthetic corpus generator
with a controllable coupling used as the test oracle.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .corpus import (
    Corpus,
    Direction,
    FeatureSet,
    InterlocutorKind,
    PairSet,
    Session,
    UnitKind,
    UnitRecord,
    build_consecutive_pairs,
    load_manifest,
    sample_nonconsecutive,
    speaker_roles,
    validate_manifest,
    write_corpus,
)
from .entrainment import (
    ModelConfig,
    NedMetric,
    Polarity,
    Preset,
    TrainedModel,
    encode,
    load_model,
    ned_abs_diff,
    ned_cosine,
    preset_config,
    save_model,
    score_pair,
    train_model,
)
from .errors import NedError
from .experiments import (
    AccuracyReport,
    Baseline,
    FoldPlan,
    emit_report,
    evaluate_fold,
    format_cell,
    kfold_split,
    run_experiment_1,
    run_experiment_2,
    run_experiment_3,
)
from .features import (
    FrameMatrix,
    NormScope,
    NormStats,
    compute_functionals,
    zscore_apply,
    zscore_fit,
)
from .neuralnet import LossKind, MlpSpec, Mode
from .synthgen import GenMode, GenSpec, OracleBand, generate_corpus, oracle_accuracy

__all__ = [
    "AccuracyReport",
    "Baseline",
    "Corpus",
    "Direction",
    "FeatureSet",
    "FoldPlan",
    "FrameMatrix",
    "GenMode",
    "GenSpec",
    "InterlocutorKind",
    "LossKind",
    "MlpSpec",
    "Mode",
    "ModelConfig",
    "NedError",
    "NedMetric",
    "NormScope",
    "NormStats",
    "OracleBand",
    "PairSet",
    "Polarity",
    "Preset",
    "Session",
    "TrainedModel",
    "UnitKind",
    "UnitRecord",
    "__version__",
    "build_consecutive_pairs",
    "compute_functionals",
    "emit_report",
    "encode",
    "evaluate_fold",
    "format_cell",
    "generate_corpus",
    "kfold_split",
    "load_manifest",
    "load_model",
    "ned_abs_diff",
    "ned_cosine",
    "oracle_accuracy",
    "preset_config",
    "run_experiment_1",
    "run_experiment_2",
    "run_experiment_3",
    "sample_nonconsecutive",
    "save_model",
    "score_pair",
    "speaker_roles",
    "train_model",
    "validate_manifest",
    "write_corpus",
    "zscore_apply",
    "zscore_fit",
]
