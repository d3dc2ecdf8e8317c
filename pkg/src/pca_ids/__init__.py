"""PCA-based anomaly detection for NSL-KDD connection records.

Train on normal traffic only; classify records by thresholding their
major and minor principal-component scores.
"""

from .kdd import (
    BASIC6,
    TRAFFIC10,
    PROFILES,
    AttackCategory,
    CategoricalEncoder,
    ConnectionRecord,
    Dataset,
    EmptyDatasetError,
    FeatureProfile,
    FeatureVector,
    Label,
    MalformedRow,
    UnknownTokenError,
    build_encoder,
    categorize_attack,
    extract_features,
    load_dataset,
    parse_record,
)
from .mvstats import (
    EigenPairs,
    StandardizationParams,
    correlation_matrix,
    eigen_sym,
    euclidean_sq,
    fit_standardizer,
    mahalanobis_sq,
    project,
    standardize,
)
from .trainer import (
    PRESETS,
    PcaModel,
    TrainerConfig,
    calibrate_thresholds,
    fit,
    select_major,
    select_minor,
)
from .detector import (
    Trigger,
    Verdict,
    classify,
    classify_stream,
    major_score,
    minor_score,
    score_records,
)
from .evaluation import (
    ConfusionMatrix,
    MetricsReport,
    confusion,
    evaluate,
    metrics,
    per_category,
    sweep,
)
from .modelio import load_model, save_model

__version__ = "0.1.0"
