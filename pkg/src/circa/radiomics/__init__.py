"""Gray-level discretization, radiomic features, ranking, and scaling."""

from .catalog import (
    FEATURES_PER_SEGMENT,
    SEGMENTS,
    TOTAL_FEATURES,
    FeatureCatalog,
    FeatureDescriptor,
    default_catalog,
    load_catalog,
)
from .discretize import discretize, level_count
from .extract import (
    AUGMENTATION_BIN_WIDTH,
    DEFAULT_BIN_WIDTH,
    FeatureVector,
    extract_case_features,
    segment_features,
)
from .firstorder import FIRST_ORDER_NAMES, first_order_features
from .stats import (
    FeatureScaler,
    FeatureStat,
    KruskalResult,
    SelectionReport,
    apply_scaler,
    build_selection_report,
    fit_scaler,
    kruskal_wallis,
    load_scaler,
    rank_features,
    save_scaler,
    select_features,
)
from .texture import (
    DEFAULT_GLCM_OFFSETS,
    DEFAULT_RUN_DIRECTIONS,
    GLCM_NAMES,
    GLRLM_NAMES,
    GLSZM_NAMES,
    NGTDM_NAMES,
    glcm_features,
    glcm_features_from_matrix,
    glcm_matrix,
    glrlm_features,
    glrlm_matrix,
    glszm_features,
    ngtdm_features,
)

__all__ = [
    "FEATURES_PER_SEGMENT", "SEGMENTS", "TOTAL_FEATURES", "FeatureCatalog",
    "FeatureDescriptor", "default_catalog", "load_catalog", "discretize",
    "level_count", "AUGMENTATION_BIN_WIDTH", "DEFAULT_BIN_WIDTH",
    "FeatureVector", "extract_case_features", "segment_features",
    "FIRST_ORDER_NAMES", "first_order_features", "FeatureScaler",
    "FeatureStat", "KruskalResult", "SelectionReport", "apply_scaler",
    "build_selection_report", "fit_scaler", "kruskal_wallis", "load_scaler",
    "rank_features", "save_scaler", "select_features",
    "DEFAULT_GLCM_OFFSETS", "DEFAULT_RUN_DIRECTIONS", "GLCM_NAMES",
    "GLRLM_NAMES", "GLSZM_NAMES", "NGTDM_NAMES", "glcm_features",
    "glcm_features_from_matrix", "glcm_matrix", "glrlm_features",
    "glrlm_matrix", "glszm_features", "ngtdm_features",
]
