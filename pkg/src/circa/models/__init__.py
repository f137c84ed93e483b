"""Classical models: PCA, per-class 2D GMM, k-NN embedding, dense net, CART."""

from .backends import (
    BackendDescriptor,
    ConstantClassifier,
    MockBandClassifier,
    MockFeatureExtractor,
    MockQuadrantClassifier,
    MockSegmentationBackend,
    MockSuperResolution,
    ModelBackend,
    OnnxBackend,
    create_backend,
    run_inference,
)
from .dense import (
    DenseConfig,
    DenseNetParams,
    NadamOptimizer,
    dense_forward,
    dense_train,
    init_params,
    load_dense,
    loss_and_grads,
    save_dense,
    weighted_cross_entropy,
)
from .embed import cosine_distances, knn_embed
from .gmm import (
    CLASS_LABELS,
    GmmModel2D,
    MixtureModel,
    SubtypeAssignment,
    em_loglik,
    fit_mixture,
    gmm_fit,
    gmm_predict_subtype,
    load_gmm,
    save_gmm,
    subtype_labels,
)
from .pca import PcaModel, load_pca, pca_fit, pca_transform, save_pca
from .tree import (
    DecisionTreeModel,
    TreeConfig,
    TreeNode,
    decide_class,
    load_tree,
    save_tree,
    tree_fit,
    tree_predict,
    weighted_gini,
)

__all__ = [
    "BackendDescriptor", "ConstantClassifier", "MockBandClassifier",
    "MockFeatureExtractor", "MockQuadrantClassifier",
    "MockSegmentationBackend", "MockSuperResolution", "ModelBackend",
    "OnnxBackend", "create_backend", "run_inference", "DenseConfig",
    "DenseNetParams", "NadamOptimizer", "dense_forward", "dense_train",
    "init_params", "load_dense", "loss_and_grads", "save_dense",
    "weighted_cross_entropy", "cosine_distances", "knn_embed",
    "CLASS_LABELS", "GmmModel2D", "MixtureModel", "SubtypeAssignment",
    "em_loglik", "fit_mixture", "gmm_fit", "gmm_predict_subtype", "load_gmm",
    "save_gmm", "subtype_labels", "PcaModel", "load_pca", "pca_fit",
    "pca_transform", "save_pca", "DecisionTreeModel", "TreeConfig",
    "TreeNode", "decide_class", "load_tree", "save_tree", "tree_fit",
    "tree_predict", "weighted_gini",
]
