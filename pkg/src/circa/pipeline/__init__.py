"""End-to-end case orchestration and corpus workflows."""

from .canonical import canonical_json
from .clean import CleanReport, clean_dataset
from .config import ArtifactPaths, PipelineConfig, ServiceConfig, apply_env_overrides, load_config
from .manifest import ManifestEntry, iter_manifest, read_manifest, write_manifest
from .run import (
    CaseArtifacts,
    PipelineResult,
    PipelineRuntime,
    ProcessOutcome,
    preprocess_image,
    process_case,
    segmentation_stage,
)
from .saliency import normalize_heatmap, occlusion_saliency
from .sampling import (
    component_density,
    stratified_sample,
    weighted_sample_without_replacement,
)

__all__ = [
    "canonical_json", "CleanReport", "clean_dataset", "ArtifactPaths",
    "PipelineConfig", "ServiceConfig", "apply_env_overrides", "load_config",
    "ManifestEntry", "iter_manifest", "read_manifest", "write_manifest",
    "CaseArtifacts", "PipelineResult", "PipelineRuntime", "ProcessOutcome",
    "preprocess_image", "process_case", "segmentation_stage",
    "normalize_heatmap", "occlusion_saliency", "component_density",
    "stratified_sample", "weighted_sample_without_replacement",
]
