"""End-to-end orchestration of a single case."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import NoLungFound
from ..imaging import (
    assemble_patches,
    bilinear_resample,
    decode_image,
    enhance_contrast,
    resize,
    standardize_intensity,
    tile_patches,
)
from ..models import (
    create_backend,
    decide_class,
    dense_forward,
    gmm_predict_subtype,
    knn_embed,
    load_dense,
    load_gmm,
    load_pca,
    load_tree,
    pca_transform,
    run_inference,
    tree_predict,
)
from ..radiomics import apply_scaler, extract_case_features, load_scaler
from ..radiomics.io import load_selection_report
from ..segmentation import (
    build_roi,
    lung_trisection,
    mask_bbox,
    mask_metrics,
    postprocess_mask,
    quality_score,
    too_small_check,
)
from ..segmentation.roi import load_train_stats
from .. import artifacts as artifact_store
from .config import PipelineConfig
from .saliency import occlusion_saliency

SEG_SIZE = 512


class PipelineRuntime:
    """Immutable bundle of loaded backends and model artifacts."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.backends = {
            kind: create_backend(spec) for kind, spec in config.backends.items()
        }
        art = config.artifacts
        self.dense = load_dense(config.resolve(art.dense))
        self.scaler = load_scaler(config.resolve(art.scaler))
        self.selection = load_selection_report(config.resolve(art.selection))
        self.pca = load_pca(config.resolve(art.pca))
        self.embed_scaler = load_scaler(config.resolve(art.embed_scaler))
        embed_map = artifact_store.load_artifact(
            config.resolve(art.embed_map), expect_kind="embed_map")
        self.embed_features = embed_map.tensors["features_pca"].astype(np.float64)
        self.embed_coords = embed_map.tensors["coords"].astype(np.float64)
        self.gmm = load_gmm(config.resolve(art.gmm))
        self.tree = load_tree(config.resolve(art.tree))
        self.train_stats = None
        self.norm_id = None
        if art.train_stats:
            self.train_stats, self.norm_id = load_train_stats(
                config.resolve(art.train_stats))

    @classmethod
    def load(cls, config: PipelineConfig) -> "PipelineRuntime":
        return cls(config)

    def backend(self, kind: str):
        return self.backends.get(kind)

    def artifact_checksums(self) -> dict:
        art = self.config.artifacts
        out = {}
        for name in ("dense", "scaler", "selection", "pca", "embed_scaler",
                     "embed_map", "gmm", "tree", "train_stats"):
            value = getattr(art, name)
            if not value:
                continue
            path = self.config.resolve(value)
            try:
                if name == "selection":
                    import hashlib
                    out[name] = hashlib.sha256(path.read_bytes()).hexdigest()
                else:
                    out[name] = artifact_store.artifact_checksum(path)
            except Exception:
                out[name] = None
        return out


@dataclass
class PipelineResult:
    rejection: dict | None = None
    gates: dict = field(default_factory=dict)
    quality: dict | None = None
    branches: dict | None = None
    probabilities: dict | None = None
    decided_class: str | None = None
    subtype: dict | None = None
    sr: dict = field(default_factory=lambda: {"applied": "none"})
    radiomics: dict | None = None
    artifacts: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    schema_version: int = 1

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "rejection": self.rejection,
            "gates": self.gates,
            "quality": self.quality,
            "branches": self.branches,
            "probabilities": self.probabilities,
            "decided_class": self.decided_class,
            "subtype": self.subtype,
            "sr": self.sr,
            "radiomics": self.radiomics,
            "artifacts": self.artifacts,
            "timings": self.timings,
        }


@dataclass
class CaseArtifacts:
    mask: np.ndarray | None = None
    roi: np.ndarray | None = None
    saliency: np.ndarray | None = None


@dataclass
class ProcessOutcome:
    result: PipelineResult
    artifacts: CaseArtifacts


class _StageClock:
    def __init__(self, timings: dict):
        self.timings = timings

    def __call__(self, name: str):
        return _StageTimer(self.timings, name)


class _StageTimer:
    def __init__(self, timings: dict, name: str):
        self.timings = timings
        self.name = name

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.timings[self.name] = time.perf_counter() - self.start
        return False


def _apply_super_resolution(img: np.ndarray, runtime: PipelineRuntime):
    """Route small images through the SR backend, or fall back to a flagged
    bilinear upscale when none is configured."""
    config = runtime.config
    backend = runtime.backend("super_resolution")
    if backend is None:
        h, w = img.shape
        return bilinear_resample(img, h * 2, w * 2), "fallback"
    scale = backend.descriptor.output_shape[0] // backend.descriptor.input_shape[0]
    grid = tile_patches(img, config.sr_patch)
    grid.patches = [run_inference(backend, p) for p in grid.patches]
    out = assemble_patches(grid, scale=scale)
    return np.clip(out, 0.0, 1.0), "backend"


def preprocess_image(image_bytes: bytes, runtime: PipelineRuntime,
                     format_hint: str | None = None, clock=None):
    """Decode, standardize, enhance, optionally super-resolve, resize-pad."""
    config = runtime.config
    timings: dict = {}
    clock = clock or _StageClock(timings)
    with clock("decode"):
        img = decode_image(image_bytes, format_hint)
    with clock("standardize"):
        img = standardize_intensity(img, config.standardize_low,
                                    config.standardize_high)
    with clock("enhance"):
        img = enhance_contrast(img)
    sr_applied = "none"
    if min(img.shape) < config.sr_trigger_min_dim:
        with clock("super_resolution"):
            img, sr_applied = _apply_super_resolution(img, runtime)
    with clock("resize"):
        seg_input = resize(img, SEG_SIZE, SEG_SIZE, mode="fit_pad").pixels
    return seg_input, sr_applied


def segmentation_stage(image_bytes: bytes, runtime: PipelineRuntime,
                       format_hint: str | None = None, clock=None):
    """Shared front half: preprocessed raster, mask, metrics, score.

    Returns (seg_input, mask, score, sr_applied); raises NoLungFound like
    the full pipeline when segmentation post-processing finds nothing.
    """
    config = runtime.config
    timings: dict = {}
    clock = clock or _StageClock(timings)
    seg_input, sr_applied = preprocess_image(image_bytes, runtime, format_hint, clock)
    with clock("segment"):
        prob_map = run_inference(runtime.backends["segmentation"], seg_input)
    with clock("postprocess"):
        mask = postprocess_mask(prob_map, threshold=config.mask_threshold)
    with clock("quality_score"):
        score = quality_score(mask_metrics(mask))
    return seg_input, mask, score, sr_applied


def process_case(image_bytes: bytes, runtime: PipelineRuntime,
                 format_hint: str | None = None,
                 with_saliency: bool | None = None) -> ProcessOutcome:
    """The full decision flow for one image.

    Gate order is fixed: size before quality before any classification
    backend. Rejected cases keep the mask and quality score so the caller
    can explain the rejection; classification fields stay absent.
    """
    config = runtime.config
    result = PipelineResult()
    clock = _StageClock(result.timings)
    out = CaseArtifacts()

    try:
        seg_input, mask, score, sr_applied = segmentation_stage(
            image_bytes, runtime, format_hint, clock)
    except NoLungFound as exc:
        result.rejection = {"stage": "postprocess", "reason": "NoLungFound",
                            "detail": {"message": str(exc)}}
        result.gates = {"size": {"passed": None}, "quality": {"passed": None}}
        return ProcessOutcome(result=result, artifacts=out)

    result.sr = {"applied": sr_applied}
    out.mask = mask
    result.artifacts["mask"] = "mask.png"
    result.quality = {
        "value": score.value,
        "components": {
            "eccentricity": score.components[0],
            "orientation": score.components[1],
            "area_fraction": score.components[2],
            "solidity": score.components[3],
        },
    }

    bbox = mask_bbox(mask)
    bbox_h = bbox[1] - bbox[0] + 1 if bbox else 0
    bbox_w = bbox[3] - bbox[2] + 1 if bbox else 0
    with clock("size_gate"):
        size_ok = too_small_check(mask, min_dim=config.min_lung_dim)
    result.gates["size"] = {"passed": size_ok, "bbox_height": bbox_h,
                            "bbox_width": bbox_w, "min_dim": config.min_lung_dim}
    if not size_ok:
        result.rejection = {"stage": "size_gate", "reason": "TooSmall",
                            "detail": {"bbox_height": bbox_h, "bbox_width": bbox_w,
                                       "min_dim": config.min_lung_dim}}
        result.gates["quality"] = {"passed": None, "score": score.value,
                                   "threshold": config.quality_threshold}
        return ProcessOutcome(result=result, artifacts=out)

    with clock("quality_gate"):
        threshold = config.quality_threshold
        quality_ok = True if threshold is None else score.value >= threshold
    result.gates["quality"] = {"passed": quality_ok, "score": score.value,
                               "threshold": threshold}
    if not quality_ok:
        result.rejection = {"stage": "quality_gate", "reason": "LowQuality",
                            "detail": {"score": score.value, "threshold": threshold}}
        return ProcessOutcome(result=result, artifacts=out)

    with clock("build_roi"):
        roi = build_roi(seg_input, mask, train_stats=runtime.train_stats,
                        low_q=config.roi_low, high_q=config.roi_high,
                        min_gap=config.min_lung_gap, norm_id=runtime.norm_id)
    out.roi = roi.raw
    result.artifacts["roi"] = "roi.png"

    with clock("image_branch"):
        probs_image = run_inference(runtime.backends["image_classifier"], roi.pixels)

    with clock("radiomics_branch"):
        trisection = lung_trisection(roi.mask)
        fv = extract_case_features(roi, trisection, bin_width=config.bin_width)
        x = apply_scaler(fv.values[runtime.selection.selected], runtime.scaler)
        probs_rad = dense_forward(runtime.dense, x)
    result.radiomics = {"bin_width": fv.bin_width,
                        "empty_segments": list(fv.empty_segments)}

    with clock("aggregate"):
        six = np.concatenate([probs_image, probs_rad])
        final = tree_predict(runtime.tree, six)
        decided = decide_class(final)
    result.branches = {"image": [float(v) for v in probs_image],
                       "radiomics": [float(v) for v in probs_rad]}
    result.probabilities = {"normal": float(final[0]),
                            "pneumonia": float(final[1]),
                            "covid": float(final[2])}
    result.decided_class = decided

    with clock("embed"):
        f261 = run_inference(runtime.backends["feature_extractor"], roi.pixels)
        reduced = pca_transform(runtime.pca, apply_scaler(f261, runtime.embed_scaler))
        coords = knn_embed(reduced, runtime.embed_features, runtime.embed_coords,
                           k=config.embed_k)
    with clock("subtype"):
        assignment = gmm_predict_subtype(runtime.gmm, coords, decided)
    result.subtype = {"label": assignment.label,
                      "posterior": [float(v) for v in assignment.posterior],
                      "coords": [float(coords[0]), float(coords[1])]}

    enable_saliency = config.saliency_enabled if with_saliency is None else with_saliency
    if enable_saliency:
        with clock("saliency"):
            heat = occlusion_saliency(
                roi.pixels, runtime.backends["image_classifier"],
                patch=config.saliency_patch, stride=config.saliency_stride,
                target_class=int(np.argmax(final)))
        out.saliency = heat
        result.artifacts["saliency"] = "saliency.png"
    else:
        result.artifacts["saliency"] = None

    return ProcessOutcome(result=result, artifacts=out)
