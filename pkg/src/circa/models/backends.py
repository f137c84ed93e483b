"""Pluggable neural-inference backends and the deterministic mocks.

The mocks are part of the public test contract: they are pure functions of
their input with documented constants, so the full pipeline runs and stays
reproducible without any trained network.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import BackendUnavailable, InferenceFailure, ShapeMismatch

SEG_SIZE = 512

# Mock segmentation blob constants (row, col) centers and semi-axes.
MOCK_LUNG_LEFT_CENTER = (260, 170)
MOCK_LUNG_RIGHT_CENTER = (260, 342)
MOCK_LUNG_SEMI_AXES = (155, 85)  # (row, col)
MOCK_PROB_INSIDE = 0.95
MOCK_PROB_OUTSIDE = 0.02


@dataclass(frozen=True)
class BackendDescriptor:
    identifier: str
    kind: str  # segmentation | image_classifier | super_resolution | feature_extractor | mock
    input_shape: tuple
    output_shape: tuple
    concurrent: bool = True


class ModelBackend:
    """Base class: subclasses set `descriptor` and implement `_run`."""

    descriptor: BackendDescriptor

    def _run(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def _shape_ok(shape, declared) -> bool:
    if len(shape) != len(declared):
        return False
    return all(d is None or d == s for s, d in zip(shape, declared))


def run_inference(backend: ModelBackend, x: np.ndarray) -> np.ndarray:
    """Shape-checked dispatch into a backend."""
    x = np.asarray(x, dtype=np.float64)
    desc = backend.descriptor
    if not _shape_ok(x.shape, desc.input_shape):
        raise ShapeMismatch(
            f"{desc.identifier}: input {x.shape} != contract {desc.input_shape}")
    try:
        out = np.asarray(backend._run(x), dtype=np.float64)
    except (ShapeMismatch, BackendUnavailable):
        raise
    except Exception as exc:
        raise InferenceFailure(f"{desc.identifier}: {exc}") from exc
    if not _shape_ok(out.shape, desc.output_shape):
        raise ShapeMismatch(
            f"{desc.identifier}: output {out.shape} != contract {desc.output_shape}")
    return out


class MockSegmentationBackend(ModelBackend):
    """Fixed two-ellipse probability map, independent of the input pixels."""

    def __init__(self):
        self.descriptor = BackendDescriptor(
            identifier="mock-segmentation", kind="segmentation",
            input_shape=(SEG_SIZE, SEG_SIZE), output_shape=(SEG_SIZE, SEG_SIZE))
        rr, cc = np.meshgrid(np.arange(SEG_SIZE, dtype=np.float64),
                             np.arange(SEG_SIZE, dtype=np.float64), indexing="ij")
        ar, ac = MOCK_LUNG_SEMI_AXES
        inside = np.zeros((SEG_SIZE, SEG_SIZE), dtype=bool)
        for cr, ccenter in (MOCK_LUNG_LEFT_CENTER, MOCK_LUNG_RIGHT_CENTER):
            inside |= ((rr - cr) / ar) ** 2 + ((cc - ccenter) / ac) ** 2 <= 1.0
        self._map = np.where(inside, MOCK_PROB_INSIDE, MOCK_PROB_OUTSIDE)

    def _run(self, x):
        return self._map.copy()


class IdentitySegmentation(ModelBackend):
    """Probability map equal to the input pixels; lets black or synthetic
    inputs drive the rejection paths that the fixed-blob mock cannot."""

    def __init__(self):
        self.descriptor = BackendDescriptor(
            identifier="identity-segmentation", kind="segmentation",
            input_shape=(SEG_SIZE, SEG_SIZE), output_shape=(SEG_SIZE, SEG_SIZE))

    def _run(self, x):
        return x.copy()


class MockBandClassifier(ModelBackend):
    """Softmax of the mean intensities of the three horizontal thirds,
    scaled by a fixed factor; a pure, hand-checkable function of the input."""

    def __init__(self, scale: float = 10.0):
        self.scale = scale
        self.descriptor = BackendDescriptor(
            identifier="mock-band-classifier", kind="image_classifier",
            input_shape=(SEG_SIZE, SEG_SIZE), output_shape=(3,))

    def _run(self, x):
        h = x.shape[0]
        third = h // 3
        logits = self.scale * np.array([
            x[:third].mean(), x[third:2 * third].mean(), x[2 * third:].mean()])
        e = np.exp(logits - logits.max())
        return e / e.sum()


class MockQuadrantClassifier(ModelBackend):
    """Class-0 logit reads the mean of one fixed quadrant; used to verify
    occlusion saliency localizes where the classifier actually looks."""

    def __init__(self, row_range=(0, 256), col_range=(0, 256), scale: float = 12.0):
        self.row_range = tuple(row_range)
        self.col_range = tuple(col_range)
        self.scale = scale
        self.descriptor = BackendDescriptor(
            identifier="mock-quadrant-classifier", kind="image_classifier",
            input_shape=(SEG_SIZE, SEG_SIZE), output_shape=(3,))

    def _run(self, x):
        region = x[self.row_range[0]:self.row_range[1],
                   self.col_range[0]:self.col_range[1]]
        logits = np.array([self.scale * region.mean(), 0.0, 0.0])
        e = np.exp(logits - logits.max())
        return e / e.sum()


class ConstantClassifier(ModelBackend):
    """Always returns the same probabilities; input-independent."""

    def __init__(self, probs=(1 / 3, 1 / 3, 1 / 3)):
        self.probs = np.asarray(probs, dtype=np.float64)
        self.descriptor = BackendDescriptor(
            identifier="constant-classifier", kind="image_classifier",
            input_shape=(SEG_SIZE, SEG_SIZE), output_shape=(3,))

    def _run(self, x):
        return self.probs.copy()


class MockSuperResolution(ModelBackend):
    """Nearest-neighbor 2x upscaling of 50x50 patches."""

    def __init__(self, patch: int = 50, scale: int = 2):
        self.scale = scale
        self.descriptor = BackendDescriptor(
            identifier="mock-super-resolution", kind="super_resolution",
            input_shape=(patch, patch), output_shape=(patch * scale, patch * scale))

    def _run(self, x):
        return np.repeat(np.repeat(x, self.scale, axis=0), self.scale, axis=1)


class MockFeatureExtractor(ModelBackend):
    """261-wide embedding: 256 block means of a 16x16 grid plus five global
    statistics (mean, std, min, max, median)."""

    def __init__(self):
        self.descriptor = BackendDescriptor(
            identifier="mock-feature-extractor", kind="feature_extractor",
            input_shape=(SEG_SIZE, SEG_SIZE), output_shape=(261,))

    def _run(self, x):
        block = SEG_SIZE // 16
        means = x.reshape(16, block, 16, block).mean(axis=(1, 3)).ravel()
        stats = np.array([x.mean(), x.std(), x.min(), x.max(), np.median(x)])
        return np.concatenate([means, stats])


class OnnxBackend(ModelBackend):
    """Backend loading a tensor-graph interchange model via onnxruntime.

    onnxruntime is an optional dependency; constructing this backend
    without it raises BackendUnavailable.
    """

    def __init__(self, path: str, kind: str, input_shape, output_shape,
                 identifier: str | None = None):
        try:
            import onnxruntime  # noqa: F401
        except ImportError:
            raise BackendUnavailable(
                "onnxruntime is not installed; install the 'onnx' extra") from None
        self._session = onnxruntime.InferenceSession(path)
        self._input_name = self._session.get_inputs()[0].name
        self.descriptor = BackendDescriptor(
            identifier=identifier or f"onnx:{path}", kind=kind,
            input_shape=tuple(input_shape), output_shape=tuple(output_shape))

    def _run(self, x):
        out = self._session.run(None, {self._input_name: x.astype(np.float32)})
        return np.asarray(out[0], dtype=np.float64).reshape(self.descriptor.output_shape)


_REGISTRY = {
    "mock_segmentation": MockSegmentationBackend,
    "identity_segmentation": IdentitySegmentation,
    "mock_band_classifier": MockBandClassifier,
    "mock_quadrant_classifier": MockQuadrantClassifier,
    "constant_classifier": ConstantClassifier,
    "mock_super_resolution": MockSuperResolution,
    "mock_feature_extractor": MockFeatureExtractor,
}


def create_backend(spec) -> ModelBackend:
    """Build a backend from a config entry: a type string or a table with
    `type` plus constructor parameters."""
    if isinstance(spec, str):
        spec = {"type": spec}
    spec = dict(spec)
    kind = spec.pop("type")
    if kind == "onnx":
        return OnnxBackend(**spec)
    try:
        factory = _REGISTRY[kind]
    except KeyError:
        raise BackendUnavailable(f"unknown backend type {kind!r}") from None
    return factory(**spec)
