import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from circa.pipeline import PipelineRuntime, load_config
from circa.testing import build_mock_bundle

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def mock_bundle(tmp_path_factory):
    """Seeded mock model bundle shared by pipeline/service/CLI tests."""
    out = tmp_path_factory.mktemp("bundle")
    return build_mock_bundle(out, seed=0)


@pytest.fixture(scope="session")
def shared_runtime(mock_bundle):
    return PipelineRuntime.load(load_config(mock_bundle))


@pytest.fixture()
def fresh_runtime(mock_bundle):
    """Function-scoped runtime for tests that swap backends."""
    return PipelineRuntime.load(load_config(mock_bundle))


@pytest.fixture(scope="session")
def fixture_png(mock_bundle) -> bytes:
    return (mock_bundle.parent / "fixture.png").read_bytes()


class CountingBackend:
    """Wraps a backend and counts run_inference dispatches."""

    def __init__(self, inner):
        self.inner = inner
        self.descriptor = inner.descriptor
        self.calls = 0

    def _run(self, x):
        self.calls += 1
        return self.inner._run(x)


class ArrayBackend:
    """Backend returning a fixed array (or applying a function) for tests."""

    def __init__(self, descriptor, fn):
        self.descriptor = descriptor
        self.fn = fn
        self.calls = 0

    def _run(self, x):
        self.calls += 1
        return self.fn(x)


def make_prob_map_backend(prob_map: np.ndarray):
    from circa.models.backends import BackendDescriptor
    desc = BackendDescriptor(identifier="test-segmentation", kind="segmentation",
                             input_shape=(512, 512), output_shape=(512, 512))
    return ArrayBackend(desc, lambda x: prob_map.copy())


def make_identity_prob_backend():
    from circa.models.backends import BackendDescriptor
    desc = BackendDescriptor(identifier="identity-segmentation", kind="segmentation",
                             input_shape=(512, 512), output_shape=(512, 512))
    return ArrayBackend(desc, lambda x: x.copy())
