"""Pipeline configuration: TOML file, CIRCA_ environment overrides."""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    max_upload_mib: int = 64
    tokens: list = field(default_factory=list)
    storage_dir: str = "storage"
    ui_dir: str | None = None
    workers: int = 8


@dataclass
class ArtifactPaths:
    dense: str = ""
    scaler: str = ""
    selection: str = ""
    pca: str = ""
    embed_scaler: str = ""
    embed_map: str = ""
    gmm: str = ""
    tree: str = ""
    train_stats: str | None = None


@dataclass
class PipelineConfig:
    standardize_low: float = 0.0025
    standardize_high: float = 0.9975
    roi_low: float = 0.0005
    roi_high: float = 0.9995
    min_lung_dim: int = 300
    mask_threshold: float = 0.5
    quality_threshold: float | None = None
    sr_trigger_min_dim: int = 512
    sr_patch: int = 50
    min_lung_gap: int = 8
    bin_width: float = 0.05
    embed_k: int = 10
    seed: int = 0
    saliency_enabled: bool = False
    saliency_patch: int = 64
    saliency_stride: int = 64
    backends: dict = field(default_factory=dict)
    artifacts: ArtifactPaths = field(default_factory=ArtifactPaths)
    service: ServiceConfig = field(default_factory=ServiceConfig)
    base_dir: Path = field(default_factory=Path)

    def resolve(self, path_value: str) -> Path:
        p = Path(path_value)
        return p if p.is_absolute() else self.base_dir / p


_PIPELINE_KEYS = {f.name for f in fields(PipelineConfig)} - {
    "backends", "artifacts", "service", "base_dir"}


def _coerce(value: str):
    try:
        return tomllib.loads(f"v = {value}")["v"]
    except tomllib.TOMLDecodeError:
        return value


def apply_env_overrides(config: PipelineConfig, environ=None) -> PipelineConfig:
    """CIRCA_PIPELINE_*, CIRCA_SERVICE_*, CIRCA_ARTIFACTS_* override file values."""
    environ = os.environ if environ is None else environ
    for key, raw in environ.items():
        if not key.startswith("CIRCA_"):
            continue
        parts = key[len("CIRCA_"):].lower().split("_", 1)
        if len(parts) != 2:
            continue
        section, name = parts
        if section == "pipeline" and name in _PIPELINE_KEYS:
            setattr(config, name, _coerce(raw))
        elif section == "service" and hasattr(config.service, name):
            setattr(config.service, name, _coerce(raw))
        elif section == "artifacts" and hasattr(config.artifacts, name):
            setattr(config.artifacts, name, str(raw))
    return config


def load_config(path, environ=None) -> PipelineConfig:
    """Read the TOML config and apply environment overrides on top."""
    path = Path(path)
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    config = PipelineConfig(base_dir=path.parent.resolve())
    for key, value in doc.get("pipeline", {}).items():
        if key in _PIPELINE_KEYS:
            setattr(config, key, value)
    config.backends = dict(doc.get("backends", {}))
    for key, value in doc.get("artifacts", {}).items():
        if hasattr(config.artifacts, key):
            setattr(config.artifacts, key, value)
    for key, value in doc.get("service", {}).items():
        if hasattr(config.service, key):
            setattr(config.service, key, value)
    return apply_env_overrides(config, environ)
