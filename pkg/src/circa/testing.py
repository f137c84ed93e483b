"""Deterministic fixtures: synthetic chest rasters and a mock model bundle.

The mock bundle is part of the public test contract: it wires the mock
backends to small, seeded model artifacts so the whole pipeline (and the
HTTP service) runs reproducibly with no trained networks. Build one with

    python -m circa.testing OUTPUT_DIR [SEED]
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .imaging.raster import raster_to_png_bytes
from .models import DenseConfig, dense_train, gmm_fit, pca_fit, pca_transform, save_dense, save_gmm, save_pca, save_tree, tree_fit
from .models.tree import TreeConfig
from .radiomics import build_selection_report, fit_scaler, load_catalog, save_scaler
from .radiomics.io import save_selection_report
from . import artifacts as artifact_store

FIXTURE_SEED = 0


def make_synthetic_cxr(seed: int = FIXTURE_SEED, size: int = 600) -> np.ndarray:
    """A chest-radiograph-shaped raster: gradient background, two bright
    lung fields with rib banding, a spine column, and seeded noise."""
    rng = np.random.default_rng(seed)
    rr, cc = np.meshgrid(np.linspace(0, 1, size), np.linspace(0, 1, size),
                         indexing="ij")
    img = 0.25 + 0.2 * rr

    for center_c in (0.33, 0.67):
        ell = ((rr - 0.52) / 0.33) ** 2 + ((cc - center_c) / 0.18) ** 2
        field = np.clip(1.0 - ell, 0.0, 1.0)
        ribs = 0.06 * np.sin(rr * size / 14.0) * (field > 0)
        img += 0.35 * field + ribs * field

    spine = np.exp(-((cc - 0.5) / 0.045) ** 2)
    img += 0.18 * spine
    img += rng.normal(0.0, 0.015, size=(size, size))
    return np.clip(img, 0.0, 1.0)


def write_fixture_png(path, seed: int = FIXTURE_SEED, size: int = 600) -> None:
    Path(path).write_bytes(raster_to_png_bytes(make_synthetic_cxr(seed, size)))


_CONFIG_TEMPLATE = """\
[pipeline]
quality_threshold = 0.5
bin_width = 0.05
embed_k = 5
seed = {seed}
saliency_enabled = false
saliency_patch = 128
saliency_stride = 128

[backends]
segmentation = "mock_segmentation"
image_classifier = "mock_band_classifier"
super_resolution = "mock_super_resolution"
feature_extractor = "mock_feature_extractor"

[artifacts]
dense = "dense.circa"
scaler = "scaler.circa"
selection = "selection.json"
pca = "pca.circa"
embed_scaler = "embed_scaler.circa"
embed_map = "embed_map.circa"
gmm = "gmm.circa"
tree = "tree.circa"

[service]
host = "127.0.0.1"
port = 8000
max_upload_mib = 64
tokens = ["test-token"]
storage_dir = "storage"
workers = 8
"""


def build_mock_bundle(out_dir, seed: int = FIXTURE_SEED,
                      gmm_restarts: int = 8, dense_epochs: int = 8) -> Path:
    """Write mock-backend model artifacts plus a config.toml; returns the
    config path. Identical (seed, versions) inputs produce identical files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    catalog = load_catalog()

    # radiomics branch: synthetic per-class feature clouds
    n_per_class = 20
    centers = rng.normal(0.0, 1.0, size=(3, len(catalog)))
    rows = []
    labels = []
    for c in range(3):
        rows.append(centers[c] + 0.3 * rng.standard_normal((n_per_class, len(catalog))))
        labels.extend([c] * n_per_class)
    matrix = np.vstack(rows)
    y = np.array(labels)

    report = build_selection_report(matrix, y, catalog.names, min_eta=0.01, cap=200)
    save_selection_report(out / "selection.json", report)
    scaler = fit_scaler(matrix[:, report.selected])
    save_scaler(out / "scaler.circa", scaler)

    dense_config = DenseConfig(hidden_widths=(64, 32), epochs=dense_epochs,
                               batch_size=32, seed=seed)
    params, _ = dense_train(scaler.transform(matrix[:, report.selected]), y,
                            dense_config)
    save_dense(out / "dense.circa", params)

    # aggregation tree on synthetic branch-probability vectors
    n_tree = 900
    ty = rng.integers(0, 3, size=n_tree)
    logits = np.eye(3)[ty] * 2.0 + 0.7 * rng.standard_normal((n_tree, 3))
    probs_a = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
    logits_b = np.eye(3)[ty] * 1.5 + 0.9 * rng.standard_normal((n_tree, 3))
    probs_b = np.exp(logits_b) / np.exp(logits_b).sum(axis=1, keepdims=True)
    tree = tree_fit(np.hstack([probs_a, probs_b]), ty, TreeConfig(seed=seed))
    save_tree(out / "tree.circa", tree)

    # embedding map: scaled + PCA-reduced features with 2D class clouds
    embed_features = rng.standard_normal((60, 261))
    embed_scaler = fit_scaler(embed_features)
    save_scaler(out / "embed_scaler.circa", embed_scaler)
    pca = pca_fit(embed_scaler.transform(embed_features), var_fraction=0.90)
    save_pca(out / "pca.circa", pca)
    features_pca = pca_transform(pca, embed_scaler.transform(embed_features))
    class_centers = {"normal": (0.0, 0.0), "pneumonia": (9.0, 0.0),
                     "covid": (0.0, 9.0)}
    coords = np.zeros((60, 2))
    coords_by_class = {}
    for i, (label, center) in enumerate(class_centers.items()):
        block = rng.normal(center, 1.2, size=(20, 2))
        coords[i * 20:(i + 1) * 20] = block
        coords_by_class[label] = block
    artifact_store.save_artifact(out / "embed_map.circa", "embed_map",
                                 {"n_cases": 60},
                                 {"features_pca": features_pca, "coords": coords})
    gmm = gmm_fit(coords_by_class, k=3, restarts=gmm_restarts, reg=0.1, seed=seed)
    save_gmm(out / "gmm.circa", gmm)

    config_path = out / "config.toml"
    config_path.write_text(_CONFIG_TEMPLATE.format(seed=seed), encoding="utf-8")
    write_fixture_png(out / "fixture.png", seed=seed)
    return config_path


def main(argv=None) -> int:
    import sys
    args = sys.argv[1:] if argv is None else argv
    if not args:
        print("usage: python -m circa.testing OUTPUT_DIR [SEED]")
        return 2
    seed = int(args[1]) if len(args) > 1 else FIXTURE_SEED
    config = build_mock_bundle(args[0], seed=seed)
    print(config)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
