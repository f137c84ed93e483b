"""Batch and operations entry point.

Exit codes: 0 success, 1 business rejection (e.g. all cases filtered or a
gated prediction), 2 usage error, 3 runtime failure.
"""

from __future__ import annotations

import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from .errors import CircaError
from .models import (
    DenseConfig,
    dense_train,
    gmm_fit,
    pca_fit,
    pca_transform,
    save_dense,
    save_gmm,
    save_pca,
    save_tree,
    tree_fit,
)
from .models.gmm import CLASS_LABELS
from .models.tree import TreeConfig
from .pipeline import (
    PipelineRuntime,
    canonical_json,
    clean_dataset,
    load_config,
    normalize_heatmap,
    occlusion_saliency,
    process_case,
    read_manifest,
    stratified_sample,
    write_manifest,
)
from .radiomics import (
    build_selection_report,
    extract_case_features,
    fit_scaler,
    load_catalog,
    save_scaler,
)
from .radiomics.io import (
    load_matrix_csv,
    load_selection_report,
    save_matrix_binary,
    save_matrix_csv,
    save_selection_report,
)
from .segmentation import build_roi, lung_trisection, too_small_check
from .pipeline.run import segmentation_stage


class BusinessReject(Exception):
    """Run completed but the business outcome is a rejection."""


def _parse_floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(","))


def _parse_ints(text: str) -> tuple:
    return tuple(int(v) for v in text.split(","))


def _label_to_index(label: str) -> int:
    try:
        return CLASS_LABELS.index(label)
    except ValueError:
        raise click.UsageError(
            f"label {label!r} must be one of {', '.join(CLASS_LABELS)}") from None


def _read_labels_csv(path):
    """id,label rows (with or without header) or a bare label column."""
    import csv
    ids, labels = [], []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            if row[-1] == "label":  # header
                continue
            if len(row) == 1:
                ids.append(None)
                labels.append(row[0])
            else:
                ids.append(row[0])
                labels.append(row[-1])
    return ids, labels


@click.group(name="circa")
def cli() -> None:
    """Chest X-ray triage engine: cleaning, training, evaluation, serving."""


@cli.command()
@click.option("--manifest", required=True, type=click.Path(exists=True),
              help="Input JSONL manifest.")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="Pipeline config TOML.")
@click.option("--out", required=True, type=click.Path(),
              help="Cleaned manifest output path.")
@click.option("--report", type=click.Path(), default=None, show_default=True,
              help="Rejection report JSON path.")
@click.option("--jobs", default=1, show_default=True, help="Parallel workers.")
def clean(manifest, config_path, out, report, jobs):
    """Remove too-small and poor-segmentation cases from a corpus."""
    runtime = PipelineRuntime.load(load_config(config_path))
    entries = read_manifest(manifest)
    kept, clean_report = clean_dataset(entries, runtime, jobs=jobs)
    write_manifest(out, kept)
    if report:
        Path(report).write_text(json.dumps(clean_report.to_dict(), indent=1),
                                encoding="utf-8")
    click.echo(f"kept {len(kept)} of {len(entries)} cases "
               f"(quality fence: {clean_report.threshold})")
    if entries and not kept:
        raise BusinessReject("all cases were filtered out")


@cli.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path(), help="Feature CSV path.")
@click.option("--binary", type=click.Path(), default=None, show_default=True,
              help="Optional binary column-store path.")
@click.option("--bin-width", default=0.05, show_default=True)
@click.option("--jobs", default=1, show_default=True)
def features(manifest, config_path, out, binary, bin_width, jobs):
    """Extract the 261 radiomic features per case."""
    runtime = PipelineRuntime.load(load_config(config_path))
    entries = read_manifest(manifest)
    catalog = load_catalog()

    def work(entry):
        try:
            data = Path(entry.path).read_bytes()
            seg_input, mask, _, _ = segmentation_stage(data, runtime)
            if not too_small_check(mask, min_dim=runtime.config.min_lung_dim):
                return entry, None, "TooSmall"
            roi = build_roi(seg_input, mask, train_stats=runtime.train_stats,
                            low_q=runtime.config.roi_low,
                            high_q=runtime.config.roi_high,
                            min_gap=runtime.config.min_lung_gap)
            fv = extract_case_features(roi, lung_trisection(roi.mask),
                                       bin_width=bin_width)
            return entry, fv.values, None
        except (CircaError, OSError) as exc:
            return entry, None, f"{type(exc).__name__}: {exc}"

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, entries))
    else:
        results = [work(e) for e in entries]

    ids, rows, labels = [], [], []
    for entry, values, err in results:
        if err is not None:
            click.echo(f"skip {entry.case_id}: {err}", err=True)
            continue
        ids.append(entry.case_id)
        rows.append(values)
        labels.append(entry.label or "")
    if not rows:
        raise BusinessReject("no case yielded features")
    matrix = np.vstack(rows)
    save_matrix_csv(out, ids, matrix, catalog.names, labels)
    if binary:
        save_matrix_binary(binary, ids, matrix, catalog.names, labels,
                           meta={"bin_width": bin_width})
    click.echo(f"extracted {len(ids)} cases x {matrix.shape[1]} features")


@cli.command(name="select-features")
@click.option("--features", "features_path", required=True,
              type=click.Path(exists=True), help="Feature CSV with labels.")
@click.option("--out", required=True, type=click.Path(),
              help="Selection report JSON path.")
@click.option("--min-eta", default=0.01, show_default=True,
              help="Minimum effect size.")
@click.option("--cap", default=200, show_default=True,
              help="Maximum retained features.")
def select_features_cmd(features_path, out, min_eta, cap):
    """Rank features by Kruskal-Wallis effect size and select a subset."""
    ids, labels, matrix, names = load_matrix_csv(features_path)
    if labels is None:
        raise click.UsageError("feature CSV lacks a label column")
    y = np.array([_label_to_index(v) for v in labels])
    report = build_selection_report(matrix, y, names, min_eta=min_eta, cap=cap)
    save_selection_report(out, report)
    click.echo(f"selected {len(report.selected)} of {matrix.shape[1]} features")


@cli.command(name="train-dense")
@click.option("--features", "features_path", required=True,
              type=click.Path(exists=True), help="Feature CSV with labels.")
@click.option("--selection", required=True, type=click.Path(exists=True),
              help="Selection report JSON.")
@click.option("--model-out", required=True, type=click.Path())
@click.option("--scaler-out", required=True, type=click.Path())
@click.option("--hidden", default="1024,512,256,128,64,32", show_default=True,
              help="Hidden layer widths.")
@click.option("--epochs", default=50, show_default=True)
@click.option("--batch-size", default=128, show_default=True)
@click.option("--lr", default=0.001, show_default=True)
@click.option("--dropout", default=0.2, show_default=True)
@click.option("--l2", default=1e-4, show_default=True)
@click.option("--class-weights", default="0.1,0.3,0.9", show_default=True)
@click.option("--seed", default=0, show_default=True)
def train_dense_cmd(features_path, selection, model_out, scaler_out, hidden,
                    epochs, batch_size, lr, dropout, l2, class_weights, seed):
    """Train the dense radiomics classifier on selected features."""
    ids, labels, matrix, names = load_matrix_csv(features_path)
    if labels is None:
        raise click.UsageError("feature CSV lacks a label column")
    y = np.array([_label_to_index(v) for v in labels])
    report = load_selection_report(selection)
    selected = matrix[:, report.selected]
    scaler = fit_scaler(selected)
    save_scaler(scaler_out, scaler, meta={"selection_size": len(report.selected)})
    config = DenseConfig(hidden_widths=_parse_ints(hidden), epochs=epochs,
                         batch_size=batch_size, learning_rate=lr,
                         dropout=dropout, l2=l2,
                         class_weights=_parse_floats(class_weights), seed=seed)
    params, history = dense_train(scaler.transform(selected), y, config)
    save_dense(model_out, params, meta={"seed": seed, "epochs": epochs})
    click.echo(f"loss {history.initial_loss:.4f} -> {history.epoch_loss[-1]:.4f}")


@cli.command(name="train-tree")
@click.option("--features", "features_path", required=True,
              type=click.Path(exists=True),
              help="CSV of the six branch probabilities.")
@click.option("--labels", "labels_path", required=True,
              type=click.Path(exists=True), help="CSV of case labels.")
@click.option("--out", required=True, type=click.Path())
@click.option("--max-depth", default=7, show_default=True)
@click.option("--min-leaf", default=100, show_default=True)
@click.option("--features-per-split", default=3, show_default=True)
@click.option("--class-weights", default="0.1,0.3,0.9", show_default=True)
@click.option("--seed", default=0, show_default=True)
def train_tree_cmd(features_path, labels_path, out, max_depth, min_leaf,
                   features_per_split, class_weights, seed):
    """Train the aggregation decision tree."""
    ids, _, matrix, _ = load_matrix_csv(features_path)
    _, labels = _read_labels_csv(labels_path)
    if len(labels) != len(ids):
        raise click.UsageError(
            f"{len(ids)} feature rows but {len(labels)} labels")
    y = np.array([_label_to_index(v) for v in labels])
    config = TreeConfig(max_depth=max_depth, min_leaf=min_leaf,
                        features_per_split=features_per_split,
                        class_weights=_parse_floats(class_weights), seed=seed)
    model = tree_fit(matrix, y, config)
    save_tree(out, model, meta={"seed": seed})
    click.echo(f"tree depth {model.depth()}, {len(model.leaves())} leaves")


@cli.command(name="fit-gmm")
@click.option("--coords", "coords_path", required=True,
              type=click.Path(exists=True), help="CSV: id,label,x,y.")
@click.option("--out", required=True, type=click.Path())
@click.option("--k", default=3, show_default=True)
@click.option("--restarts", default=100, show_default=True)
@click.option("--reg", default=0.1, show_default=True)
@click.option("--seed", default=0, show_default=True)
def fit_gmm_cmd(coords_path, out, k, restarts, reg, seed):
    """Fit the per-class 2D mixtures to embedding coordinates."""
    import csv
    by_class: dict = {}
    with open(coords_path, "r", newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0] == "id":
                continue
            _, label, x, y = row[:4]
            by_class.setdefault(label, []).append([float(x), float(y)])
    model = gmm_fit({k2: np.array(v) for k2, v in by_class.items()},
                    k=k, restarts=restarts, reg=reg, seed=seed)
    save_gmm(out, model, meta={"seed": seed})
    for label, mix in model.mixtures.items():
        click.echo(f"{label}: BIC {mix.bic:.2f}")


@cli.command(name="fit-pca")
@click.option("--features", "features_path", required=True,
              type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--scaler-out", required=True, type=click.Path(),
              help="Embedding feature scaler path.")
@click.option("--var-fraction", default=0.90, show_default=True)
def fit_pca_cmd(features_path, out, scaler_out, var_fraction):
    """Scale features and fit the retained-variance PCA."""
    ids, _, matrix, _ = load_matrix_csv(features_path)
    scaler = fit_scaler(matrix)
    save_scaler(scaler_out, scaler)
    model = pca_fit(scaler.transform(matrix), var_fraction=var_fraction)
    save_pca(out, model)
    click.echo(f"retained {model.n_components} components")


@cli.command()
@click.option("--manifest", required=True, type=click.Path(exists=True),
              help="Manifest with labels and 2D coords.")
@click.option("--gmm", "gmm_path", required=True, type=click.Path(exists=True))
@click.option("--out-holdout", required=True, type=click.Path())
@click.option("--out-train", required=True, type=click.Path())
@click.option("--per-cell", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
def split(manifest, gmm_path, out_holdout, out_train, per_cell, seed):
    """Density-guided stratified holdout/train split."""
    from .models import load_gmm
    entries = read_manifest(manifest)
    gmm = load_gmm(gmm_path)
    holdout, train = stratified_sample(entries, gmm, per_cell=per_cell, seed=seed)
    write_manifest(out_holdout, holdout)
    write_manifest(out_train, train)
    click.echo(f"holdout {len(holdout)}, train {len(train)}")


@cli.command()
@click.option("--image", "image_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--format", "format_hint", default=None, show_default=True,
              help="png, jpeg, or dicom (sniffed when omitted).")
@click.option("--saliency/--no-saliency", "with_saliency", default=None,
              help="Override the config's saliency toggle.")
def predict(image_path, config_path, format_hint, with_saliency):
    """Run one image through the pipeline; prints the result JSON."""
    runtime = PipelineRuntime.load(load_config(config_path))
    data = Path(image_path).read_bytes()
    out = process_case(data, runtime, format_hint=format_hint,
                       with_saliency=with_saliency)
    click.echo(canonical_json(out.result.to_dict()))
    if out.result.rejection is not None:
        raise BusinessReject(out.result.rejection["reason"])


@cli.command()
@click.option("--predictions", required=True, type=click.Path(exists=True),
              help="JSONL: {\"id\":..., \"predicted\":...} per line.")
@click.option("--truth", required=True, type=click.Path(exists=True),
              help="Truth manifest JSONL with labels/subtypes/datasets.")
@click.option("--out", required=True, type=click.Path(), help="Report JSON.")
@click.option("--csv", "csv_path", type=click.Path(), default=None,
              show_default=True, help="Flat CSV report.")
def evaluate(predictions, truth, out, csv_path):
    """Per-subtype and weighted per-class evaluation."""
    from .metrics import TruthEntry, evaluate_manifest
    preds = {}
    with open(predictions, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                doc = json.loads(line)
                preds[doc["id"]] = doc["predicted"]
    entries = read_manifest(truth)
    truths = [TruthEntry(case_id=e.case_id, label=e.label, subtype=e.subtype,
                         dataset=e.dataset) for e in entries]
    report = evaluate_manifest(preds, truths)
    report.write_json(out)
    if csv_path:
        report.write_csv(csv_path)
    click.echo(f"evaluated {report.pooled.total()} cases")


@cli.command()
@click.option("--image", "image_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path(), help="Heatmap PNG path.")
@click.option("--patch", default=64, show_default=True)
@click.option("--stride", default=64, show_default=True)
@click.option("--target", default="auto", show_default=True,
              help="normal, pneumonia, covid, or auto (decided class).")
def saliency(image_path, config_path, out, patch, stride, target):
    """Occlusion saliency for one image."""
    from .imaging.raster import raster_to_png_bytes
    runtime = PipelineRuntime.load(load_config(config_path))
    data = Path(image_path).read_bytes()
    outcome = process_case(data, runtime, with_saliency=False)
    if outcome.result.rejection is not None:
        raise BusinessReject(outcome.result.rejection["reason"])
    if target == "auto":
        target_idx = int(np.argmax([outcome.result.probabilities[c]
                                    for c in CLASS_LABELS]))
    else:
        target_idx = _label_to_index(target)
    seg_input, mask, _, _ = segmentation_stage(data, runtime)
    roi = build_roi(seg_input, mask, train_stats=runtime.train_stats,
                    low_q=runtime.config.roi_low, high_q=runtime.config.roi_high,
                    min_gap=runtime.config.min_lung_gap)
    heat = occlusion_saliency(roi.pixels, runtime.backends["image_classifier"],
                              patch=patch, stride=stride, target_class=target_idx)
    Path(out).write_bytes(raster_to_png_bytes(normalize_heatmap(heat)))
    click.echo(f"wrote {out}")


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--host", default=None, help="Override the config host.")
@click.option("--port", default=None, type=int, help="Override the config port.")
def serve(config_path, host, port):
    """Serve the HTTP API (and the web UI bundle when configured)."""
    import uvicorn

    from .service import create_app
    config = load_config(config_path)
    app = create_app(config_path)
    uvicorn.run(app, host=host or config.service.host,
                port=port or config.service.port, log_level="info")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show()
        return 2
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        return 2
    except BusinessReject as exc:
        click.echo(f"rejected: {exc}", err=True)
        return 1
    except Exception as exc:  # runtime failure contract
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
