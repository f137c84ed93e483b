import csv
import json
import os
from pathlib import Path

import numpy as np
import pytest

os.environ["COLUMNS"] = "100"  # stable click help formatting

from circa.artifacts import load_artifact
from circa.cli import main
from circa.imaging.raster import raster_to_png_bytes
from circa.pipeline import ManifestEntry, write_manifest
from circa.testing import make_synthetic_cxr

from conftest import GOLDEN_DIR

SUBCOMMANDS = ["clean", "features", "select-features", "train-dense",
               "train-tree", "fit-gmm", "fit-pca", "split", "predict",
               "evaluate", "saliency", "serve"]


def _collect_help():
    import click
    from circa.cli import cli
    chunks = []
    for args in [[]] + [[name] for name in SUBCOMMANDS]:
        ctx = click.Context(cli, info_name="circa")
        if args:
            cmd = cli.get_command(ctx, args[0])
            sub = click.Context(cmd, info_name=f"circa {args[0]}", parent=ctx)
            chunks.append(cmd.get_help(sub))
        else:
            chunks.append(cli.get_help(ctx))
    return ("\n" + "=" * 72 + "\n").join(chunks) + "\n"


class TestHelp:
    def test_help_snapshot(self):
        golden = (GOLDEN_DIR / "cli_help.txt").read_text()
        assert _collect_help() == golden

    def test_every_subcommand_registered(self, capsys):
        assert main(["--help"]) == 0
        out = capsys.readouterr().out
        for name in SUBCOMMANDS:
            assert name in out


class TestExitCodes:
    def test_unknown_subcommand_usage_error(self, capsys):
        assert main(["frobnicate"]) == 2
        assert "No such command" in capsys.readouterr().err

    def test_missing_required_option(self, capsys):
        assert main(["predict"]) == 2

    def test_runtime_failure_is_exit_3(self, tmp_path, capsys):
        cfg = tmp_path / "broken.toml"
        cfg.write_text('[artifacts]\ndense = "missing.circa"\n')
        img = tmp_path / "img.png"
        img.write_bytes(raster_to_png_bytes(np.zeros((64, 64))))
        assert main(["predict", "--image", str(img), "--config", str(cfg)]) == 3
        assert "error:" in capsys.readouterr().err


class TestPredict:
    def test_golden_stdout(self, mock_bundle, capsys):
        fixture = mock_bundle.parent / "fixture.png"
        code = main(["predict", "--image", str(fixture),
                     "--config", str(mock_bundle)])
        out = capsys.readouterr().out
        assert code == 0
        golden = (GOLDEN_DIR / "pipeline_result.json").read_text().strip()
        assert out.strip() == golden

    def test_rejection_exits_one(self, tmp_path, mock_bundle, capsys):
        bundle_dir = mock_bundle.parent
        text = mock_bundle.read_text().replace(
            'segmentation = "mock_segmentation"',
            'segmentation = "identity_segmentation"')
        cfg = tmp_path / "config.toml"
        cfg.write_text(text.replace('= "', f'= "{bundle_dir}/').replace(
            f'= "{bundle_dir}/mock', '= "mock').replace(
            f'= "{bundle_dir}/identity', '= "identity'))
        black = tmp_path / "black.png"
        black.write_bytes(raster_to_png_bytes(np.zeros((512, 512))))
        code = main(["predict", "--image", str(black), "--config", str(cfg)])
        captured = capsys.readouterr()
        assert code == 1
        assert "NoLungFound" in captured.out or "NoLungFound" in captured.err


class TestTrainTree:
    def _write_inputs(self, tmp_path):
        rng = np.random.default_rng(7)
        n = 600
        y = rng.integers(0, 3, size=n)
        logits = np.eye(3)[y] * 2 + rng.standard_normal((n, 3)) * 0.5
        pa = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
        pb = np.clip(pa + rng.normal(0, 0.05, size=pa.shape), 0.01, None)
        pb = pb / pb.sum(axis=1, keepdims=True)
        feats = tmp_path / "probs.csv"
        with open(feats, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id"] + [f"p{i}" for i in range(6)])
            for i in range(n):
                w.writerow([f"c{i}"] + [repr(float(v))
                                        for v in np.concatenate([pa[i], pb[i]])])
        labels = tmp_path / "labels.csv"
        names = ["normal", "pneumonia", "covid"]
        with open(labels, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "label"])
            for i in range(n):
                w.writerow([f"c{i}", names[y[i]]])
        return feats, labels

    def test_seeded_runs_byte_identical(self, tmp_path, capsys):
        feats, labels = self._write_inputs(tmp_path)
        for out_name in ("t1.circa", "t2.circa"):
            code = main(["train-tree", "--features", str(feats),
                         "--labels", str(labels), "--seed", "7",
                         "--out", str(tmp_path / out_name)])
            assert code == 0
        b1 = (tmp_path / "t1.circa").read_bytes()
        b2 = (tmp_path / "t2.circa").read_bytes()
        assert b1 == b2
        model = load_artifact(tmp_path / "t1.circa", expect_kind="decision_tree")
        assert model.meta["config"]["max_depth"] == 7


class TestWorkflow:
    """End-to-end CLI flow over a tiny synthetic corpus."""

    @pytest.fixture(scope="class")
    def corpus(self, tmp_path_factory, mock_bundle):
        tmp = tmp_path_factory.mktemp("corpus")
        entries = []
        labels = ["normal", "pneumonia", "covid"]
        for i in range(6):
            img = make_synthetic_cxr(seed=100 + i, size=560)
            p = tmp / f"case{i}.png"
            p.write_bytes(raster_to_png_bytes(img))
            entries.append(ManifestEntry(f"case{i}", str(p), label=labels[i % 3],
                                         dataset="demo"))
        manifest = tmp / "manifest.jsonl"
        write_manifest(manifest, entries)
        return tmp, manifest

    def test_clean_features_select_train(self, corpus, mock_bundle, capsys):
        tmp, manifest = corpus
        cleaned = tmp / "cleaned.jsonl"
        report = tmp / "clean_report.json"
        assert main(["clean", "--manifest", str(manifest), "--config",
                     str(mock_bundle), "--out", str(cleaned),
                     "--report", str(report)]) == 0
        assert json.loads(report.read_text())["kept"] == 6

        feats = tmp / "features.csv"
        assert main(["features", "--manifest", str(cleaned), "--config",
                     str(mock_bundle), "--out", str(feats),
                     "--binary", str(tmp / "features.circa")]) == 0
        header = feats.read_text().splitlines()[0].split(",")
        assert len(header) == 2 + 261  # id, label, catalog columns

        selection = tmp / "selection.json"
        assert main(["select-features", "--features", str(feats),
                     "--out", str(selection), "--min-eta", "0.0"]) == 0

        assert main(["train-dense", "--features", str(feats), "--selection",
                     str(selection), "--model-out", str(tmp / "dense.circa"),
                     "--scaler-out", str(tmp / "scaler.circa"),
                     "--hidden", "8,4", "--epochs", "2", "--batch-size", "4",
                     "--seed", "1"]) == 0
        assert (tmp / "dense.circa").exists()

        assert main(["fit-pca", "--features", str(feats), "--out",
                     str(tmp / "pca.circa"), "--scaler-out",
                     str(tmp / "embed_scaler.circa")]) == 0

    def test_fit_gmm_split_evaluate(self, corpus, capsys):
        tmp, _ = corpus
        rng = np.random.default_rng(11)
        coords = tmp / "coords.csv"
        centers = {"normal": (0, 0), "pneumonia": (10, 0), "covid": (0, 10)}
        rows = []
        with open(coords, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "label", "x", "y"])
            i = 0
            for label, c in centers.items():
                for _ in range(12):
                    x, y = (float(v) for v in rng.normal(c, 1.0))
                    w.writerow([f"g{i}", label, repr(x), repr(y)])
                    rows.append((f"g{i}", label, x, y))
                    i += 1
        gmm_path = tmp / "gmm.circa"
        assert main(["fit-gmm", "--coords", str(coords), "--out", str(gmm_path),
                     "--restarts", "5", "--seed", "3"]) == 0

        entries = [ManifestEntry(cid, label=label, dataset="demo",
                                 coords=(x, y)) for cid, label, x, y in rows]
        split_manifest = tmp / "split_input.jsonl"
        write_manifest(split_manifest, entries)
        assert main(["split", "--manifest", str(split_manifest), "--gmm",
                     str(gmm_path), "--out-holdout", str(tmp / "holdout.jsonl"),
                     "--out-train", str(tmp / "train.jsonl"),
                     "--per-cell", "2", "--seed", "5"]) == 0
        from circa.pipeline import read_manifest
        holdout = read_manifest(tmp / "holdout.jsonl")
        train = read_manifest(tmp / "train.jsonl")
        assert len(holdout) + len(train) == len(entries)
        assert len(holdout) == 18  # 3 classes x 3 subtypes x 2 per cell

        truth = tmp / "truth.jsonl"
        truth_entries = [ManifestEntry(cid, label=label, dataset="demo",
                                       subtype=f"{label[0].upper()}1".replace("N1", "N1"))
                         for cid, label, _, _ in rows]
        for e in truth_entries:
            e.subtype = {"normal": "N1", "pneumonia": "P1",
                         "covid": "C1"}[e.label]
        write_manifest(truth, truth_entries)
        preds = tmp / "preds.jsonl"
        with open(preds, "w") as fh:
            for e in truth_entries:
                fh.write(json.dumps({"id": e.case_id, "predicted": e.label}) + "\n")
        assert main(["evaluate", "--predictions", str(preds), "--truth",
                     str(truth), "--out", str(tmp / "report.json"),
                     "--csv", str(tmp / "report.csv")]) == 0
        report = json.loads((tmp / "report.json").read_text())
        assert report["classes"]["demo/covid"]["sensitivity"] == 1.0

    def test_all_filtered_is_business_rejection(self, tmp_path, mock_bundle,
                                                capsys):
        bundle_dir = mock_bundle.parent
        text = mock_bundle.read_text().replace(
            'segmentation = "mock_segmentation"',
            'segmentation = "identity_segmentation"')
        cfg = tmp_path / "config.toml"
        cfg.write_text(text.replace('= "', f'= "{bundle_dir}/').replace(
            f'= "{bundle_dir}/mock', '= "mock').replace(
            f'= "{bundle_dir}/identity', '= "identity'))
        black = tmp_path / "black.png"
        black.write_bytes(raster_to_png_bytes(np.zeros((512, 512))))
        manifest = tmp_path / "m.jsonl"
        write_manifest(manifest, [ManifestEntry("b1", str(black)),
                                  ManifestEntry("b2", str(black))])
        code = main(["clean", "--manifest", str(manifest), "--config", str(cfg),
                     "--out", str(tmp_path / "out.jsonl")])
        assert code == 1


class TestSaliency:
    def test_writes_heatmap_png(self, tmp_path, mock_bundle, capsys):
        fixture = mock_bundle.parent / "fixture.png"
        out = tmp_path / "heat.png"
        code = main(["saliency", "--image", str(fixture), "--config",
                     str(mock_bundle), "--out", str(out),
                     "--patch", "256", "--stride", "256"])
        assert code == 0
        assert out.exists()
        from PIL import Image
        with Image.open(out) as im:
            assert im.size == (2, 2)
