import json
import math
from pathlib import Path

import numpy as np
import pytest

from circa.errors import InsufficientClassCases
from circa.imaging.raster import raster_to_png_bytes
from circa.models import MixtureModel, MockQuadrantClassifier, ConstantClassifier
from circa.models.gmm import GmmModel2D
from circa.pipeline import (
    ManifestEntry,
    canonical_json,
    clean_dataset,
    load_config,
    normalize_heatmap,
    occlusion_saliency,
    process_case,
    read_manifest,
    stratified_sample,
    weighted_sample_without_replacement,
    write_manifest,
)
from circa.testing import make_synthetic_cxr

from conftest import GOLDEN_DIR, CountingBackend, make_identity_prob_backend, make_prob_map_backend


class TestCanonicalJson:
    def test_sorted_keys_and_float_format(self):
        doc = {"b": 1.0 / 3.0, "a": 1, "c": [0.1, True, None, "x"]}
        text = canonical_json(doc)
        assert text == '{"a":1,"b":0.333333333,"c":[0.1,true,null,"x"]}'

    def test_drops_timings(self):
        assert canonical_json({"a": 1, "timings": {"x": 2.0}}) == '{"a":1}'

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            canonical_json({"x": math.nan})

    def test_negative_zero_normalized(self):
        assert canonical_json({"x": -0.0}) == '{"x":0}'


class TestConfig:
    def test_load_and_env_override(self, mock_bundle):
        config = load_config(mock_bundle)
        assert config.quality_threshold == 0.5
        assert config.service.tokens == ["test-token"]
        config2 = load_config(mock_bundle, environ={
            "CIRCA_PIPELINE_QUALITY_THRESHOLD": "0.9",
            "CIRCA_SERVICE_PORT": "9100",
            "CIRCA_PIPELINE_SALIENCY_ENABLED": "true",
        })
        assert config2.quality_threshold == 0.9
        assert config2.service.port == 9100
        assert config2.saliency_enabled is True


class TestManifest:
    def test_roundtrip(self, tmp_path):
        entries = [
            ManifestEntry("a", "a.png", label="covid", dataset="alpha",
                          subtype="C1", coords=(1.5, -2.0)),
            ManifestEntry("b", "b.png", dataset="beta", synthetic=True),
        ]
        path = tmp_path / "manifest.jsonl"
        write_manifest(path, entries)
        loaded = read_manifest(path)
        assert loaded == entries


class TestProcessCase:
    def test_golden_result(self, shared_runtime, fixture_png):
        out = process_case(fixture_png, shared_runtime)
        got = canonical_json(out.result.to_dict())
        golden = (GOLDEN_DIR / "pipeline_result.json").read_text().strip()
        assert got == golden

    def test_repeated_runs_identical(self, shared_runtime, fixture_png):
        a = process_case(fixture_png, shared_runtime)
        b = process_case(fixture_png, shared_runtime)
        assert canonical_json(a.result.to_dict()) == canonical_json(b.result.to_dict())

    def test_timings_present_and_nonnegative(self, shared_runtime, fixture_png):
        out = process_case(fixture_png, shared_runtime)
        expected = {"decode", "standardize", "enhance", "resize", "segment",
                    "postprocess", "quality_score", "size_gate", "quality_gate",
                    "build_roi", "image_branch", "radiomics_branch", "aggregate",
                    "embed", "subtype"}
        assert expected <= set(out.result.timings)
        assert all(v >= 0.0 for v in out.result.timings.values())

    def test_no_lung_rejection(self, fresh_runtime, fixture_png):
        fresh_runtime.backends["segmentation"] = make_prob_map_backend(
            np.zeros((512, 512)))
        classifier = CountingBackend(fresh_runtime.backends["image_classifier"])
        fresh_runtime.backends["image_classifier"] = classifier
        out = process_case(fixture_png, fresh_runtime)
        assert out.result.rejection["reason"] == "NoLungFound"
        assert out.result.probabilities is None
        assert out.result.decided_class is None
        assert classifier.calls == 0

    def test_too_small_rejection_with_dimensions(self, fresh_runtime, fixture_png):
        prob = np.zeros((512, 512))
        prob[100:350, 100:350] = 0.9  # 250 px bbox, below the 300 gate
        fresh_runtime.backends["segmentation"] = make_prob_map_backend(prob)
        classifier = CountingBackend(fresh_runtime.backends["image_classifier"])
        fresh_runtime.backends["image_classifier"] = classifier
        out = process_case(fixture_png, fresh_runtime)
        assert out.result.rejection["reason"] == "TooSmall"
        assert out.result.rejection["detail"]["bbox_height"] == 250
        assert out.result.gates["size"]["passed"] is False
        # rejected cases still expose mask and score, but never classify
        assert out.artifacts.mask is not None
        assert out.result.quality is not None
        assert classifier.calls == 0

    def test_low_quality_rejection(self, fresh_runtime, fixture_png):
        fresh_runtime.config.quality_threshold = 0.99
        classifier = CountingBackend(fresh_runtime.backends["image_classifier"])
        fresh_runtime.backends["image_classifier"] = classifier
        out = process_case(fixture_png, fresh_runtime)
        assert out.result.rejection["reason"] == "LowQuality"
        assert out.result.gates["quality"]["passed"] is False
        assert classifier.calls == 0

    def test_gate_order_size_before_quality(self, fresh_runtime, fixture_png):
        # a mask failing BOTH gates must report the size rejection
        prob = np.zeros((512, 512))
        prob[10:120, 10:120] = 0.9
        fresh_runtime.backends["segmentation"] = make_prob_map_backend(prob)
        fresh_runtime.config.quality_threshold = 0.99
        out = process_case(fixture_png, fresh_runtime)
        assert out.result.rejection["reason"] == "TooSmall"

    def test_super_resolution_backend_path(self, fresh_runtime):
        small = make_synthetic_cxr(seed=3, size=256)
        out = process_case(raster_to_png_bytes(small), fresh_runtime)
        assert out.result.sr["applied"] == "backend"
        assert out.result.rejection is None

    def test_super_resolution_fallback(self, fresh_runtime):
        del fresh_runtime.backends["super_resolution"]
        small = make_synthetic_cxr(seed=3, size=256)
        out = process_case(raster_to_png_bytes(small), fresh_runtime)
        assert out.result.sr["applied"] == "fallback"

    def test_saliency_toggle(self, fresh_runtime, fixture_png):
        out = process_case(fixture_png, fresh_runtime, with_saliency=True)
        assert out.artifacts.saliency is not None
        assert out.result.artifacts["saliency"] == "saliency.png"
        assert "saliency" in out.result.timings


class TestCleanDataset:
    def _write_corpus(self, tmp_path):
        """Four good two-lung cases plus one thin low-score shape."""
        paths = []
        for i in range(4):
            img = np.zeros((512, 512))
            img[80:430, 60:210] = 0.9   # 350x150
            img[80:430, 300:450] = 0.9
            p = tmp_path / f"good{i}.png"
            p.write_bytes(raster_to_png_bytes(img))
            paths.append(("good%d" % i, p))
        bad = np.zeros((512, 512))
        bad[100:410, 100:110] = 0.9   # tall sliver
        bad[100:110, 100:410] = 0.9   # wide sliver: bbox 310x310, tiny area
        p = tmp_path / "bad.png"
        p.write_bytes(raster_to_png_bytes(bad))
        paths.append(("bad", p))
        return [ManifestEntry(cid, str(p)) for cid, p in paths]

    def test_low_quality_outlier_removed(self, fresh_runtime, tmp_path):
        fresh_runtime.backends["segmentation"] = make_identity_prob_backend()
        entries = self._write_corpus(tmp_path)
        kept, report = clean_dataset(entries, fresh_runtime)
        assert report.threshold is not None
        rejected = {o.case_id: o for o in report.outcomes if not o.kept}
        assert set(rejected) == {"bad"}
        assert rejected["bad"].reason == "LowQuality"
        assert len(kept) == 4

    def test_identical_corpus_keeps_everything(self, fresh_runtime, tmp_path):
        fresh_runtime.backends["segmentation"] = make_identity_prob_backend()
        img = np.zeros((512, 512))
        img[80:430, 60:210] = 0.9
        img[80:430, 300:450] = 0.9
        entries = []
        for i in range(6):
            p = tmp_path / f"case{i}.png"
            p.write_bytes(raster_to_png_bytes(img))
            entries.append(ManifestEntry(f"case{i}", str(p)))
        kept, report = clean_dataset(entries, fresh_runtime)
        assert len(kept) == 6
        assert all(o.kept for o in report.outcomes)

    def test_per_case_errors_do_not_abort(self, fresh_runtime, tmp_path):
        fresh_runtime.backends["segmentation"] = make_identity_prob_backend()
        entries = self._write_corpus(tmp_path)
        entries.append(ManifestEntry("missing", str(tmp_path / "nope.png")))
        black = tmp_path / "black.png"
        black.write_bytes(raster_to_png_bytes(np.zeros((512, 512))))
        entries.append(ManifestEntry("black", str(black)))
        kept, report = clean_dataset(entries, fresh_runtime)
        outcomes = {o.case_id: o for o in report.outcomes}
        assert outcomes["missing"].reason == "error"
        assert outcomes["black"].reason == "error"  # NoLungFound inside
        assert len(kept) == 4


def _manual_gmm():
    """Well separated components at x = 0, 30, 60 for the normal class."""
    mix = MixtureModel(
        weights=np.array([1 / 3, 1 / 3, 1 / 3]),
        means=np.array([[0.0, 0.0], [30.0, 0.0], [60.0, 0.0]]),
        covs=np.tile(np.eye(2), (3, 1, 1)), reg=0.0)
    return GmmModel2D(mixtures={"normal": mix})


class TestStratifiedSample:
    def test_exhaustion_takes_all(self):
        gmm = _manual_gmm()
        entries = [ManifestEntry(f"c{i}", label="normal", dataset="d",
                                 coords=(float(i % 3) * 30.0, 0.0))
                   for i in range(9)]
        holdout, train = stratified_sample(entries, gmm, per_cell=3, seed=1)
        assert len(holdout) == 9
        assert train == []

    def test_partition_property(self):
        rng = np.random.default_rng(5)
        gmm = _manual_gmm()
        entries = [ManifestEntry(f"c{i}", label="normal", dataset="d",
                                 coords=(rng.choice([0.0, 30.0, 60.0]) + rng.normal(0, 1), rng.normal(0, 1)))
                   for i in range(60)]
        holdout, train = stratified_sample(entries, gmm, per_cell=5, seed=2)
        ids = {e.case_id for e in entries}
        h = {e.case_id for e in holdout}
        t = {e.case_id for e in train}
        assert h | t == ids
        assert h & t == set()
        assert len(holdout) == 15

    def test_density_weighting_monte_carlo(self):
        gmm = _manual_gmm()
        r = math.sqrt(2.0 * math.log(9.0))  # density ratio 9:1 at this radius
        base = [
            ManifestEntry("hot", label="normal", dataset="d", coords=(0.0, 0.0)),
            ManifestEntry("cold", label="normal", dataset="d", coords=(r, 0.0)),
            ManifestEntry("n2", label="normal", dataset="d", coords=(30.0, 0.0)),
            ManifestEntry("n3", label="normal", dataset="d", coords=(60.0, 0.0)),
        ]
        hits = 0
        trials = 3000
        for seed in range(trials):
            holdout, _ = stratified_sample(base, gmm, per_cell=1, seed=seed)
            chosen = {e.case_id for e in holdout}
            assert {"n2", "n3"} <= chosen
            assert len(chosen) == 3
            if "hot" in chosen:
                hits += 1
        assert hits / trials == pytest.approx(0.9, abs=0.02)

    def test_deficit_redistribution(self):
        gmm = _manual_gmm()
        entries = []
        for i in range(10):
            entries.append(ManifestEntry(f"a{i}", label="normal", dataset="d",
                                         coords=(0.0 + 0.01 * i, 0.0)))
        for i in range(100):
            entries.append(ManifestEntry(f"b{i}", label="normal", dataset="d",
                                         coords=(30.0 + 0.01 * i, 0.0)))
        for i in range(100):
            entries.append(ManifestEntry(f"c{i}", label="normal", dataset="d",
                                         coords=(60.0 + 0.01 * i, 0.0)))
        holdout, _ = stratified_sample(entries, gmm, per_cell=50, seed=3)
        assert len(holdout) == 150  # class total preserved via redistribution
        by_sub = {"a": 0, "b": 0, "c": 0}
        for e in holdout:
            by_sub[e.case_id[0]] += 1
        assert by_sub["a"] == 10
        assert by_sub["b"] + by_sub["c"] == 140

    def test_insufficient_class_cases(self):
        gmm = _manual_gmm()
        entries = [ManifestEntry(f"c{i}", label="normal", dataset="d",
                                 coords=(0.0, 0.0)) for i in range(20)]
        with pytest.raises(InsufficientClassCases):
            stratified_sample(entries, gmm, per_cell=50, seed=0)

    def test_weighted_draw_helper(self):
        rng = np.random.default_rng(0)
        counts = np.zeros(2)
        for _ in range(10000):
            idx = weighted_sample_without_replacement(rng, np.array([0.9, 0.1]), 1)
            counts[idx[0]] += 1
        assert counts[0] / 10000 == pytest.approx(0.9, abs=0.02)


class TestOcclusionSaliency:
    def test_constant_classifier_zero_heat(self):
        heat = occlusion_saliency(np.random.default_rng(0).random((512, 512)),
                                  ConstantClassifier((0.5, 0.3, 0.2)),
                                  patch=128, stride=128, target_class=0)
        assert np.all(heat == 0.0)
        assert np.all(normalize_heatmap(heat) == 0.0)

    def test_quadrant_mass_concentrated(self):
        rng = np.random.default_rng(1)
        image = np.clip(rng.random((512, 512)) * 0.5 + 0.25, 0, 1)
        classifier = MockQuadrantClassifier(row_range=(0, 256), col_range=(0, 256))
        heat = occlusion_saliency(image, classifier, patch=64, stride=64,
                                  target_class=0)
        assert heat.shape == (8, 8)
        total = heat.clip(min=0).sum()
        inside = heat[:4, :4].clip(min=0).sum()
        assert inside >= 0.8 * total

    def test_full_image_patch_single_cell(self):
        image = np.clip(np.random.default_rng(2).random((512, 512)), 0, 1)
        classifier = MockQuadrantClassifier(row_range=(0, 512), col_range=(0, 512))
        heat = occlusion_saliency(image, classifier, patch=512, stride=512,
                                  target_class=0)
        assert heat.shape == (1, 1)
        from circa.models import run_inference
        baseline = run_inference(classifier, image)[0]
        floor = run_inference(classifier, np.zeros((512, 512)))[0]
        assert heat[0, 0] == pytest.approx(baseline - floor, abs=1e-12)
