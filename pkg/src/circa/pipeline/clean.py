"""Corpus cleaning: size gate plus the corpus-derived quality fence."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import CircaError, TooFewSamples
from ..segmentation import skewed_outlier_threshold, too_small_check
from .run import PipelineRuntime, segmentation_stage


@dataclass
class CaseCleanOutcome:
    case_id: str
    kept: bool
    reason: str | None = None
    score: float | None = None
    error: str | None = None


@dataclass
class CleanReport:
    threshold: float | None
    outcomes: list = field(default_factory=list)

    @property
    def kept_ids(self):
        return [o.case_id for o in self.outcomes if o.kept]

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "kept": sum(1 for o in self.outcomes if o.kept),
            "rejected": [
                {"id": o.case_id, "reason": o.reason, "score": o.score,
                 "error": o.error}
                for o in self.outcomes if not o.kept
            ],
        }


def _score_case(entry, runtime: PipelineRuntime):
    data = Path(entry.path).read_bytes()
    _, mask, score, _ = segmentation_stage(data, runtime)
    size_ok = too_small_check(mask, min_dim=runtime.config.min_lung_dim)
    return size_ok, score.value


def clean_dataset(entries, runtime: PipelineRuntime, jobs: int = 1):
    """Segmentation-score every case, derive the outlier fence, filter.

    Per-case failures are recorded as rejections and never abort the
    corpus. Returns (kept entries, CleanReport); the report carries the
    corpus quality threshold for later serving-time gating.
    """
    entries = list(entries)
    results = {}

    def work(entry):
        try:
            return entry.case_id, _score_case(entry, runtime), None
        except CircaError as exc:
            return entry.case_id, None, f"{type(exc).__name__}: {exc}"
        except OSError as exc:
            return entry.case_id, None, f"unreadable: {exc}"

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            raw = list(pool.map(work, entries))
    else:
        raw = [work(e) for e in entries]
    for case_id, ok, err in raw:
        results[case_id] = (ok, err)

    scores = [ok[1] for ok, err in results.values() if err is None and ok[0]]
    threshold = None
    if len(scores) >= 4:
        try:
            threshold = skewed_outlier_threshold(scores)
        except TooFewSamples:
            threshold = None

    report = CleanReport(threshold=threshold)
    kept_entries = []
    for entry in entries:
        ok, err = results[entry.case_id]
        if err is not None:
            report.outcomes.append(CaseCleanOutcome(
                case_id=entry.case_id, kept=False, reason="error", error=err))
            continue
        size_ok, score = ok
        if not size_ok:
            report.outcomes.append(CaseCleanOutcome(
                case_id=entry.case_id, kept=False, reason="TooSmall", score=score))
            continue
        if threshold is not None and score < threshold:
            report.outcomes.append(CaseCleanOutcome(
                case_id=entry.case_id, kept=False, reason="LowQuality", score=score))
            continue
        report.outcomes.append(CaseCleanOutcome(
            case_id=entry.case_id, kept=True, score=score))
        kept_entries.append(entry)
    return kept_entries, report
