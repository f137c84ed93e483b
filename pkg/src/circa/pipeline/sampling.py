"""Density-guided stratified holdout sampling."""

from __future__ import annotations

import numpy as np

from ..errors import InsufficientClassCases
from ..models.gmm import CLASS_LABELS, GmmModel2D, _log_gauss_2d, gmm_predict_subtype


def component_density(mixture, comp_idx: int, point) -> float:
    """Unweighted Gaussian density of one mixture component at a point."""
    pt = np.asarray(point, dtype=np.float64).reshape(1, 2)
    return float(np.exp(_log_gauss_2d(pt, mixture.means[comp_idx],
                                      mixture.covs[comp_idx]))[0])


def weighted_sample_without_replacement(rng, weights: np.ndarray, k: int):
    """Sequential draws with probability proportional to weight."""
    weights = np.asarray(weights, dtype=np.float64).copy()
    if (weights < 0).any():
        raise ValueError("weights must be non-negative")
    chosen = []
    available = list(range(weights.size))
    for _ in range(min(k, weights.size)):
        w = weights[available]
        total = w.sum()
        probs = w / total if total > 0 else np.full(len(available), 1 / len(available))
        pick = int(rng.choice(len(available), p=probs))
        chosen.append(available.pop(pick))
    return chosen


def _allocate_deficit(quotas: dict, capacities: dict, class_quota: int,
                      order) -> dict:
    """Redistribute unfilled quota proportionally to the remaining cell
    sizes, deterministically (largest remainder, ties by subtype order)."""
    take = {s: min(quotas[s], capacities[s]) for s in order}
    deficit = class_quota - sum(take.values())
    while deficit > 0:
        spare = {s: capacities[s] - take[s] for s in order if capacities[s] > take[s]}
        if not spare:
            raise InsufficientClassCases(
                f"short by {deficit} case(s) after redistribution")
        total_spare = sum(spare.values())
        shares = {s: deficit * spare[s] / total_spare for s in spare}
        floors = {s: min(int(shares[s]), spare[s]) for s in spare}
        allocated = sum(floors.values())
        if allocated == 0:
            # largest remainder first; ties resolve by subtype order
            ranked = sorted(spare, key=lambda s: (-(shares[s] - int(shares[s])),
                                                  order.index(s)))
            for s in ranked:
                if deficit == 0:
                    break
                take[s] += 1
                deficit -= 1
            continue
        for s, extra in floors.items():
            grant = min(extra, deficit)
            take[s] += grant
            deficit -= grant
    return take


def stratified_sample(entries, gmm: GmmModel2D, per_cell: int = 50, seed: int = 0):
    """Split a manifest into a density-weighted holdout and the train rest.

    For each (class subtype x dataset) cell, per_cell cases are drawn
    without replacement with probability proportional to the subtype
    component's Gaussian density at the case coordinates. Cells that run
    short push their deficit to the same class's other subtype cells in the
    same dataset, keeping the class total at 3*per_cell per dataset.
    """
    entries = list(entries)
    for e in entries:
        if e.coords is None or e.label is None:
            raise ValueError(f"case {e.case_id} lacks coords or label")
    rng = np.random.default_rng(seed)

    cells: dict = {}
    for e in entries:
        assignment = gmm_predict_subtype(gmm, e.coords, e.label)
        comp_idx = int(assignment.label[1:]) - 1
        density = component_density(gmm.mixtures[e.label], comp_idx, e.coords)
        key = (e.dataset, e.label, assignment.label)
        cells.setdefault(key, []).append((e, density))

    datasets = sorted({ds for ds, _, _ in cells})
    holdout_ids = set()
    class_quota = 3 * per_cell
    for ds in datasets:
        for label in CLASS_LABELS:
            order = [f"{assignment_prefix(label)}{i + 1}" for i in range(3)]
            present = {sub: cells.get((ds, label, sub), []) for sub in order}
            if not any(present.values()):
                continue
            quotas = {sub: per_cell for sub in order}
            capacities = {sub: len(present[sub]) for sub in order}
            take = _allocate_deficit(quotas, capacities, class_quota, order)
            for sub in order:
                cell = present[sub]
                want = take[sub]
                if want >= len(cell):
                    chosen = range(len(cell))
                else:
                    weights = np.array([d for _, d in cell])
                    chosen = weighted_sample_without_replacement(rng, weights, want)
                for idx in chosen:
                    holdout_ids.add(cell[idx][0].case_id)

    holdout = [e for e in entries if e.case_id in holdout_ids]
    train = [e for e in entries if e.case_id not in holdout_ids]
    return holdout, train


def assignment_prefix(label: str) -> str:
    from ..models.gmm import SUBTYPE_PREFIX
    return SUBTYPE_PREFIX[label]
