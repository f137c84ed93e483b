"""Convex hull filling on pixel centers."""

from __future__ import annotations

import numpy as np


def _monotone_chain(points: np.ndarray) -> np.ndarray:
    """CCW convex hull vertices of integer (r, c) points, no interior collinear."""
    pts = np.unique(points, axis=0)
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(tuple(p))
    upper = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(tuple(p))
    return np.array(lower[:-1] + upper[:-1], dtype=np.int64)


def convex_hull_mask(mask: np.ndarray) -> np.ndarray:
    """Fill the convex hull of a mask's foreground pixel centers.

    Degenerate (collinear) foregrounds fill the pixel centers lying on the
    connecting segment. Empty input returns an empty mask.
    """
    out = np.zeros_like(mask, dtype=bool)
    coords = np.argwhere(mask)
    if coords.size == 0:
        return out
    hull = _monotone_chain(coords)
    r0, c0 = coords.min(axis=0)
    r1, c1 = coords.max(axis=0)
    rr, cc = np.meshgrid(np.arange(r0, r1 + 1), np.arange(c0, c1 + 1), indexing="ij")

    if len(hull) == 1:
        out[hull[0][0], hull[0][1]] = True
        return out
    if len(hull) == 2:
        a, b = hull[0].astype(float), hull[1].astype(float)
        d = b - a
        cross = d[0] * (cc - a[1]) - d[1] * (rr - a[0])
        t = ((rr - a[0]) * d[0] + (cc - a[1]) * d[1]) / (d @ d)
        on_seg = (np.abs(cross) < 1e-9) & (t >= -1e-9) & (t <= 1 + 1e-9)
        out[r0:r1 + 1, c0:c1 + 1] = on_seg
        return out

    inside = np.ones(rr.shape, dtype=bool)
    n = len(hull)
    for i in range(n):
        ar, ac = hull[i]
        br, bc = hull[(i + 1) % n]
        # CCW polygon: points with non-negative edge cross product are inside
        cross = (br - ar) * (cc - ac) - (bc - ac) * (rr - ar)
        inside &= cross >= -1e-9
    out[r0:r1 + 1, c0:c1 + 1] = inside
    return out
