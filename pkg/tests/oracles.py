"""Independent brute-force oracles kept deliberately loop-based and slow."""

import math


def medcouple_bruteforce(values):
    """Pairwise-kernel medcouple: h(xi,xj) = ((xj-med)-(med-xi))/(xj-xi).

    Ties with the median use the signed rank kernel sign(i + j - (m + 1))
    with 1-based ranks inside the tie block on each side.
    """
    y = sorted(float(v) for v in values)
    n = len(y)
    med = y[(n - 1) // 2] if n % 2 else (y[n // 2 - 1] + y[n // 2]) / 2.0
    minus = [v for v in y if v <= med]
    plus = [v for v in y if v >= med]
    m = sum(1 for v in y if v == med)
    h = []
    for i, a in enumerate(minus):
        for j, b in enumerate(plus):
            if a == med and b == med:
                i_rank = i - (len(minus) - m) + 1
                j_rank = j + 1
                h.append(float(_sign(i_rank + j_rank - (m + 1))))
            else:
                h.append(((b - med) - (med - a)) / (b - a))
    h.sort()
    k = len(h)
    return h[(k - 1) // 2] if k % 2 else (h[k // 2 - 1] + h[k // 2]) / 2.0


def _sign(x):
    return (x > 0) - (x < 0)


def lerp_quantile_bruteforce(values, q):
    s = sorted(float(v) for v in values)
    pos = q * (len(s) - 1)
    lo = int(math.floor(pos))
    hi = min(lo + 1, len(s) - 1)
    frac = pos - lo
    return s[lo] * (1 - frac) + s[hi] * frac


def adjusted_fence_bruteforce(values):
    q1 = lerp_quantile_bruteforce(values, 0.25)
    q3 = lerp_quantile_bruteforce(values, 0.75)
    iqr = q3 - q1
    mc = medcouple_bruteforce(values)
    factor = math.exp(-4.0 * mc) if mc >= 0 else math.exp(-3.0 * mc)
    return q1 - 1.5 * factor * iqr


def glcm_pairs_bruteforce(levels, mask, offset):
    """Enumerate every in-mask pixel pair for one offset; symmetric counts."""
    h = len(levels)
    w = len(levels[0])
    dr, dc = offset
    counts = {}
    for r in range(h):
        for c in range(w):
            r2, c2 = r + dr, c + dc
            if 0 <= r2 < h and 0 <= c2 < w and mask[r][c] and mask[r2][c2]:
                a, b = levels[r][c], levels[r2][c2]
                counts[(a, b)] = counts.get((a, b), 0) + 1
                counts[(b, a)] = counts.get((b, a), 0) + 1
    return counts


def runs_bruteforce(levels, mask, direction):
    """Enumerate maximal equal-level runs along one direction."""
    h = len(levels)
    w = len(levels[0])
    dr, dc = direction
    starts = []
    for r in range(h):
        for c in range(w):
            pr, pc = r - dr, c - dc
            if not mask[r][c]:
                continue
            prev_in = 0 <= pr < h and 0 <= pc < w and mask[pr][pc] \
                and levels[pr][pc] == levels[r][c]
            if not prev_in:
                starts.append((r, c))
    runs = []
    for r, c in starts:
        lv = levels[r][c]
        length = 0
        while 0 <= r < h and 0 <= c < w and mask[r][c] and levels[r][c] == lv:
            length += 1
            r += dr
            c += dc
        runs.append((lv, length))
    return runs


def zones_bruteforce(levels, mask):
    """Enumerate 8-connected equal-level zones via flood fill."""
    h = len(levels)
    w = len(levels[0])
    seen = [[False] * w for _ in range(h)]
    zones = []
    for r in range(h):
        for c in range(w):
            if not mask[r][c] or seen[r][c]:
                continue
            lv = levels[r][c]
            stack = [(r, c)]
            seen[r][c] = True
            size = 0
            while stack:
                cr, cc = stack.pop()
                size += 1
                for dr in (-1, 0, 1):
                    for dc in (-1, 0, 1):
                        nr, nc = cr + dr, cc + dc
                        if (0 <= nr < h and 0 <= nc < w and not seen[nr][nc]
                                and mask[nr][nc] and levels[nr][nc] == lv):
                            seen[nr][nc] = True
                            stack.append((nr, nc))
            zones.append((lv, size))
    return zones


def ngtdm_bruteforce(levels, mask):
    """Per-pixel neighborhood means; returns dict level -> (n_i, s_i)."""
    h = len(levels)
    w = len(levels[0])
    acc = {}
    for r in range(h):
        for c in range(w):
            if not mask[r][c]:
                continue
            nbrs = []
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    if dr == 0 and dc == 0:
                        continue
                    nr, nc = r + dr, c + dc
                    if 0 <= nr < h and 0 <= nc < w and mask[nr][nc]:
                        nbrs.append(levels[nr][nc])
            if not nbrs:
                continue
            a = sum(nbrs) / len(nbrs)
            lv = levels[r][c]
            n_i, s_i = acc.get(lv, (0, 0.0))
            acc[lv] = (n_i + 1, s_i + abs(lv - a))
    return acc


def kruskal_wallis_bruteforce(groups):
    """Rank-arithmetic H with tie correction and chi-square dof k-1."""
    pooled = [(v, gi) for gi, g in enumerate(groups) for v in g]
    pooled.sort(key=lambda t: t[0])
    n = len(pooled)
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and pooled[j + 1][0] == pooled[i][0]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[k] = avg
        i = j + 1
    rank_sums = [0.0] * len(groups)
    for (v, gi), rk in zip(pooled, ranks):
        rank_sums[gi] += rk
    h_stat = 12.0 / (n * (n + 1)) * sum(
        rs * rs / len(g) for rs, g in zip(rank_sums, groups) if len(g)
    ) - 3.0 * (n + 1)
    # tie correction
    tie_sum = 0.0
    i = 0
    while i < n:
        j = i
        while j + 1 < n and pooled[j + 1][0] == pooled[i][0]:
            j += 1
        t = j - i + 1
        tie_sum += t ** 3 - t
        i = j + 1
    denom = 1.0 - tie_sum / (n ** 3 - n)
    if denom > 0:
        h_stat /= denom
    return h_stat


def glcm_features_oracle(levels, mask, offsets):
    """Loop-built averaged co-occurrence matrix and loop-computed features."""
    import numpy as np

    n = max(levels[r][c] for r in range(len(levels))
            for c in range(len(levels[0])) if mask[r][c])
    mats = []
    for off in offsets:
        counts = glcm_pairs_bruteforce(levels, mask, off)
        total = sum(counts.values())
        if total == 0:
            continue
        mats.append({k: v / total for k, v in counts.items()})
    p = {}
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            p[(i, j)] = sum(m.get((i, j), 0.0) for m in mats) / len(mats)

    def log2(x):
        return math.log(x, 2)

    px = {i: sum(p[(i, j)] for j in range(1, n + 1)) for i in range(1, n + 1)}
    py = {j: sum(p[(i, j)] for i in range(1, n + 1)) for j in range(1, n + 1)}
    mu_x = sum(i * px[i] for i in px)
    mu_y = sum(j * py[j] for j in py)
    var_x = sum((i - mu_x) ** 2 * px[i] for i in px)
    var_y = sum((j - mu_y) ** 2 * py[j] for j in py)
    p_plus = {}
    p_minus = {}
    for (i, j), v in p.items():
        p_plus[i + j] = p_plus.get(i + j, 0.0) + v
        p_minus[abs(i - j)] = p_minus.get(abs(i - j), 0.0) + v

    out = {}
    out["autocorrelation"] = sum(i * j * p[(i, j)] for (i, j) in p)
    out["joint_average"] = mu_x
    for power, name in ((4, "cluster_prominence"), (3, "cluster_shade"),
                        (2, "cluster_tendency")):
        out[name] = sum((i + j - mu_x - mu_y) ** power * p[(i, j)] for (i, j) in p)
    out["contrast"] = sum((i - j) ** 2 * p[(i, j)] for (i, j) in p)
    denom = math.sqrt(var_x * var_y)
    out["correlation"] = ((out["autocorrelation"] - mu_x * mu_y) / denom
                          if denom > 0 else 1.0)
    da = sum(k * v for k, v in p_minus.items())
    out["difference_average"] = da
    out["difference_entropy"] = -sum(v * log2(v) for v in p_minus.values() if v > 0)
    out["difference_variance"] = sum((k - da) ** 2 * v for k, v in p_minus.items())
    out["joint_energy"] = sum(v * v for v in p.values())
    hxy = -sum(v * log2(v) for v in p.values() if v > 0)
    out["joint_entropy"] = hxy
    hx = -sum(v * log2(v) for v in px.values() if v > 0)
    hy = -sum(v * log2(v) for v in py.values() if v > 0)
    hxy1 = -sum(p[(i, j)] * log2(px[i] * py[j]) for (i, j) in p
                if p[(i, j)] > 0 and px[i] * py[j] > 0)
    hxy2 = -sum(px[i] * py[j] * log2(px[i] * py[j])
                for i in px for j in py if px[i] * py[j] > 0)
    out["imc1"] = (hxy - hxy1) / max(hx, hy) if max(hx, hy) > 0 else 0.0
    out["imc2"] = math.sqrt(max(0.0, 1.0 - math.exp(-2.0 * (hxy2 - hxy))))
    out["idm"] = sum(v / (1 + (i - j) ** 2) for (i, j), v in p.items())
    out["idmn"] = sum(v / (1 + (i - j) ** 2 / n ** 2) for (i, j), v in p.items())
    out["id_"] = sum(v / (1 + abs(i - j)) for (i, j), v in p.items())
    out["idn"] = sum(v / (1 + abs(i - j) / n) for (i, j), v in p.items())
    out["inverse_variance"] = sum(v / k ** 2 for k, v in p_minus.items() if k >= 1)
    out["maximum_probability"] = max(p.values())
    out["sum_average"] = sum(k * v for k, v in p_plus.items())
    out["sum_entropy"] = -sum(v * log2(v) for v in p_plus.values() if v > 0)
    out["sum_of_squares"] = sum((i - mu_x) ** 2 * p[(i, j)] for (i, j) in p)

    present = [i for i in range(1, n + 1) if px[i] > 0]
    if len(present) < 2:
        out["mcc"] = 1.0
    else:
        q = np.zeros((len(present), len(present)))
        for a, i in enumerate(present):
            for b, j in enumerate(present):
                q[a, b] = sum(p[(i, k)] * p[(j, k)] / (px[i] * py[k])
                              for k in present if py[k] > 0)
        eigs = sorted(np.real(np.linalg.eigvals(q)), reverse=True)
        out["mcc"] = math.sqrt(min(max(eigs[1], 0.0), 1.0))
    return out


def run_style_features_oracle(pairs, n_pixels):
    """Loop formulas shared by run-length and size-zone families.

    `pairs` is a list of (level, length, weight) entries of the (possibly
    direction-averaged) matrix.
    """
    total = sum(w for _, _, w in pairs)
    out = {}
    out["sre"] = sum(w / l ** 2 for _, l, w in pairs) / total
    out["lre"] = sum(w * l ** 2 for _, l, w in pairs) / total
    by_level = {}
    by_length = {}
    for i, l, w in pairs:
        by_level[i] = by_level.get(i, 0.0) + w
        by_length[l] = by_length.get(l, 0.0) + w
    out["gln"] = sum(v ** 2 for v in by_level.values()) / total
    out["glnn"] = out["gln"] / total
    out["rln"] = sum(v ** 2 for v in by_length.values()) / total
    out["rlnn"] = out["rln"] / total
    out["rp"] = total / n_pixels
    mu_i = sum(i * w for i, _, w in pairs) / total
    mu_l = sum(l * w for _, l, w in pairs) / total
    out["glv"] = sum(w * (i - mu_i) ** 2 for i, _, w in pairs) / total
    out["rv"] = sum(w * (l - mu_l) ** 2 for _, l, w in pairs) / total
    out["re"] = -sum((w / total) * math.log(w / total, 2)
                     for _, _, w in pairs if w > 0)
    out["lglre"] = sum(w / i ** 2 for i, _, w in pairs) / total
    out["hglre"] = sum(w * i ** 2 for i, _, w in pairs) / total
    out["srlgle"] = sum(w / (i ** 2 * l ** 2) for i, l, w in pairs) / total
    out["srhgle"] = sum(w * i ** 2 / l ** 2 for i, l, w in pairs) / total
    out["lrlgle"] = sum(w * l ** 2 / i ** 2 for i, l, w in pairs) / total
    out["lrhgle"] = sum(w * i ** 2 * l ** 2 for i, l, w in pairs) / total
    return out


def glrlm_features_oracle(levels, mask, directions, n_pixels):
    """Direction-averaged run matrix via enumeration, then loop formulas."""
    weights = {}
    for d in directions:
        for lv, ln in runs_bruteforce(levels, mask, d):
            weights[(lv, ln)] = weights.get((lv, ln), 0.0) + 1.0 / len(directions)
    pairs = [(lv, ln, w) for (lv, ln), w in sorted(weights.items())]
    return run_style_features_oracle(pairs, n_pixels)


def glszm_features_oracle(levels, mask, n_pixels):
    weights = {}
    for lv, size in zones_bruteforce(levels, mask):
        weights[(lv, size)] = weights.get((lv, size), 0.0) + 1.0
    pairs = [(lv, size, w) for (lv, size), w in sorted(weights.items())]
    return run_style_features_oracle(pairs, n_pixels)


def ngtdm_features_oracle(levels, mask, n_pixels):
    acc = ngtdm_bruteforce(levels, mask)
    n_valid = sum(n for n, _ in acc.values())
    if n_valid == 0:
        return None
    p = {lv: n / n_valid for lv, (n, _) in acc.items()}
    s = {lv: si for lv, (_, si) in acc.items()}
    levels_present = sorted(acc)
    n_gp = len(levels_present)
    wd = sum(p[i] * s[i] for i in levels_present)
    out = {}
    out["coarseness"] = 1e6 if wd == 0 else min(1.0 / wd, 1e6)
    if n_gp > 1:
        out["contrast"] = (sum(p[i] * p[j] * (i - j) ** 2
                               for i in levels_present for j in levels_present)
                           / (n_gp * (n_gp - 1))
                           * sum(s.values()) / n_valid)
        ipd = sum(abs(i * p[i] - j * p[j])
                  for i in levels_present for j in levels_present)
        out["busyness"] = wd / ipd if ipd > 0 else 0.0
        out["complexity"] = sum(
            abs(i - j) * (p[i] * s[i] + p[j] * s[j]) / (p[i] + p[j])
            for i in levels_present for j in levels_present) / n_valid
        st = sum(s.values())
        out["strength"] = (sum((p[i] + p[j]) * (i - j) ** 2
                               for i in levels_present for j in levels_present) / st
                           if st > 0 else 0.0)
    else:
        out["contrast"] = out["busyness"] = out["complexity"] = out["strength"] = 0.0
    tm = sum(p[i] * i for i in levels_present)
    out["tone_mean"] = tm
    out["tone_variance"] = sum(p[i] * (i - tm) ** 2 for i in levels_present)
    out["tone_entropy"] = -sum(p[i] * math.log(p[i], 2) for i in levels_present)
    out["mean_difference"] = sum(s.values()) / n_valid
    out["weighted_difference"] = wd
    out["level_count"] = float(n_gp)
    out["valid_fraction"] = n_valid / n_pixels
    return out


def cart_exhaustive_oracle(x, y, class_weights, max_depth, min_leaf):
    """Plain-loop CART evaluating every feature and midpoint threshold.

    Mirrors the tie rule (lower feature, lower threshold) and the stopping
    rules; returns nested dicts for structural comparison.
    """
    def gini(counts):
        total = 0.0
        for c in range(3):
            total += class_weights[c] * counts[c]
        if total <= 0.0:
            return 0.0
        acc = 0.0
        for c in range(3):
            acc += (class_weights[c] * counts[c] / total) ** 2
        return 1.0 - acc

    def build(idx, depth):
        counts = [0, 0, 0]
        for i in idx:
            counts[y[i]] += 1
        wn = [class_weights[c] * counts[c] for c in range(3)]
        tw = sum(wn)
        node = {
            "counts": counts,
            "n": len(idx),
            "probs": [w / tw for w in wn] if tw > 0 else [1 / 3] * 3,
            "feature": None,
            "threshold": None,
        }
        pure = sum(1 for c in counts if c > 0) <= 1
        if depth >= max_depth or pure or len(idx) < 2 * min_leaf:
            return node
        best = None
        for f in range(len(x[0])):
            vals = sorted(set(x[i][f] for i in idx))
            for a, b in zip(vals, vals[1:]):
                thr = (a + b) / 2.0
                left = [i for i in idx if x[i][f] <= thr]
                right = [i for i in idx if x[i][f] > thr]
                if len(left) < min_leaf or len(right) < min_leaf:
                    continue
                lc = [0, 0, 0]
                rc = [0, 0, 0]
                for i in left:
                    lc[y[i]] += 1
                for i in right:
                    rc[y[i]] += 1
                wl = 0.0
                wr = 0.0
                for c in range(3):
                    wl += class_weights[c] * lc[c]
                    wr += class_weights[c] * rc[c]
                score = (wl * gini(lc) + wr * gini(rc)) / (wl + wr)
                if best is None or score < best[0]:
                    best = (score, f, thr, left, right)
        if best is None:
            return node
        node["feature"] = best[1]
        node["threshold"] = best[2]
        node["left"] = build(best[3], depth + 1)
        node["right"] = build(best[4], depth + 1)
        return node

    return build(list(range(len(x))), 0)


def gauss2d_density_oracle(point, mean, cov):
    """Direct 2D normal density with explicit inverse and determinant."""
    a, b = cov[0][0], cov[0][1]
    c, d = cov[1][0], cov[1][1]
    det = a * d - b * c
    dx = point[0] - mean[0]
    dy = point[1] - mean[1]
    quad = (d * dx * dx - (b + c) * dx * dy + a * dy * dy) / det
    return math.exp(-0.5 * quad) / (2.0 * math.pi * math.sqrt(det))
