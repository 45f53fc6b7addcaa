"""Pure-Python reference versions of the hot loops.

Same signatures and results as the compiled ``_ckernels`` module; used when
the extension is not built or ``EVSHIFT_BACKEND=python`` is set.
"""

import math

import numpy as np

# slack, in units of the threshold, when deciding whether a level was reached
LEVEL_TOL = 1e-9


def simulate_pixels(logf, ts, thresholds, refractory):
    """Contrast-threshold crossings for every pixel.

    ``logf`` is ``(T, H, W)`` log intensity, ``ts`` the ``T`` frame times in
    microseconds, ``thresholds`` the ``(H, W)`` per-pixel C. Returns
    ``(x, y, t, p)`` in pixel-major order with float timestamps.
    """
    logf = np.asarray(logf, dtype=np.float64)
    ts = np.asarray(ts, dtype=np.float64)
    thresholds = np.asarray(thresholds, dtype=np.float64)
    n_frames, height, width = logf.shape
    xs, ys, tout, ps = [], [], [], []
    for y in range(height):
        for x in range(width):
            series = logf[:, y, x].tolist()
            c = float(thresholds[y, x])
            base = series[0]
            ref = 0
            last = -math.inf
            for k in range(n_frames - 1):
                a = series[k]
                b = series[k + 1]
                if a == b:
                    continue
                fa = (a - base) / c
                fb = (b - base) / c
                t0 = ts[k]
                dt = ts[k + 1] - t0
                if b > a:
                    levels = range(math.floor(fa + LEVEL_TOL) + 1, math.floor(fb + LEVEL_TOL) + 1)
                    pol = 1
                else:
                    levels = range(math.ceil(fa - LEVEL_TOL) - 1, math.ceil(fb - LEVEL_TOL) - 1, -1)
                    pol = -1
                for n in levels:
                    if (n - ref) * pol <= 0:
                        continue
                    s = min(max((n - fa) / (fb - fa), 0.0), 1.0)
                    tc = t0 + s * dt
                    if tc - last < refractory:
                        continue
                    xs.append(x)
                    ys.append(y)
                    tout.append(tc)
                    ps.append(pol)
                    ref = n
                    last = tc
    return (
        np.array(xs, dtype=np.int64),
        np.array(ys, dtype=np.int64),
        np.array(tout, dtype=np.float64),
        np.array(ps, dtype=np.int8),
    )


def voxel_accumulate(x, y, tstar, p, height, width, bins):
    out = np.zeros((height, width, bins), dtype=np.float64)
    tstar = np.asarray(tstar, dtype=np.float64)
    lower = np.floor(tstar).astype(np.int64)
    frac = tstar - lower
    pol = np.asarray(p, dtype=np.float64)
    # interleave lower/upper updates per event so the summation order (and
    # hence every bit) matches the compiled loop; add.at applies in order
    b = np.stack([lower, lower + 1], axis=1).ravel()
    w = np.stack([pol * (1.0 - frac), pol * frac], axis=1).ravel()
    yy = np.repeat(np.asarray(y, dtype=np.int64), 2)
    xx = np.repeat(np.asarray(x, dtype=np.int64), 2)
    keep = b < bins
    np.add.at(out, (yy[keep], xx[keep], b[keep]), w[keep])
    return out


def hats_accumulate(x, y, t, p, cell_size, rho, tau, delta_t, cells_y, cells_x):
    """Averaged per-cell time-surface histograms, tiled into two channels."""
    side = 2 * rho + 1
    out = np.zeros((cells_y * side, cells_x * side, 2), dtype=np.float64)
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    t = np.asarray(t, dtype=np.float64)
    ch = (np.asarray(p) < 0).astype(np.int64)
    key = ((y // cell_size) * cells_x + (x // cell_size)) * 2 + ch
    order = np.argsort(key, kind="stable")
    key_sorted = key[order]
    bounds = np.flatnonzero(np.diff(key_sorted)) + 1
    for group in np.split(order, bounds):
        if group.size == 0:
            continue
        k = int(key[group[0]])
        cell, c = divmod(k, 2)
        cy, cx = divmod(cell, cells_x)
        gx = x[group].tolist()
        gy = y[group].tolist()
        gt = t[group].tolist()
        n = len(gt)
        hist = [[0.0] * side for _ in range(side)]
        lo = 0
        hi = 0
        for i in range(n):
            ti = gt[i]
            while gt[lo] < ti - delta_t:
                lo += 1
            if hi < i:
                hi = i
            while hi + 1 < n and gt[hi + 1] <= ti:
                hi += 1
            for j in range(lo, hi + 1):
                du = gx[j] - gx[i]
                dv = gy[j] - gy[i]
                if -rho <= du <= rho and -rho <= dv <= rho:
                    hist[dv + rho][du + rho] += math.exp(-(ti - gt[j]) / tau)
        block = np.array(hist) / max(1, n)
        out[cy * side:(cy + 1) * side, cx * side:(cx + 1) * side, c] = block
    return out
