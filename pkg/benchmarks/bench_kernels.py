"""Time the pure-Python and compiled kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat N] [--size PX]
"""

import argparse
import timeit

import numpy as np

from evshift._backend import AVAILABLE
from evshift.representations import HatsConfig
from evshift.simulator import SaccadePattern, log_intensity, saccade_frames

HATS_EVENTS = 20_000


def workloads(size):
    rng = np.random.default_rng(0)
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1)
    image = np.clip(0.5 + 0.3 * np.sin(6 * xx) * np.cos(4 * yy) + 0.05 * rng.random((size, size)), 0, 1)
    canvas = size + 16
    seq = saccade_frames(image, SaccadePattern(), canvas=(canvas, canvas))
    logf = log_intensity(seq.frames)
    ts = seq.timestamps.astype(np.float64)
    thr = np.full((canvas, canvas), 0.06)

    x, y, t, p = AVAILABLE["python"].simulate_pixels(logf, ts, thr, 0.0)
    order = np.argsort(t, kind="stable")
    x, y, t, p = x[order], y[order], np.rint(t[order]), p[order]
    bins = 9
    tstar = (t - t[0]) * (bins - 1) / (t[-1] - t[0])
    # the naive HATS loop is quadratic per cell, so bound its input
    hx, hy, ht, hp = x[:HATS_EVENTS], y[:HATS_EVENTS], t[:HATS_EVENTS], p[:HATS_EVENTS]
    hcfg = HatsConfig(delta_t=10_000.0)
    cy, cx = hcfg.grid(canvas, canvas)
    jobs = {
        "simulate": lambda k: k.simulate_pixels(logf, ts, thr, 0.0),
        "voxel": lambda k: k.voxel_accumulate(x, y, tstar, p, canvas, canvas, bins),
        "hats": lambda k: k.hats_accumulate(hx, hy, ht, hp, hcfg.cell_size, hcfg.rho,
                                            hcfg.tau, hcfg.delta_t, cy, cx),
    }
    return len(t), jobs


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--size", type=int, default=48, help="image side in pixels")
    args = ap.parse_args()
    n_events, jobs = workloads(args.size)
    print(f"events={n_events} hats_events={min(n_events, HATS_EVENTS)} backends={','.join(sorted(AVAILABLE))}")
    for name, job in jobs.items():
        best = {}
        for backend, mod in sorted(AVAILABLE.items()):
            best[backend] = min(timeit.repeat(lambda: job(mod), number=1, repeat=args.repeat))
        line = " ".join(f"{b}_s={v:.4f}" for b, v in best.items())
        if "cython" in best:
            line += f" speedup={best['python'] / best['cython']:.1f}x"
        print(f"{name}: {line}", flush=True)


if __name__ == "__main__":
    main()
