"""Acceptance checks, one test per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see each verdict inline;
they are also collected into the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from evshift._backend import AVAILABLE
from evshift.cli import run
from evshift.codecs import write_events
from evshift.events import EventStream
from evshift.metrics import KernelSpec, entropy, mmd2, relative_rotation_label
from evshift.representations import (
    ANGLES,
    EstKernel,
    HatsConfig,
    est,
    group_views,
    hats,
    rotate,
    ungroup_views,
    voxel_grid,
)
from evshift.simulator import Fixed, FrameSequence, SaccadePattern, SimulatorConfig, saccade_frames, simulate

from conftest import ACCEPTANCE_LINES, as_tuples, random_stream
from oracles import est_oracle, hats_oracle, mmd2_oracle, voxel_oracle


def verdict(number, title, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def max_abs(a, b):
    return float(np.max(np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))))


def synthetic_image(seed, size=24):
    """Smooth random scene: a few Gaussian blobs over a tilted gradient."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1)
    img = 0.2 + 0.3 * (rng.uniform(-1, 1) * xx + rng.uniform(-1, 1) * yy)
    for _ in range(rng.integers(2, 5)):
        cy, cx = rng.uniform(0.15, 0.85, 2)
        r = rng.uniform(0.08, 0.25)
        img = img + rng.uniform(-0.5, 0.6) * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * r * r))
    return np.clip(img, 0.02, 0.98)


def test_criterion_01_voxel_oracle():
    rng = np.random.default_rng(101)
    worst = 0.0
    start = time.perf_counter()
    for _ in range(200):
        s = random_stream(rng, int(rng.integers(1, 21)), 8, 8)
        bins = int(rng.integers(1, 10))
        worst = max(worst, max_abs(voxel_grid(s, bins), voxel_oracle(as_tuples(s), 8, 8, bins)))
    elapsed = time.perf_counter() - start
    verdict(1, "voxel grid matches brute-force oracle", worst <= 1e-12 and elapsed < 5.0,
            f"200 streams, max err {worst:.1e}, {elapsed:.2f} s")


def test_criterion_02_voxel_mass():
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(1000):
        s = random_stream(rng, int(rng.integers(1, 200)), 16, 12, t_max=1_000_000, interior=True)
        total = float(voxel_grid(s, int(rng.integers(1, 16))).sum())
        expected = float(s.p.astype(np.int64).sum())
        worst = max(worst, abs(total - expected) / max(1.0, abs(expected)))
    verdict(2, "voxel mass equals polarity sum", worst <= 1e-6, f"1000 cases, max rel err {worst:.1e}")


def test_criterion_03_est_hats_oracles():
    rng = np.random.default_rng(103)
    worst = 0.0
    kernels_est = (EstKernel("trilinear"), EstKernel("exponential", alpha=1.5))
    start = time.perf_counter()
    for _ in range(100):
        n = int(rng.integers(1, 11))
        s = random_stream(rng, n, 8, 8, t_max=5000)
        # EST needs a nonzero last timestamp
        t = s.t.copy()
        t[-1] = max(int(t[-1]), 1)
        s = EventStream(8, 8, s.x, s.y, t, s.p)
        ev = as_tuples(s)
        bins = int(rng.integers(2, 6))
        for k in kernels_est:
            worst = max(worst, max_abs(est(s, bins, k), est_oracle(ev, 8, 8, bins, lambda a: float(k(a, bins)))))
        cfg = HatsConfig(cell_size=4, rho=1, tau=float(rng.uniform(100, 5000)),
                         delta_t=float(rng.choice([math.inf, 500.0])))
        for backend in AVAILABLE.values():
            got = hats(s, cfg, backend)
            worst = max(worst, max_abs(got, hats_oracle(ev, 8, 8, 4, 1, cfg.tau, cfg.delta_t)))
    elapsed = time.perf_counter() - start
    verdict(3, "EST and HATS match naive oracles", worst <= 1e-9 and elapsed < 10.0,
            f"100 streams, max err {worst:.1e}, {elapsed:.2f} s")


def test_criterion_04_ramp_law():
    rng = np.random.default_rng(104)
    eps = 1e-3
    duration = 1_000_000
    bad_count = 0
    worst_dt = 0.0
    for _ in range(50):
        c = float(rng.choice([0.06, 0.15]))
        rise = float(rng.uniform(0.05, 3.0))
        log0 = math.log(float(rng.uniform(0.01, 0.04)) + eps)
        ts = np.linspace(0, duration, 11).astype(np.int64)
        frames = np.exp(log0 + rise * ts / duration) - eps
        seq = FrameSequence(ts, frames[:, None, None])
        s = simulate(seq, SimulatorConfig(Fixed(c), refractory=0.0, log_eps=eps))
        expected = math.floor(rise / c)
        if len(s) != expected or np.any(s.p != 1):
            bad_count += 1
            continue
        analytic = np.arange(1, expected + 1) * c / rise * duration
        if expected:
            worst_dt = max(worst_dt, float(np.max(np.abs(s.t.astype(np.float64) - analytic))))
    verdict(4, "log ramp yields floor(rise/C) events at analytic times", bad_count == 0 and worst_dt <= 1.0,
            f"50 ramps, {bad_count} count mismatches, max timing err {worst_dt:.2f} us")


def test_criterion_05_monotonicity():
    thresholds = (0.05, 0.06, 0.15, 0.5)
    refractories = (0.0, 1_000.0, 10_000.0)
    violations = 0
    for i in range(20):
        seq = saccade_frames(synthetic_image(500 + i, 16), canvas=(24, 24))
        counts = np.array([[len(simulate(seq, SimulatorConfig(Fixed(c), refractory=r))) for r in refractories]
                           for c in thresholds])
        violations += int(np.sum(np.diff(counts, axis=0) > 0) + np.sum(np.diff(counts, axis=1) > 0))
    verdict(5, "event count nonincreasing in C and refractory", violations == 0,
            f"20 inputs x 4 thresholds x 3 refractories, {violations} violations")


def test_criterion_06_mmd():
    closed = abs(mmd2([[0.0]], [[2.0]], KernelSpec((1.0,))) - (2 - 2 * math.exp(-2)))
    rng = np.random.default_rng(106)
    self_worst = max(abs(mmd2(x, x)) for x in (rng.normal(size=(int(rng.integers(1, 20)), int(rng.integers(1, 8))))
                                               for _ in range(100)))
    brute = 0.0
    for _ in range(200):
        d = int(rng.integers(1, 5))
        s = rng.normal(size=(int(rng.integers(1, 7)), d))
        t = rng.normal(loc=0.5, size=(int(rng.integers(1, 7)), d))
        sigma = float(rng.uniform(0.2, 5.0))
        brute = max(brute, abs(mmd2(s, t, KernelSpec((sigma,))) - mmd2_oracle(s.tolist(), t.tolist(), sigma)))
    ok = closed <= 1e-12 and self_worst <= 1e-9 and brute <= 1e-12
    verdict(6, "MMD closed form, self-distance and brute force", ok,
            f"closed-form err {closed:.1e}, self max {self_worst:.1e}, brute-force err {brute:.1e}")


def test_criterion_07_entropy():
    worst = 0.0
    for k in (2, 4, 51, 101):
        worst = max(worst, abs(entropy(np.eye(k))))
        worst = max(worst, abs(entropy(np.full((3, k), 1.0 / k)) - math.log(k)))
    rng = np.random.default_rng(107)
    in_bounds = all(
        0.0 <= entropy(p) <= math.log(p.shape[1]) + 1e-12
        for p in (rng.dirichlet(np.full(k, 0.3), size=5) for k in (2, 4, 51, 101) for _ in range(25))
    )
    verdict(7, "entropy endpoints and bounds", worst <= 1e-12 and in_bounds,
            f"K in 2,4,51,101, max endpoint err {worst:.1e}")


def test_criterion_08_shift_detection(tmp_path, capsys):
    patterns = (
        SaccadePattern(),
        SaccadePattern(((-3.0, -6.0), (-3.0, 6.0), (6.0, 0.0))),
        SaccadePattern(((4.0, 4.0), (-4.0, 4.0), (0.0, -8.0))),
    )
    domains = {"A": (0.06, 1), "A2": (0.06, 2), "B": (0.5, 1)}
    start = time.perf_counter()
    for name, (c, seed) in domains.items():
        for i in range(10):
            img = synthetic_image(800 + i)
            cls = tmp_path / name / f"img{i:02d}"
            cls.mkdir(parents=True)
            for r, pattern in enumerate(patterns):
                seq = saccade_frames(img, pattern, canvas=(32, 32))
                cfg = SimulatorConfig(Fixed(c), noise_rate=1.0, seed=seed * 1000 + 10 * i + r)
                write_events(simulate(seq, cfg), cls / f"s{r}.evt")

    def diag(a, b):
        code = run(["diag", "--source-dir", str(tmp_path / a), "--target-dir", str(tmp_path / b),
                    "--repr", "voxel", "--pool", "channel_stats"])
        out = capsys.readouterr().out
        assert code == 0
        kv = dict(line.split("=", 1) for line in out.splitlines())
        return float(kv["overall.mmd2"])

    gap = diag("A", "B")
    baseline = diag("A", "A2")
    elapsed = time.perf_counter() - start
    verdict(8, "diag separates C=0.06 from C=0.5", gap > 5 * baseline and elapsed < 60.0,
            f"mmd2(A,B)={gap:.4g}, mmd2(A,A')={baseline:.4g}, ratio {gap / max(baseline, 1e-300):.3g}, "
            f"{elapsed:.1f} s")


def test_criterion_09_multiview():
    rng = np.random.default_rng(109)
    group_ok = all(
        np.array_equal(ungroup_views(group_views(t)), t)
        for t in (rng.normal(size=(5, 7, f)) for f in range(1, 13))
    )
    x = rng.normal(size=(5, 7, 4))
    views = group_views(rng.normal(size=(5, 7, 9))).views
    rot_ok = True
    for theta in ANGLES:
        y, v = x, views
        for _ in range(4):
            y, v = rotate(y, theta), rotate(v, theta, axes=(1, 2))
        rot_ok &= np.array_equal(y, x) and np.array_equal(v, views)
    table = {
        0: (0, 3, 2, 1),
        90: (1, 0, 3, 2),
        180: (2, 1, 0, 3),
        270: (3, 2, 1, 0),
    }
    mismatches = sum(
        relative_rotation_label(a, b) != table[a][j] for a in ANGLES for j, b in enumerate(ANGLES)
    )
    # the label is the extra rotation that maps a view at angle b onto angle a
    consistent = all(
        np.array_equal(rotate(rotate(x, b), 90 * relative_rotation_label(a, b)), rotate(x, a))
        for a in ANGLES for b in ANGLES
    )
    ok = group_ok and rot_ok and mismatches == 0 and consistent
    verdict(9, "view grouping, rotation and relative-rotation table", ok,
            f"F 1..12 roundtrip {group_ok}, rotate^4 {rot_ok}, {mismatches}/16 table mismatches")


def test_criterion_10_determinism(tmp_path, capsys):
    from evshift.simulator import save_pgm

    for i in range(4):
        save_pgm(synthetic_image(900 + i, 16), tmp_path / f"img{i}.pgm")

    def pipeline(tag, threads):
        root = tmp_path / tag
        out = []
        for side, c in (("src", "0.06"), ("tgt", "0.3")):
            for i in range(4):
                d = root / side / f"c{i % 2}"
                d.mkdir(parents=True, exist_ok=True)
                code = run(["simulate", "--image", str(tmp_path / f"img{i}.pgm"), "-o", str(d / f"s{i}.evt"),
                            "--c-mode", "perpixel", "--c-lo", c, "--c-hi", "0.5", "--noise-rate", "3",
                            "--seed", str(40 + i), "--canvas", "24", "24"])
                assert code == 0
            assert run(["convert", "--input", str(root / side), "--out-root", str(root / f"{side}_vox"),
                        "--threads", str(threads)]) == 0
        capsys.readouterr()
        assert run(["diag", "--source-dir", str(root / "src"), "--target-dir", str(root / "tgt"),
                    "--threads", str(threads)]) == 0
        out.append(capsys.readouterr().out)
        files = sorted(p for p in root.rglob("*") if p.is_file())
        blobs = {str(p.relative_to(root)): p.read_bytes() for p in files}
        return out[0], blobs

    runs = [pipeline("run1_t1", 1), pipeline("run2_t1", 1), pipeline("run3_t4", 4), pipeline("run4_t4", 4)]
    same = all(r == runs[0] for r in runs[1:])
    n_files = len(runs[0][1])
    verdict(10, "seeded simulate, voxel and diag are bit-identical", same,
            f"2 runs x threads 1,4, {n_files} files and diag output compared")
