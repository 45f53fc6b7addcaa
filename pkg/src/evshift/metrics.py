"""Feature-level domain discrepancy measures and pretext-task labels.

Kernel sums are accumulated with :func:`math.fsum`, which is exactly
rounded and therefore independent of summation order: results do not
change when arguments are swapped, rows permuted or work split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimMismatchError, InvalidAngleError, InvalidDistributionError
from .representations import ANGLES, group_views

PROB_TOL = 1e-6


@dataclass
class FeatureMatrix:
    """``n x d`` features with an optional domain tag."""

    data: np.ndarray
    domain: str = "untagged"

    def __post_init__(self):
        self.data = as_features(self.data)
        if self.domain not in ("source", "target", "untagged"):
            raise ValueError(f"unknown domain tag {self.domain!r}")

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


def as_features(x) -> np.ndarray:
    if isinstance(x, FeatureMatrix):
        return x.data
    m = np.asarray(x, dtype=np.float64)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"feature matrix must be n x d with n, d >= 1, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("feature matrix contains non-finite values")
    return m


def gaussian_kernel(x, y, sigma: float) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimMismatchError(f"vector dims differ: {x.shape} vs {y.shape}")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return math.exp(-float(np.sum((x - y) ** 2)) / (2.0 * sigma * sigma))


def pairwise_sq_dists(a: np.ndarray, b: np.ndarray, block: int = 256) -> np.ndarray:
    # explicit differences rather than the |a|^2 + |b|^2 - 2ab expansion:
    # exact zeros on identical rows and symmetric in the arguments
    out = np.empty((a.shape[0], b.shape[0]))
    for i in range(0, a.shape[0], block):
        diff = a[i:i + block, None, :] - b[None, :, :]
        out[i:i + block] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def median_heuristic_sigma(S, T) -> float:
    """Bandwidth with ``sigma^2`` = half the median pooled squared distance.

    Self-pairs are excluded; falls back to 1 when the median is zero.
    """
    pooled = np.vstack([as_features(S), as_features(T)])
    n = pooled.shape[0]
    if n < 2:
        return 1.0
    d2 = pairwise_sq_dists(pooled, pooled)
    med = float(np.median(d2[np.triu_indices(n, k=1)]))
    if med <= 0.0:
        return 1.0
    return math.sqrt(med / 2.0)


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian bandwidths: explicit ``bandwidths``, or median-heuristic
    sigma times each of ``multipliers`` when ``bandwidths`` is empty."""

    bandwidths: tuple = ()
    multipliers: tuple = (0.5, 1.0, 2.0)

    def resolve(self, S, T) -> list[float]:
        if self.bandwidths:
            sig = [float(s) for s in self.bandwidths]
        else:
            if not self.multipliers:
                raise ValueError("kernel spec needs bandwidths or multipliers")
            base = median_heuristic_sigma(S, T)
            sig = [base * float(m) for m in self.multipliers]
        if any(not s > 0 for s in sig):
            raise ValueError("bandwidths must be positive")
        return sig


def _kernel_mean(d2: np.ndarray, sigma: float) -> float:
    return math.fsum(np.exp(-d2 / (2.0 * sigma * sigma)).ravel().tolist()) / d2.size


def mmd2(S, T, kernel: KernelSpec | None = None) -> float:
    """Squared MMD, biased (V-statistic) estimator, averaged over bandwidths."""
    s = as_features(S)
    t = as_features(T)
    if s.shape[1] != t.shape[1]:
        raise DimMismatchError(f"feature dims differ: source d={s.shape[1]}, target d={t.shape[1]}")
    kernel = kernel or KernelSpec()
    sigmas = kernel.resolve(s, t)
    dss = pairwise_sq_dists(s, s)
    dtt = pairwise_sq_dists(t, t)
    dst = pairwise_sq_dists(s, t)
    vals = []
    for sigma in sigmas:
        kss = _kernel_mean(dss, sigma)
        ktt = _kernel_mean(dtt, sigma)
        kst = _kernel_mean(dst, sigma)
        # sorted so swapping S and T adds the same terms in the same order
        a, b = sorted((kss, ktt))
        vals.append((a + b) - 2.0 * kst)
    return math.fsum(vals) / len(vals)


def mean_feature_norm(X) -> float:
    m = as_features(X)
    return math.fsum(np.linalg.norm(m, axis=1).tolist()) / m.shape[0]


def mmfnd(S, T) -> float:
    """Absolute gap between the mean L2 feature norms of two samples."""
    return abs(mean_feature_norm(S) - mean_feature_norm(T))


def validate_probs(P) -> np.ndarray:
    """Check the simplex constraint row-wise and renormalize.

    Rows must be non-negative and sum to 1 within ``PROB_TOL``.
    """
    p = np.asarray(P, dtype=np.float64)
    if p.ndim == 1:
        p = p[None, :]
    if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
        raise InvalidDistributionError(f"probabilities must be n x K, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InvalidDistributionError("probabilities contain non-finite values")
    neg = np.flatnonzero((p < 0).any(axis=1))
    if neg.size:
        raise InvalidDistributionError(f"negative probability in row {neg[0]}")
    sums = p.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > PROB_TOL)
    if bad.size:
        raise InvalidDistributionError(f"row {bad[0]} sums to {sums[bad[0]]!r}, not 1")
    return p / sums[:, None]


def entropy(P) -> float:
    """Mean Shannon entropy (nats) of the rows, with ``0 ln 0 = 0``."""
    p = validate_probs(P)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    row = [-math.fsum(r) for r in terms.tolist()]
    return max(0.0, math.fsum(row) / p.shape[0])


def _check_angle(theta) -> int:
    if theta not in ANGLES:
        raise InvalidAngleError(f"rotation must be one of {ANGLES}, got {theta}")
    return int(theta)


def rotation_label(theta) -> int:
    return _check_angle(theta) // 90


def relative_rotation_label(theta_a, theta_b) -> int:
    """Class of ``(theta_a - theta_b) mod 360``."""
    return ((_check_angle(theta_a) - _check_angle(theta_b)) % 360) // 90


def mvp_pool(view_features) -> np.ndarray:
    """Average view features into one vector (order-independent)."""
    v = as_features(view_features)
    return np.array([math.fsum(col) for col in v.T.tolist()]) / v.shape[0]


POOL_MODES = ("mean", "channel_stats")


def spatial_pool(view_tensor: np.ndarray, mode: str = "mean") -> np.ndarray:
    """Hand-crafted per-view features from a ``[V, H, W, 3]`` stack.

    ``mean`` gives the per-channel spatial mean (3 features per view).
    ``channel_stats`` gives, per channel, mean, population std, fraction of
    positive pixels and sum of absolute values (12 features per view).
    """
    v = np.asarray(view_tensor, dtype=np.float64)
    if v.ndim == 3:
        v = v[None]
    if v.ndim != 4:
        raise ValueError(f"expected [V, H, W, C], got shape {v.shape}")
    flat = v.reshape(v.shape[0], -1, v.shape[3])
    mean = flat.mean(axis=1)
    if mode == "mean":
        return mean
    if mode != "channel_stats":
        raise ValueError(f"unknown pooling mode {mode!r}")
    std = flat.std(axis=1)
    pos = (flat > 0).mean(axis=1)
    abs_sum = np.abs(flat).sum(axis=1)
    # per channel: [mean, std, pos, abs_sum]
    return np.stack([mean, std, pos, abs_sum], axis=2).reshape(v.shape[0], -1)


def features_from_tensor(tensor: np.ndarray, mode: str = "channel_stats") -> np.ndarray:
    """Group a representation into views, pool each and average the views."""
    return mvp_pool(spatial_pool(group_views(tensor).views, mode))


def per_side_summary(S, T, kernel: KernelSpec | None = None) -> dict:
    s = as_features(S)
    t = as_features(T)
    return {
        "mmd2": mmd2(s, t, kernel),
        "mmfnd": mmfnd(s, t),
        "mean_norm_source": mean_feature_norm(s),
        "mean_norm_target": mean_feature_norm(t),
        "n_source": s.shape[0],
        "n_target": t.shape[0],
    }

