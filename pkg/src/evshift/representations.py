"""Dense event representations and multi-view grouping.

All tensors are ``float64`` numpy arrays laid out channels-last,
``[H, W, F]``; grouped views are ``[V, H, W, 3]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels as _default_kernels
from .errors import EmptyStreamError, InvalidAngleError, InvalidConfigError, ZeroLastTimestampError
from .events import EventStream, normalize_timestamps

ANGLES = (0, 90, 180, 270)
DEFAULT_BINS = 9


def voxel_grid(stream: EventStream, bins: int = DEFAULT_BINS, kernels=None) -> np.ndarray:
    """Signed event volume with linear interpolation over time.

    Each event adds ``p * max(0, 1 - |b - t*|)`` to its pixel in the two
    bins adjacent to its normalized timestamp ``t*`` in ``[0, bins - 1]``.
    """
    if bins < 1:
        raise InvalidConfigError("bins must be >= 1")
    if len(stream) == 0:
        raise EmptyStreamError("voxel grid of an empty stream")
    kernels = kernels or _default_kernels
    tstar = normalize_timestamps(stream, bins)
    return kernels.voxel_accumulate(stream.x, stream.y, tstar, stream.p, stream.height, stream.width, bins)


@dataclass(frozen=True)
class HatsConfig:
    cell_size: int = 8
    rho: int = 3
    tau: float = 100_000.0  # microseconds
    delta_t: float = math.inf  # memory window, microseconds

    def validate(self) -> None:
        side = 2 * self.rho + 1
        if self.rho < 0 or not (self.cell_size >= side > 0):
            raise InvalidConfigError(f"need cell_size >= 2*rho+1 > 0, got K={self.cell_size} rho={self.rho}")
        if not self.tau > 0:
            raise InvalidConfigError("tau must be positive")
        if not self.delta_t >= 0:
            raise InvalidConfigError("delta_t must be >= 0")

    def grid(self, height: int, width: int) -> tuple[int, int]:
        """Number of cells along (y, x); partial border cells are kept."""
        return -(-height // self.cell_size), -(-width // self.cell_size)


def hats(stream: EventStream, config: HatsConfig | None = None, kernels=None) -> np.ndarray:
    """Histograms of averaged time surfaces.

    Per cell and polarity, the local time surfaces of every event (only
    events of the same cell and polarity contribute, decayed by
    ``exp(-dt / tau)`` within ``delta_t``) are summed and divided by the
    event count. Cells are tiled in place, giving
    ``[cells_y * (2 rho + 1), cells_x * (2 rho + 1), 2]`` with channel 0
    for ON and channel 1 for OFF events.
    """
    config = config or HatsConfig()
    config.validate()
    if len(stream) == 0:
        raise EmptyStreamError("HATS of an empty stream")
    kernels = kernels or _default_kernels
    cy, cx = config.grid(stream.height, stream.width)
    return kernels.hats_accumulate(
        stream.x, stream.y, stream.t.astype(np.float64), stream.p,
        int(config.cell_size), int(config.rho), float(config.tau), float(config.delta_t), cy, cx,
    )


@dataclass(frozen=True)
class EstKernel:
    """Fixed temporal kernel for the event spike tensor.

    ``trilinear`` is ``max(0, 1 - (B - 1) |a|)``, a hat one bin spacing
    wide. ``exponential`` is ``exp(-alpha (B - 1) |a|)``. ``table`` linearly
    interpolates ``samples`` placed uniformly on ``[-1, 1]``.
    """

    kind: str = "trilinear"
    alpha: float = 1.0
    samples: tuple = field(default=())

    def validate(self) -> None:
        if self.kind not in ("trilinear", "exponential", "table"):
            raise InvalidConfigError(f"unknown EST kernel {self.kind!r}")
        if self.kind == "exponential" and not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise InvalidConfigError("exponential kernel needs a finite alpha >= 0")
        if self.kind == "table":
            s = np.asarray(self.samples, dtype=np.float64)
            if s.ndim != 1 or s.size < 2 or not np.all(np.isfinite(s)):
                raise InvalidConfigError("table kernel needs >= 2 finite samples")

    def __call__(self, a, bins: int) -> np.ndarray:
        a = np.asarray(a, dtype=np.float64)
        scale = bins - 1
        if self.kind == "trilinear":
            return np.maximum(0.0, 1.0 - scale * np.abs(a))
        if self.kind == "exponential":
            return np.exp(-self.alpha * scale * np.abs(a))
        s = np.asarray(self.samples, dtype=np.float64)
        return np.interp(a, np.linspace(-1.0, 1.0, s.size), s)


def est(stream: EventStream, bins: int = DEFAULT_BINS, kernel: EstKernel | None = None) -> np.ndarray:
    """Event spike tensor with a fixed kernel, ``[H, W, 2 * bins]``.

    Timestamps are normalized by the last one, ``t_hat = t / t_N``. Channel
    ``2 b`` holds ON and ``2 b + 1`` OFF events of bin ``b``.
    """
    kernel = kernel or EstKernel()
    kernel.validate()
    if bins < 2:
        raise InvalidConfigError("EST needs bins >= 2")
    if len(stream) == 0:
        raise EmptyStreamError("EST of an empty stream")
    t_last = float(stream.t[-1])
    if t_last == 0:
        raise ZeroLastTimestampError("last timestamp is zero; cannot normalize")
    that = stream.t.astype(np.float64) / t_last
    out = np.zeros((stream.height, stream.width, 2 * bins), dtype=np.float64)
    off = (stream.p < 0).astype(np.int64)
    for b in range(bins):
        w = that * kernel(that - b / (bins - 1), bins)
        np.add.at(out, (stream.y, stream.x, 2 * b + off), w)
    return out


@dataclass(frozen=True)
class ViewSet:
    views: np.ndarray  # [V, H, W, 3]
    pad_channels: int = 0

    @property
    def n_views(self) -> int:
        return self.views.shape[0]


def group_views(tensor: np.ndarray) -> ViewSet:
    """Split ``[H, W, F]`` into ``ceil(F / 3)`` three-channel views.

    Missing channels of the last view are zero-filled.
    """
    t = np.asarray(tensor)
    if t.ndim != 3 or t.shape[2] < 1:
        raise ValueError(f"expected [H, W, F] with F >= 1, got shape {t.shape}")
    h, w, f = t.shape
    n_views = -(-f // 3)
    pad = 3 * n_views - f
    if pad:
        t = np.concatenate([t, np.zeros((h, w, pad), dtype=t.dtype)], axis=2)
    views = t.reshape(h, w, n_views, 3).transpose(2, 0, 1, 3).copy()
    return ViewSet(views, pad)


def ungroup_views(views: ViewSet) -> np.ndarray:
    v = views.views
    n_views, h, w, _ = v.shape
    flat = v.transpose(1, 2, 0, 3).reshape(h, w, 3 * n_views)
    return flat[:, :, : 3 * n_views - views.pad_channels].copy()


def rotate(tensor: np.ndarray, theta: int, axes: tuple[int, int] = (0, 1)) -> np.ndarray:
    """Counterclockwise rotation of the spatial grid by ``theta`` degrees.

    ``axes`` names the (row, column) axes; use ``(1, 2)`` for view stacks.
    """
    if theta not in ANGLES:
        raise InvalidAngleError(f"rotation must be one of {ANGLES}, got {theta}")
    return np.ascontiguousarray(np.rot90(tensor, k=theta // 90, axes=axes))


@dataclass(frozen=True)
class ReprConfig:
    kind: str = "voxel"
    bins: int = DEFAULT_BINS
    kernel: EstKernel = field(default_factory=EstKernel)
    hats: HatsConfig = field(default_factory=HatsConfig)

    def validate(self) -> None:
        if self.kind not in ("voxel", "hats", "est"):
            raise InvalidConfigError(f"unknown representation {self.kind!r}")
        if self.kind == "hats":
            self.hats.validate()
        elif self.kind == "est":
            self.kernel.validate()


def represent(stream: EventStream, config: ReprConfig | None = None) -> np.ndarray:
    config = config or ReprConfig()
    config.validate()
    if config.kind == "voxel":
        return voxel_grid(stream, config.bins)
    if config.kind == "hats":
        return hats(stream, config.hats)
    return est(stream, config.bins, config.kernel)
