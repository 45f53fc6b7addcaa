"""Frame-to-event simulation under a contrast-threshold pixel model.

Each pixel tracks log intensity, linearly interpolated between consecutive
frames, and fires whenever it moves a whole threshold step away from the
level of its last event. Optional non-idealities: random thresholds
(global or per pixel), a refractory period and uniform background noise.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image
from scipy import ndimage

from ._backend import kernels as _default_kernels
from .errors import ImageLargerThanCanvasError, InvalidConfigError
from .events import EventStream

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


@dataclass(frozen=True)
class Fixed:
    c: float = 0.06


@dataclass(frozen=True)
class Uniform:
    """One threshold per sequence drawn from U[lo, hi)."""

    lo: float = 0.05
    hi: float = 0.5


@dataclass(frozen=True)
class PerPixelUniform:
    """One threshold per pixel drawn from U[lo, hi)."""

    lo: float = 0.05
    hi: float = 0.5


ThresholdMode = Union[Fixed, Uniform, PerPixelUniform]


@dataclass(frozen=True)
class SimulatorConfig:
    threshold_mode: ThresholdMode = field(default_factory=Fixed)
    refractory: float = 0.0  # microseconds
    log_eps: float = 1e-3
    noise_rate: float = 0.0  # events per pixel per second
    seed: int = 0

    def validate(self) -> None:
        mode = self.threshold_mode
        if isinstance(mode, Fixed):
            if not mode.c > 0:
                raise InvalidConfigError(f"fixed threshold must be positive, got {mode.c}")
        elif isinstance(mode, (Uniform, PerPixelUniform)):
            if not (0 < mode.lo < mode.hi):
                raise InvalidConfigError(f"need 0 < lo < hi, got lo={mode.lo} hi={mode.hi}")
        else:
            raise InvalidConfigError(f"unknown threshold mode {mode!r}")
        if not self.refractory >= 0:
            raise InvalidConfigError("refractory period must be >= 0")
        if not self.log_eps > 0:
            raise InvalidConfigError("log_eps must be positive")
        if not self.noise_rate >= 0:
            raise InvalidConfigError("noise_rate must be >= 0")
        if self.seed < 0:
            raise InvalidConfigError("seed must be non-negative")


def threshold_mode_from(kind: str, c: float = 0.06, lo: float = 0.05, hi: float = 0.5) -> ThresholdMode:
    kind = kind.lower()
    if kind == "fixed":
        return Fixed(c)
    if kind == "uniform":
        return Uniform(lo, hi)
    if kind in ("perpixel", "per_pixel", "perpixeluniform"):
        return PerPixelUniform(lo, hi)
    raise InvalidConfigError(f"unknown threshold mode {kind!r}")


def load_simulator_config(path: str | os.PathLike, **overrides) -> SimulatorConfig:
    """Read the ``[simulator]`` table of a TOML file.

    Keys: ``threshold_mode``, ``c``, ``c_lo``, ``c_hi``, ``refractory_us``,
    ``log_eps``, ``noise_rate``, ``seed``. Non-None ``overrides`` (same
    keys) take precedence over the file.
    """
    with open(path, "rb") as fh:
        table = tomllib.load(fh).get("simulator", {})
    table.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_mapping(table)


def config_from_mapping(table: dict) -> SimulatorConfig:
    known = {"threshold_mode", "c", "c_lo", "c_hi", "refractory_us", "log_eps", "noise_rate", "seed"}
    unknown = set(table) - known
    if unknown:
        raise InvalidConfigError(f"unknown simulator keys: {sorted(unknown)}")
    mode = threshold_mode_from(
        str(table.get("threshold_mode", "fixed")),
        float(table.get("c", 0.06)),
        float(table.get("c_lo", 0.05)),
        float(table.get("c_hi", 0.5)),
    )
    cfg = SimulatorConfig(
        threshold_mode=mode,
        refractory=float(table.get("refractory_us", 0.0)),
        log_eps=float(table.get("log_eps", 1e-3)),
        noise_rate=float(table.get("noise_rate", 0.0)),
        seed=int(table.get("seed", 0)),
    )
    cfg.validate()
    return cfg


@dataclass
class FrameSequence:
    timestamps: np.ndarray  # microseconds, strictly increasing
    frames: np.ndarray  # (T, H, W) intensities in [0, 1]

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        self.frames = np.asarray(self.frames, dtype=np.float64)

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    def validate(self) -> None:
        if self.frames.ndim != 3:
            raise InvalidConfigError(f"frames must be (T, H, W), got shape {self.frames.shape}")
        if len(self.timestamps) != len(self.frames) or len(self.frames) < 2:
            raise InvalidConfigError("need at least two frames with one timestamp each")
        if np.any(np.diff(self.timestamps) <= 0):
            raise InvalidConfigError("frame timestamps must be strictly increasing")
        if not np.all(np.isfinite(self.frames)):
            raise InvalidConfigError("frames contain non-finite intensities")
        if self.frames.min() < 0 or self.frames.max() > 1:
            raise InvalidConfigError("frame intensities must lie in [0, 1]")


@dataclass(frozen=True)
class SaccadePattern:
    segments: tuple = ((3.0, -6.0), (3.0, 6.0), (-6.0, 0.0))
    frames_per_segment: int = 11

    def validate(self) -> None:
        if len(self.segments) < 1:
            raise InvalidConfigError("saccade needs at least one segment")
        if self.frames_per_segment < 2:
            raise InvalidConfigError("frames_per_segment must be >= 2")


# 100 ms per segment with the default pattern
DEFAULT_FRAME_PERIOD = 10_000


def log_intensity(frame, log_eps: float = 1e-3) -> np.ndarray:
    return np.log(np.asarray(frame, dtype=np.float64) + log_eps)


def sample_threshold(mode: ThresholdMode, rng: np.random.Generator, shape=None):
    """Contrast threshold(s) for one sequence.

    ``Fixed`` returns its constant, ``Uniform`` one scalar draw and
    ``PerPixelUniform`` an array of ``shape`` draws.
    """
    if isinstance(mode, Fixed):
        return float(mode.c)
    if isinstance(mode, Uniform):
        return float(rng.uniform(mode.lo, mode.hi))
    if isinstance(mode, PerPixelUniform):
        if shape is None:
            raise ValueError("per-pixel thresholds need a shape")
        return rng.uniform(mode.lo, mode.hi, size=shape)
    raise InvalidConfigError(f"unknown threshold mode {mode!r}")


def _noise_events(rng, rate, height, width, t_start, t_end):
    duration_s = (t_end - t_start) * 1e-6
    counts = rng.poisson(rate * duration_s, size=(height, width))
    total = int(counts.sum())
    yy, xx = np.divmod(np.repeat(np.arange(height * width), counts.ravel()), width)
    t = rng.uniform(t_start, t_end, size=total)
    p = np.where(rng.random(total) < 0.5, -1, 1).astype(np.int8)
    return xx.astype(np.int64), yy.astype(np.int64), t, p


def simulate(frames: FrameSequence, config: SimulatorConfig | None = None, kernels=None) -> EventStream:
    """Generate a time-sorted event stream from ``frames``.

    Event timestamps are the interpolated crossing instants rounded to the
    nearest microsecond. Crossings inside a pixel's refractory window are
    dropped without moving its reference level. ``kernels`` selects a
    backend module (defaults to the compiled one when built).
    """
    config = config or SimulatorConfig()
    config.validate()
    frames.validate()
    kernels = kernels or _default_kernels
    rng = np.random.default_rng(config.seed)
    h, w = frames.height, frames.width
    thr = np.broadcast_to(np.asarray(sample_threshold(config.threshold_mode, rng, (h, w)), np.float64), (h, w))
    logf = log_intensity(frames.frames, config.log_eps)
    ts = frames.timestamps.astype(np.float64)
    x, y, t, p = kernels.simulate_pixels(logf, ts, np.array(thr), float(config.refractory))
    if config.noise_rate > 0:
        nx, ny, nt, np_ = _noise_events(rng, config.noise_rate, h, w, ts[0], ts[-1])
        x = np.concatenate([x, nx])
        y = np.concatenate([y, ny])
        t = np.concatenate([t, nt])
        p = np.concatenate([p, np_])
    t_us = np.clip(np.rint(t), ts[0], ts[-1]).astype(np.uint64)
    order = np.argsort(t_us, kind="stable")
    return EventStream(w, h, x[order], y[order], t_us[order], p[order])


def saccade_frames(
    image,
    pattern: SaccadePattern | None = None,
    canvas: tuple[int, int] | None = None,
    frame_period: int = DEFAULT_FRAME_PERIOD,
) -> FrameSequence:
    """Translate a still image along a closed (or open) polyline.

    The image starts centred on a ``canvas = (height, width)`` of zeros and
    moves at constant velocity along each segment; intermediate positions
    are bilinearly resampled. Consecutive segments share their endpoint
    frame, so the sequence has ``1 + S * (frames_per_segment - 1)`` frames.
    """
    pattern = pattern or SaccadePattern()
    pattern.validate()
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise InvalidConfigError("saccade input must be a single-channel image")
    ih, iw = img.shape
    ch, cw = canvas if canvas is not None else (ih + 16, iw + 16)
    if ih > ch or iw > cw:
        raise ImageLargerThanCanvasError(f"image {ih}x{iw} does not fit canvas {ch}x{cw}")
    if frame_period <= 0:
        raise InvalidConfigError("frame_period must be positive")

    n = pattern.frames_per_segment
    positions = [(0.0, 0.0)]
    px = py = 0.0
    for dx, dy in pattern.segments:
        for k in range(1, n):
            s = k / (n - 1)
            positions.append((px + s * dx, py + s * dy))
        px += dx
        py += dy

    oy0 = (ch - ih) // 2
    ox0 = (cw - iw) // 2
    rows, cols = np.mgrid[0:ch, 0:cw].astype(np.float64)
    out = np.empty((len(positions), ch, cw))
    for i, (dx, dy) in enumerate(positions):
        coords = [rows - (oy0 + dy), cols - (ox0 + dx)]
        out[i] = ndimage.map_coordinates(img, coords, order=1, mode="grid-constant", cval=0.0)
    np.clip(out, 0.0, 1.0, out=out)
    timestamps = np.arange(len(positions), dtype=np.int64) * int(frame_period)
    return FrameSequence(timestamps, out)


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Grayscale image as floats in [0, 1]."""
    with Image.open(path) as im:
        if im.mode in ("I;16", "I;16B", "I;16L", "I"):
            arr = np.asarray(im, dtype=np.float64)
            return np.clip(arr / 65535.0, 0.0, 1.0)
        return np.asarray(im.convert("L"), dtype=np.float64) / 255.0


def save_pgm(frame: np.ndarray, path: str | os.PathLike) -> None:
    data = np.rint(np.clip(frame, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(data, mode="L").save(path, format="PPM")


def load_frame_dir(directory: str | os.PathLike) -> FrameSequence:
    """``*.pgm`` frames (lexicographic order) plus ``timestamps.txt``."""
    directory = Path(directory)
    files = sorted(directory.glob("*.pgm"))
    ts_file = directory / "timestamps.txt"
    if not ts_file.exists():
        raise InvalidConfigError(f"{directory}: missing timestamps.txt")
    stamps = [int(line) for line in ts_file.read_text().split()]
    if len(stamps) != len(files):
        raise InvalidConfigError(f"{directory}: {len(files)} frames but {len(stamps)} timestamps")
    frames = np.stack([load_image(f) for f in files]) if files else np.zeros((0, 0, 0))
    seq = FrameSequence(np.array(stamps, dtype=np.int64), frames)
    seq.validate()
    return seq


def save_frame_dir(seq: FrameSequence, directory: str | os.PathLike) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    width = max(6, len(str(len(seq.frames))))
    for i, frame in enumerate(seq.frames):
        save_pgm(frame, directory / f"frame_{i:0{width}d}.pgm")
    (directory / "timestamps.txt").write_text("".join(f"{int(t)}\n" for t in seq.timestamps))
