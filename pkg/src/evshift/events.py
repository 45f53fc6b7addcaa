"""Event-stream data model: container, validation, windowing, statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .errors import EmptyStreamError, InvalidWindowError


class Event(NamedTuple):
    x: int
    y: int
    t: int  # microseconds
    p: int  # -1 or +1


def _frozen(a: np.ndarray, dtype) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=dtype)
    if a.ndim != 1:
        a = a.reshape(-1)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EventStream:
    """Immutable columnar event stream.

    ``x``/``y`` hold pixel indices, ``t`` integer microseconds (uint64) and
    ``p`` polarity as int8 in {-1, +1}. The constructor does not validate;
    use :func:`validate_stream` for that. Arrays are read-only views.
    """

    width: int
    height: int
    x: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    y: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    t: np.ndarray = field(default_factory=lambda: np.zeros(0, np.uint64))
    p: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int8))

    def __post_init__(self):
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        object.__setattr__(self, "x", _frozen(self.x, np.int64))
        object.__setattr__(self, "y", _frozen(self.y, np.int64))
        object.__setattr__(self, "t", _frozen(self.t, np.uint64))
        object.__setattr__(self, "p", _frozen(self.p, np.int8))
        n = len(self.x)
        if not (len(self.y) == len(self.t) == len(self.p) == n):
            raise ValueError("event columns must have equal length")

    @classmethod
    def from_events(cls, width: int, height: int, events: Iterable[Event]) -> "EventStream":
        events = list(events)
        if not events:
            return cls(width, height)
        x, y, t, p = zip(*events)
        return cls(width, height, np.array(x), np.array(y), np.array(t, dtype=np.uint64), np.array(p))

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, i: int) -> Event:
        return Event(int(self.x[i]), int(self.y[i]), int(self.t[i]), int(self.p[i]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.p, other.p)
        )

    def __repr__(self) -> str:
        return f"EventStream({self.width}x{self.height}, n={len(self)})"

    def select(self, mask_or_index) -> "EventStream":
        return EventStream(
            self.width, self.height,
            self.x[mask_or_index], self.y[mask_or_index],
            self.t[mask_or_index], self.p[mask_or_index],
        )


@dataclass
class ValidationReport:
    issues: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        # truthy when problems were found
        return bool(self.issues)

    def __len__(self) -> int:
        return len(self.issues)

    @property
    def ok(self) -> bool:
        return not self.issues


@dataclass(frozen=True)
class EventStats:
    count: int
    duration: int  # microseconds
    mean_rate: float  # events per second
    positive_fraction: float


def _first(mask: np.ndarray) -> int | None:
    idx = np.flatnonzero(mask)
    return int(idx[0]) if idx.size else None


def validate_stream(stream: EventStream) -> ValidationReport:
    """Report every violated stream invariant with its first offending index."""
    report = ValidationReport()
    if len(stream) == 0:
        return report
    checks = [
        ("unsorted", np.concatenate([[False], stream.t[1:] < stream.t[:-1]])),
        ("x out of bounds", (stream.x < 0) | (stream.x >= stream.width)),
        ("y out of bounds", (stream.y < 0) | (stream.y >= stream.height)),
        ("invalid polarity", (stream.p != 1) & (stream.p != -1)),
    ]
    for name, mask in checks:
        i = _first(mask)
        if i is not None:
            report.issues.append(f"{name} at index {i}")
    return report


def normalize_timestamps(stream: EventStream, bins: int) -> np.ndarray:
    """Map timestamps affinely onto ``[0, bins - 1]``.

    A stream whose events all share one timestamp maps to all zeros.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if len(stream) == 0:
        raise EmptyStreamError("cannot normalize an empty stream")
    t = stream.t
    t0 = t.min()
    span = float(t.max() - t0)
    rel = (t - t0).astype(np.float64)
    if span == 0.0:
        return np.zeros(len(t), dtype=np.float64)
    # multiply before dividing so the last event lands exactly on bins - 1
    return rel * (bins - 1) / span


def slice_window(stream: EventStream, t0: int, t1: int) -> EventStream:
    """Events with ``t0 <= t < t1``. Assumes a time-sorted stream."""
    if t0 > t1:
        raise InvalidWindowError(f"window start {t0} after end {t1}")
    t0 = max(int(t0), 0)
    t1 = max(int(t1), 0)
    lo = np.searchsorted(stream.t, np.uint64(t0), side="left")
    hi = np.searchsorted(stream.t, np.uint64(t1), side="left")
    return stream.select(slice(lo, hi))


def stream_stats(stream: EventStream) -> EventStats:
    n = len(stream)
    if n == 0:
        return EventStats(0, 0, 0.0, 0.0)
    duration = int(stream.t.max() - stream.t.min()) if n > 1 else 0
    # rate is undefined for zero duration; reported as 0
    rate = n / (duration * 1e-6) if duration > 0 else 0.0
    pos = float(np.count_nonzero(stream.p == 1)) / n
    return EventStats(n, duration, rate, pos)
