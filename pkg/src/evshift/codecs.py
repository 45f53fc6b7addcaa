"""Event file codecs: EVT1 (native binary), N-Caltech ATIS ``.bin`` and CSV.

EVT1 layout, little-endian::

    "EVT1" | version u16 = 1 | width u16 | height u16 | count u64
    count x {x u16, y u16, t u64 (us), p i8, pad u8 = 0}

N-Caltech records are 5 bytes: x, y, then a 24-bit big-endian word whose
top bit is the polarity (1 = ON) and whose low 23 bits are the timestamp in
microseconds. The format carries no geometry, so the reader takes it.
"""

from __future__ import annotations

import io
import os
import struct
import warnings
from pathlib import Path

import numpy as np

from .errors import BoundsError, FormatError
from .events import EventStream, validate_stream

EVT1_MAGIC = b"EVT1"
EVT1_VERSION = 1
EVT1_HEADER = struct.Struct("<4sHHHQ")
EVT1_RECORD = np.dtype(
    [("x", "<u2"), ("y", "<u2"), ("t", "<u8"), ("p", "i1"), ("pad", "u1")]
)
assert EVT1_HEADER.size == 18 and EVT1_RECORD.itemsize == 14

NCALTECH_RECORD_SIZE = 5
NCALTECH_MAX_T = (1 << 23) - 1
# ATIS sensor used for N-Caltech101
NCALTECH_DEFAULT_GEOMETRY = (304, 240)

CSV_HEADER = "x,y,t_us,p"

FORMATS = ("evt1", "ncaltech", "csv")
EXTENSIONS = {"evt1": ".evt", "ncaltech": ".bin", "csv": ".csv"}


def normalize_format(fmt: str) -> str:
    f = fmt.lower().replace("_bin", "")
    if f not in FORMATS:
        raise ValueError(f"unknown event format {fmt!r}; expected one of {FORMATS}")
    return f


def _check(stream: EventStream, path) -> EventStream:
    report = validate_stream(stream)
    for issue in report.issues:
        cls = BoundsError if "out of bounds" in issue else FormatError
        raise cls(f"{path}: {issue}")
    return stream


def _read_evt1(data: bytes, path) -> EventStream:
    if len(data) < EVT1_HEADER.size:
        raise FormatError(f"{path}: truncated EVT1 header")
    magic, version, width, height, count = EVT1_HEADER.unpack_from(data)
    if magic != EVT1_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != EVT1_VERSION:
        raise FormatError(f"{path}: unsupported EVT1 version {version}")
    expected = EVT1_HEADER.size + count * EVT1_RECORD.itemsize
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes for {count} events, got {len(data)}")
    rec = np.frombuffer(data, dtype=EVT1_RECORD, count=count, offset=EVT1_HEADER.size)
    return EventStream(width, height, rec["x"], rec["y"], rec["t"], rec["p"])


def _encode_evt1(stream: EventStream) -> bytes:
    if stream.width > 0xFFFF or stream.height > 0xFFFF:
        raise FormatError("EVT1 geometry limited to 65535 pixels per side")
    rec = np.zeros(len(stream), dtype=EVT1_RECORD)
    rec["x"] = stream.x
    rec["y"] = stream.y
    rec["t"] = stream.t
    rec["p"] = stream.p
    header = EVT1_HEADER.pack(EVT1_MAGIC, EVT1_VERSION, stream.width, stream.height, len(stream))
    return header + rec.tobytes()


def _read_ncaltech(data: bytes, path, width: int, height: int) -> EventStream:
    if len(data) % NCALTECH_RECORD_SIZE:
        raise FormatError(f"{path}: size {len(data)} is not a multiple of {NCALTECH_RECORD_SIZE}")
    raw = np.frombuffer(data, dtype=np.uint8).reshape(-1, NCALTECH_RECORD_SIZE)
    x = raw[:, 0].astype(np.int64)
    y = raw[:, 1].astype(np.int64)
    b2 = raw[:, 2].astype(np.uint64)
    p = np.where(b2 >> 7, 1, -1).astype(np.int8)
    t = ((b2 & 0x7F) << 16) | (raw[:, 3].astype(np.uint64) << 8) | raw[:, 4].astype(np.uint64)
    return EventStream(width, height, x, y, t, p)


def _encode_ncaltech(stream: EventStream) -> bytes:
    n = len(stream)
    if n and (stream.x.max() > 255 or stream.y.max() > 255):
        raise FormatError("N-Caltech records hold coordinates up to 255")
    if n and int(stream.t.max()) > NCALTECH_MAX_T:
        raise FormatError("N-Caltech records hold timestamps below 2^23 us")
    raw = np.zeros((n, NCALTECH_RECORD_SIZE), dtype=np.uint8)
    t = stream.t.astype(np.uint64)
    raw[:, 0] = stream.x
    raw[:, 1] = stream.y
    raw[:, 2] = ((t >> 16) & 0x7F) | np.where(stream.p == 1, 0x80, 0).astype(np.uint64)
    raw[:, 3] = (t >> 8) & 0xFF
    raw[:, 4] = t & 0xFF
    return raw.tobytes()


_CSV_DTYPE = [("x", "i8"), ("y", "i8"), ("t", "u8"), ("p", "i1")]


def _read_csv(text: str, path, width: int | None, height: int | None) -> EventStream:
    lines = text.splitlines()
    if not lines or lines[0].strip().replace(" ", "") != CSV_HEADER:
        raise FormatError(f"{path}: missing CSV header {CSV_HEADER!r}")
    body = "\n".join(lines[1:])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # empty-body warning from loadtxt
        try:
            rec = np.loadtxt(io.StringIO(body), delimiter=",", dtype=_CSV_DTYPE, ndmin=1)
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from None
    if width is None:
        width = int(rec["x"].max()) + 1 if rec.size else 0
    if height is None:
        height = int(rec["y"].max()) + 1 if rec.size else 0
    return EventStream(width, height, rec["x"], rec["y"], rec["t"], rec["p"])


def _encode_csv(stream: EventStream) -> bytes:
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    for x, y, t, p in zip(stream.x.tolist(), stream.y.tolist(), stream.t.tolist(), stream.p.tolist()):
        out.write(f"{x},{y},{t},{p}\n")
    return out.getvalue().encode()


def read_events(
    path: str | os.PathLike,
    format: str = "evt1",
    width: int | None = None,
    height: int | None = None,
) -> EventStream:
    """Decode an event file.

    ``width``/``height`` are required geometry for N-Caltech files (defaults
    to the ATIS sensor) and optional for CSV, where they are otherwise
    inferred from the largest coordinates. They are ignored for EVT1.

    Raises :class:`FormatError` for malformed or unsorted data and
    :class:`BoundsError` for events outside the geometry.
    """
    fmt = normalize_format(format)
    data = Path(path).read_bytes()
    if fmt == "evt1":
        stream = _read_evt1(data, path)
    elif fmt == "ncaltech":
        w, h = NCALTECH_DEFAULT_GEOMETRY
        stream = _read_ncaltech(data, path, width or w, height or h)
    else:
        stream = _read_csv(data.decode(), path, width, height)
    return _check(stream, path)


def encode_events(stream: EventStream, format: str = "evt1") -> bytes:
    fmt = normalize_format(format)
    if fmt == "evt1":
        return _encode_evt1(stream)
    if fmt == "ncaltech":
        return _encode_ncaltech(stream)
    return _encode_csv(stream)


def write_events(stream: EventStream, path: str | os.PathLike, format: str = "evt1") -> int:
    """Encode ``stream`` to ``path``; returns the number of bytes written."""
    payload = encode_events(stream, format)
    Path(path).write_bytes(payload)
    return len(payload)


def evt1_header(path: str | os.PathLike) -> dict:
    with open(path, "rb") as fh:
        head = fh.read(EVT1_HEADER.size)
    if len(head) < EVT1_HEADER.size:
        raise FormatError(f"{path}: truncated EVT1 header")
    magic, version, width, height, count = EVT1_HEADER.unpack(head)
    if magic != EVT1_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    return {"version": version, "width": width, "height": height, "count": count}
