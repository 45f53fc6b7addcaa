"""TEN1 dense tensor files and CSV matrix files.

TEN1 layout, little-endian: ``"TEN1" | version u16 = 1 | ndim u8 |
ndim x u32 dims | float32 payload, row-major``.
"""

from __future__ import annotations

import io
import os
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

TEN1_MAGIC = b"TEN1"
TEN1_VERSION = 1
_PREFIX = struct.Struct("<4sHB")


def encode_tensor(array: np.ndarray) -> bytes:
    a = np.asarray(array)
    if a.ndim > 255:
        raise ValueError("TEN1 supports at most 255 dimensions")
    if not np.all(np.isfinite(a)):
        raise ValueError("tensor contains non-finite values")
    head = _PREFIX.pack(TEN1_MAGIC, TEN1_VERSION, a.ndim) + struct.pack(f"<{a.ndim}I", *a.shape)
    return head + np.ascontiguousarray(a, dtype="<f4").tobytes()


def decode_tensor(data: bytes, path="<bytes>") -> np.ndarray:
    if len(data) < _PREFIX.size:
        raise FormatError(f"{path}: truncated TEN1 header")
    magic, version, ndim = _PREFIX.unpack_from(data)
    if magic != TEN1_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != TEN1_VERSION:
        raise FormatError(f"{path}: unsupported TEN1 version {version}")
    off = _PREFIX.size + 4 * ndim
    if len(data) < off:
        raise FormatError(f"{path}: truncated TEN1 dims")
    dims = struct.unpack_from(f"<{ndim}I", data, _PREFIX.size)
    count = int(np.prod(dims, dtype=np.int64))
    if len(data) != off + 4 * count:
        raise FormatError(f"{path}: payload size does not match dims {dims}")
    return np.frombuffer(data, dtype="<f4", count=count, offset=off).reshape(dims).astype(np.float32)


def write_tensor(array: np.ndarray, path: str | os.PathLike) -> int:
    payload = encode_tensor(array)
    Path(path).write_bytes(payload)
    return len(payload)


def read_tensor(path: str | os.PathLike) -> np.ndarray:
    return decode_tensor(Path(path).read_bytes(), path)


def tensor_dims(path: str | os.PathLike) -> tuple[int, ...]:
    with open(path, "rb") as fh:
        head = fh.read(_PREFIX.size)
        if len(head) < _PREFIX.size:
            raise FormatError(f"{path}: truncated TEN1 header")
        magic, _, ndim = _PREFIX.unpack(head)
        if magic != TEN1_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        return struct.unpack(f"<{ndim}I", fh.read(4 * ndim))


def write_matrix_csv(matrix: np.ndarray, path: str | os.PathLike) -> None:
    m = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    header = ",".join(f"f{i}" for i in range(m.shape[1]))
    np.savetxt(path, m, delimiter=",", header=header, comments="", fmt="%.17g")


def read_matrix(path: str | os.PathLike) -> np.ndarray:
    """Load an ``n x d`` matrix from a TEN1 file (ndim 2) or a CSV with an
    ``f0,f1,...`` header. Format is sniffed from the first bytes."""
    data = Path(path).read_bytes()
    if data[:4] == TEN1_MAGIC:
        m = decode_tensor(data, path).astype(np.float64)
        if m.ndim != 2:
            raise FormatError(f"{path}: expected a 2-D tensor, got dims {m.shape}")
        return m
    text = data.decode()
    first, _, rest = text.partition("\n")
    cols = [c.strip() for c in first.split(",")]
    if not cols or cols != [f"f{i}" for i in range(len(cols))]:
        raise FormatError(f"{path}: expected header f0,f1,...")
    try:
        m = np.loadtxt(io.StringIO(rest), delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if m.size == 0:
        m = m.reshape(0, len(cols))
    if m.shape[1] != len(cols):
        raise FormatError(f"{path}: rows have {m.shape[1]} columns, header names {len(cols)}")
    if not np.all(np.isfinite(m)):
        raise FormatError(f"{path}: non-finite values")
    return m
