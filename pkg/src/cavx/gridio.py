"""On-disk formats: CAVX binary grid dumps and PGM (P5) grayscale renders.

CAVX layout, all values little-endian:

    magic   4 bytes  b"CAVX"
    version u32      1
    kind    u32      0 = complex field, 1 = real density
    nx      u64
    ny      u64
    dx      f64
    dy      f64
    time    f64
    payload nx*ny*(2 if complex else 1)*8 bytes of IEEE-754 f64, row-major,
            interleaved (re, im) pairs for complex grids

Writes go to a temp file in the destination directory followed by an atomic
rename, so an interrupted run never leaves a truncated dump behind.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

MAGIC = b"CAVX"
VERSION = 1
KIND_COMPLEX = 0
KIND_REAL = 1

_HEADER = struct.Struct("<4sIIQQddd")


class CavxFormatError(ValueError):
    """Malformed CAVX file (bad magic, version, kind or payload size)."""


@dataclass
class GridDump:
    kind: int
    values: np.ndarray
    dx: float
    dy: float
    time: float

    @property
    def is_complex(self) -> bool:
        return self.kind == KIND_COMPLEX


def write_cavx(path, values: np.ndarray, dx: float, dy: float, time: float) -> None:
    """Write one grid; kind is inferred from the array dtype."""
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError("CAVX payload must be a 2D grid")
    if np.iscomplexobj(values):
        kind = KIND_COMPLEX
        payload = np.ascontiguousarray(values, dtype="<c16").tobytes()
    else:
        kind = KIND_REAL
        payload = np.ascontiguousarray(values, dtype="<f8").tobytes()
    nx, ny = values.shape
    header = _HEADER.pack(MAGIC, VERSION, kind, nx, ny, dx, dy, time)
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".cavx.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_cavx(path) -> GridDump:
    """Read and validate one dump; every header defect gets a distinct error."""
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) < _HEADER.size:
            raise CavxFormatError(
                f"truncated header: expected {_HEADER.size} bytes, got {len(raw)}"
            )
        magic, version, kind, nx, ny, dx, dy, time = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise CavxFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise CavxFormatError(f"unsupported version {version}, expected {VERSION}")
        if kind not in (KIND_COMPLEX, KIND_REAL):
            raise CavxFormatError(f"unknown grid kind {kind}")
        n_values = nx * ny * (2 if kind == KIND_COMPLEX else 1)
        expected = n_values * 8
        payload = fh.read(expected + 1)
        if len(payload) != expected:
            raise CavxFormatError(
                f"payload size mismatch: expected {expected} bytes, got {len(payload)}"
            )
    if kind == KIND_COMPLEX:
        values = np.frombuffer(payload, dtype="<c16").reshape(nx, ny).copy()
    else:
        values = np.frombuffer(payload, dtype="<f8").reshape(nx, ny).copy()
    return GridDump(kind=kind, values=values, dx=dx, dy=dy, time=time)


def write_pgm(path, values: np.ndarray) -> tuple[float, float]:
    """8-bit PGM (P5) render with linear min-max normalization per frame.

    Returns the (min, max) used for the scaling so it can be logged alongside.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ValueError("PGM payload must be a 2D grid")
    lo = float(values.min())
    hi = float(values.max())
    span = hi - lo
    if span == 0.0:
        img = np.zeros_like(values, dtype=np.uint8)
    else:
        img = np.clip((values - lo) / span * 255.0, 0, 255).astype(np.uint8)
    nx, ny = values.shape
    header = f"P5\n{ny} {nx}\n255\n".encode("ascii")
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".pgm.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(img.tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return lo, hi
