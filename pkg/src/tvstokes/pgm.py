"""PGM (netpbm P2/P5) reading and P5 writing.

Intensities map to [0, 1] by 1/maxval on read; writing clamps to [0, 1] and
quantises with round-half-up.  16-bit rasters use the big-endian byte order
of the format.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .fields import as_scalar_field

_WHITESPACE = b" \t\r\n\v\f"


class PgmError(ValueError):
    """Malformed or unsupported PGM content."""


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Next header token starting at pos, skipping whitespace and # comments."""
    while pos < len(data):
        c = data[pos:pos + 1]
        if c in _WHITESPACE:
            pos += 1
        elif c == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        else:
            break
    if pos >= len(data):
        raise PgmError("unexpected end of header")
    start = pos
    while pos < len(data) and data[pos:pos + 1] not in _WHITESPACE and data[pos:pos + 1] != b"#":
        pos += 1
    return data[start:pos], pos


def _header_int(data: bytes, pos: int, what: str) -> tuple[int, int]:
    token, pos = _next_token(data, pos)
    try:
        value = int(token)
    except ValueError:
        raise PgmError(f"bad {what} field {token!r}") from None
    if value <= 0:
        raise PgmError(f"{what} must be positive, got {value}")
    return value, pos


def read_pgm(path) -> np.ndarray:
    """Read a P2 or P5 PGM file into a scalar field scaled to [0, 1]."""
    data = Path(path).read_bytes()
    try:
        magic, pos = _next_token(data, 0)
    except PgmError:
        raise PgmError(f"{path}: empty file") from None
    if magic not in (b"P2", b"P5"):
        raise PgmError(f"{path}: unsupported magic {magic!r}, expected P2 or P5")
    try:
        width, pos = _header_int(data, pos, "width")
        height, pos = _header_int(data, pos, "height")
        maxval, pos = _header_int(data, pos, "maxval")
    except PgmError as exc:
        raise PgmError(f"{path}: {exc}") from None
    if maxval > 65535:
        raise PgmError(f"{path}: maxval {maxval} exceeds 65535")
    count = height * width
    if magic == b"P5":
        if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE:
            raise PgmError(f"{path}: missing whitespace before raster")
        raster = data[pos + 1:]
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = count * dtype.itemsize
        if len(raster) < need:
            raise PgmError(f"{path}: truncated raster, need {need} bytes, have {len(raster)}")
        values = np.frombuffer(raster[:need], dtype=dtype).astype(np.float64)
    else:
        values = np.empty(count)
        for i in range(count):
            try:
                token, pos = _next_token(data, pos)
            except PgmError:
                raise PgmError(f"{path}: truncated raster, need {count} samples, have {i}") from None
            try:
                values[i] = int(token)
            except ValueError:
                raise PgmError(f"{path}: bad sample {token!r}") from None
    if values.max(initial=0) > maxval:
        raise PgmError(f"{path}: sample exceeds maxval {maxval}")
    return values.reshape(height, width) / maxval


def write_pgm(path, u: np.ndarray, maxval: int = 255) -> None:
    """Write a scalar field as binary (P5) PGM, clamping values to [0, 1]."""
    u = as_scalar_field(u)
    if maxval not in (255, 65535):
        raise ValueError(f"maxval must be 255 or 65535, got {maxval}")
    # floor(x + 0.5) is round-half-up; clamping first keeps it <= maxval
    q = np.floor(np.clip(u, 0.0, 1.0) * maxval + 0.5)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    h, w = u.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    Path(path).write_bytes(header + q.astype(dtype).tobytes())
