"""Grayscale PFM (portable float map) reader and writer.

Header: "Pf\n<width> <height>\n<scale>\n" followed by float32 rows stored
bottom-up. A negative scale marks little-endian payloads; files are written
with scale -1.0. Round-trips are bit-exact for float32 data.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import DataError


def _read_token(fh) -> bytes:
    tok = b""
    while True:
        c = fh.read(1)
        if not c:
            raise DataError("unexpected end of PFM header")
        if c in b" \t\r\n":
            if tok:
                return tok
            continue
        tok += c


def read_pfm(path) -> np.ndarray:
    """Read a grayscale PFM file into an (H, W) float32 array, top-down."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"map file missing: {path}")
    with open(path, "rb") as fh:
        magic = _read_token(fh)
        if magic != b"Pf":
            raise DataError(f"{path}: not a grayscale PFM (magic {magic!r})")
        try:
            width = int(_read_token(fh))
            height = int(_read_token(fh))
            scale = float(_read_token(fh))
        except ValueError:
            raise DataError(f"{path}: malformed PFM header") from None
        if width <= 0 or height <= 0:
            raise DataError(f"{path}: bad PFM dimensions {width}x{height}")
        count = width * height
        buf = fh.read(4 * count)
        if len(buf) != 4 * count:
            raise DataError(f"{path}: truncated PFM payload")
    dtype = "<f4" if scale < 0 else ">f4"
    data = np.frombuffer(buf, dtype=dtype).reshape(height, width)
    # rows are stored bottom-up
    data = np.flipud(data).astype(np.float32)
    if scale not in (-1.0, 1.0) and scale != 0:
        data = data * abs(scale)
    return np.ascontiguousarray(data)


def write_pfm(path, data: np.ndarray) -> None:
    """Write an (H, W) array as a little-endian grayscale PFM, scale -1.0."""
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim != 2:
        raise DataError(f"PFM writer expects a 2-D array, got shape {arr.shape}")
    height, width = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"Pf\n{width} {height}\n-1.0\n".encode("ascii"))
        fh.write(np.flipud(arr).astype("<f4").tobytes())
