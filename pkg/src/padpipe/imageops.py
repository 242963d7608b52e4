"""Shared raster helpers: color conversion, resizing, gradients."""

from __future__ import annotations

import numpy as np

# sRGB -> XYZ (D65) matrix
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_D65_WHITE = np.array([0.95047, 1.0, 1.08883])


def srgb_to_linear(rgb: np.ndarray) -> np.ndarray:
    """Undo the sRGB transfer curve. Input float in [0,1]."""
    rgb = np.asarray(rgb, dtype=np.float64)
    return np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)


def rgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    """Convert an (..., 3) sRGB raster in [0,1] to CIE-Lab (D65)."""
    lin = srgb_to_linear(rgb)
    xyz = lin @ _SRGB_TO_XYZ.T
    t = xyz / _D65_WHITE
    delta = 6.0 / 29.0
    f = np.where(t > delta**3, np.cbrt(t), t / (3 * delta**2) + 4.0 / 29.0)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def _overlap_matrix(n_src: int, n_dst: int) -> np.ndarray:
    """Row i = fractional overlap of destination cell i with source cells."""
    edges_dst = np.linspace(0.0, n_src, n_dst + 1)
    mat = np.zeros((n_dst, n_src))
    for i in range(n_dst):
        lo, hi = edges_dst[i], edges_dst[i + 1]
        j0, j1 = int(np.floor(lo)), int(np.ceil(hi))
        for j in range(j0, min(j1, n_src)):
            mat[i, j] = min(hi, j + 1) - max(lo, j)
    return mat / (edges_dst[1] - edges_dst[0])


def area_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Box-filter (area-average) resize of a 2-D raster. Exact and
    deterministic for any size ratio."""
    img = np.asarray(img, dtype=np.float64)
    rh = _overlap_matrix(img.shape[0], out_h)
    rw = _overlap_matrix(img.shape[1], out_w)
    return rh @ img @ rw.T


def bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of a 2-D or (H, W, C) raster, edge-clamped."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    ys = (np.arange(out_h) + 0.5) * (h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (w / out_w) - 0.5
    ys = np.clip(ys, 0, h - 1)
    xs = np.clip(xs, 0, w - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    if img.ndim == 3:
        wy = wy[..., None]
        wx = wx[..., None]
    a = img[np.ix_(y0, x0)]
    b = img[np.ix_(y0, x1)]
    c = img[np.ix_(y1, x0)]
    d = img[np.ix_(y1, x1)]
    return (a * (1 - wy) * (1 - wx) + b * (1 - wy) * wx
            + c * wy * (1 - wx) + d * wy * wx)


def gradient_magnitude(img: np.ndarray) -> np.ndarray:
    """Central-difference gradient magnitude of a 2-D raster."""
    gy, gx = np.gradient(np.asarray(img, dtype=np.float64))
    return np.sqrt(gx * gx + gy * gy)
