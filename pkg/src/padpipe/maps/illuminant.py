"""Illuminant chromaticity maps from inverse-intensity-chromaticity voting.

For each superpixel and color channel, usable pixels are plotted as points
(1/(R+G+B), channel chromaticity). Pixels influenced by specular reflection
fall on lines whose intercept at zero inverse intensity is the illuminant
chromaticity, so the channel estimate is the intercept of the dominant line,
found by a Hough-style vote: pairs of sample points are joined, each pair's
line votes for the intercept bin it crosses the axis in, and the winning
bin's votes are averaged. Voting tolerates the diffuse-pixel majority,
unlike a least-squares fit.
"""

from __future__ import annotations

import numpy as np

from ..model import PropertyKind
from ..preprocess import Frame
from .propmap import PropertyMap
from .superpixels import SuperpixelGraph

DEFAULT_BIN_WIDTH = 0.01
DEFAULT_INTENSITY_LOW = 0.03
DEFAULT_INTENSITY_HIGH = 0.98
DEFAULT_MIN_USABLE = 16

NEUTRAL = np.array([1.0, 1.0, 1.0]) / 3.0


def _vote_intercept(x: np.ndarray, sig: np.ndarray, bin_width: float) -> float:
    """Intercept of the dominant line through the (x, sig) point cloud."""
    order = np.argsort(x, kind="stable")
    x = x[order]
    sig = sig[order]
    n = len(x)
    spread = float(x[-1] - x[0])
    votes = []
    if spread > 0:
        offsets = sorted({max(1, n // 2), max(1, n // 3), max(1, n // 4)})
        dx_min = max(1e-9, 0.05 * spread)
        for off in offsets:
            xi, xj = x[:-off], x[off:]
            si, sj = sig[:-off], sig[off:]
            dx = xj - xi
            ok = dx >= dx_min
            if not np.any(ok):
                continue
            slope = (sj[ok] - si[ok]) / dx[ok]
            b = si[ok] - slope * xi[ok]
            votes.append(b[(b >= 0.0) & (b <= 1.0)])
    votes = np.concatenate(votes) if votes else np.empty(0)
    if votes.size == 0:
        # no usable baseline: the cloud is a single vertical cluster, so the
        # zero-slope reading is the chromaticity itself
        return float(np.clip(np.median(sig), 0.0, 1.0))
    nbins = int(round(1.0 / bin_width))
    hist, edges = np.histogram(votes, bins=nbins, range=(0.0, 1.0))
    smooth = hist.astype(np.float64)
    smooth[1:] += 0.5 * hist[:-1]
    smooth[:-1] += 0.5 * hist[1:]
    win = int(np.argmax(smooth))
    lo = edges[max(0, win - 1)]
    hi = edges[min(nbins, win + 2)]
    inliers = votes[(votes >= lo) & (votes <= hi)]
    if inliers.size == 0:
        return float((edges[win] + edges[win + 1]) / 2.0)
    return float(inliers.mean())


def _estimate_gamma(
    x: np.ndarray, sigmas: np.ndarray, bin_width: float
) -> np.ndarray:
    gamma = np.array(
        [_vote_intercept(x, sigmas[:, c], bin_width) for c in range(3)]
    )
    total = gamma.sum()
    if total <= 0:
        return NEUTRAL.copy()
    return gamma / total


def estimate_illuminant_map(
    frame: Frame,
    graph: SuperpixelGraph,
    bin_width: float = DEFAULT_BIN_WIDTH,
    intensity_low: float = DEFAULT_INTENSITY_LOW,
    intensity_high: float = DEFAULT_INTENSITY_HIGH,
    min_usable: int = DEFAULT_MIN_USABLE,
) -> PropertyMap:
    """Estimate a per-superpixel illuminant chromaticity map.

    Pixels with normalized intensity below intensity_low or above
    intensity_high are excluded. Superpixels with fewer than min_usable
    usable pixels inherit the whole-frame estimate, which is neutral
    (1/3, 1/3, 1/3) when the frame itself has too few usable pixels.
    """
    rgb = frame.pixels.astype(np.float64) / 255.0
    total = rgb.sum(axis=2)
    mean_intensity = total / 3.0
    usable = (mean_intensity >= intensity_low) & (mean_intensity <= intensity_high)

    safe_total = np.where(total > 0, total, 1.0)
    inv_intensity = 1.0 / safe_total
    sigma = rgb / safe_total[..., None]

    flat_usable = usable.ravel()
    if int(flat_usable.sum()) >= min_usable:
        global_gamma = _estimate_gamma(
            inv_intensity.ravel()[flat_usable],
            sigma.reshape(-1, 3)[flat_usable],
            bin_width,
        )
    else:
        global_gamma = NEUTRAL.copy()

    labels = graph.labels.ravel()
    inv_flat = inv_intensity.ravel()
    sig_flat = sigma.reshape(-1, 3)
    gammas = np.empty((graph.n_regions, 3))
    for r in range(graph.n_regions):
        sel = (labels == r) & flat_usable
        if int(sel.sum()) < min_usable:
            gammas[r] = global_gamma
        else:
            gammas[r] = _estimate_gamma(inv_flat[sel], sig_flat[sel], bin_width)

    data = gammas[graph.labels].astype(np.float32)
    return PropertyMap(kind=PropertyKind.ILLUMINANT, data=data, source_frame=frame.index)
