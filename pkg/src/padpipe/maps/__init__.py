"""Per-frame intrinsic property maps: depth, illuminant, and saliency."""

from .propmap import PropertyMap
from .superpixels import Region, SuperpixelGraph, segment_superpixels
from .illuminant import estimate_illuminant_map
from .saliency import (
    BackgroundWeights,
    boundary_connectivity,
    estimate_saliency_map,
    solve_saliency_scores,
)
from .depth import DepthProviderConfig, provide_depth_map

__all__ = [
    "PropertyMap",
    "Region",
    "SuperpixelGraph",
    "segment_superpixels",
    "estimate_illuminant_map",
    "BackgroundWeights",
    "boundary_connectivity",
    "estimate_saliency_map",
    "solve_saliency_scores",
    "DepthProviderConfig",
    "provide_depth_map",
]
