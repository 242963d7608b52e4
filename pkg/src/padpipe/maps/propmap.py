"""The PropertyMap container shared by all three estimators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from ..model import PropertyKind

CHROMA_SUM_TOL = 1e-6


@dataclass
class PropertyMap:
    """Per-frame raster for one intrinsic property.

    Depth and saliency are single-channel (H, W) float32 in [0, 1];
    illuminant maps are (H, W, 3) float32 chromaticities whose channels sum
    to 1 per pixel.
    """

    kind: PropertyKind
    data: np.ndarray
    source_frame: int

    def __post_init__(self):
        self.kind = PropertyKind(self.kind)
        self.data = np.asarray(self.data, dtype=np.float32)
        self.validate()

    def validate(self):
        if self.kind is PropertyKind.ILLUMINANT:
            if self.data.ndim != 3 or self.data.shape[2] != 3:
                raise DataError(
                    f"illuminant map must be HxWx3, got {self.data.shape}"
                )
            if np.any(self.data < 0):
                raise DataError("illuminant map has negative chromaticity")
            sums = self.data.sum(axis=2)
            if np.any(np.abs(sums - 1.0) > CHROMA_SUM_TOL):
                worst = float(np.abs(sums - 1.0).max())
                raise DataError(
                    f"illuminant chromaticities must sum to 1 per pixel (worst error {worst:.2e})"
                )
        else:
            if self.data.ndim != 2:
                raise DataError(
                    f"{self.kind.value} map must be HxW, got {self.data.shape}"
                )
            if np.any(self.data < 0) or np.any(self.data > 1):
                raise DataError(f"{self.kind.value} map values must lie in [0, 1]")
        if not np.all(np.isfinite(self.data)):
            raise DataError(f"{self.kind.value} map has non-finite values")

    @property
    def shape_hw(self) -> tuple[int, int]:
        return self.data.shape[0], self.data.shape[1]
