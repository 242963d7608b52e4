"""On-disk property map formats.

Depth and saliency maps are grayscale PFM files. Illuminant maps are 8-bit
RGB PNGs holding chromaticity * 255; on load they are renormalized so each
pixel sums to 1 again. The pipeline always extracts features from the
on-disk representation so cached and fresh runs see identical inputs.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError
from .model import PropertyKind
from .maps.propmap import PropertyMap
from .pfm import read_pfm, write_pfm

MAP_SUFFIX = {
    PropertyKind.DEPTH: ".pfm",
    PropertyKind.SALIENCY: ".pfm",
    PropertyKind.ILLUMINANT: ".png",
}


def map_filename(kind: PropertyKind, index: int) -> str:
    return f"{index:06d}{MAP_SUFFIX[PropertyKind(kind)]}"


def save_property_map(path, map_: PropertyMap) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if map_.kind is PropertyKind.ILLUMINANT:
        arr = np.clip(np.rint(map_.data * 255.0), 0, 255).astype(np.uint8)
        Image.fromarray(arr, mode="RGB").save(path)
    else:
        write_pfm(path, map_.data)


def load_property_map(path, kind: PropertyKind, index: int) -> PropertyMap:
    kind = PropertyKind(kind)
    path = Path(path)
    if kind is PropertyKind.ILLUMINANT:
        if not path.exists():
            raise DataError(f"map file missing: {path}")
        with Image.open(path) as img:
            arr = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
        sums = arr.sum(axis=2)
        if np.any(sums <= 0):
            raise DataError(f"{path}: black pixel cannot encode a chromaticity")
        data = (arr / sums[..., None]).astype(np.float32)
    else:
        data = np.clip(read_pfm(path), 0.0, 1.0)
    return PropertyMap(kind=kind, data=data, source_frame=index)
