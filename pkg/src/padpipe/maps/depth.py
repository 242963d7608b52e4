"""Depth map providers.

Depth is not estimated in-repo; maps are ingested from precomputed PFM
files, produced on demand by an external command, or replaced by a constant
test map. Loaded maps are rescaled to [0, 1] per frame.
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..imageops import bilinear_resize
from ..model import PropertyKind
from ..pfm import read_pfm
from .propmap import PropertyMap

PROVIDER_MODES = ("precomputed", "constant", "external")


@dataclass(frozen=True)
class DepthProviderConfig:
    """mode "precomputed" reads path_template ({sample_id}, {index});
    "constant" returns an all-0.5 map; "external" runs command (placeholders
    {sample_id}, {index}, {out}) and reads the PFM it writes."""

    mode: str = "constant"
    path_template: str | None = None
    command: str | None = None

    def __post_init__(self):
        if self.mode not in PROVIDER_MODES:
            raise DataError(f"unknown depth provider mode {self.mode!r}")
        if self.mode == "precomputed" and not self.path_template:
            raise DataError("precomputed depth provider needs a path_template")
        if self.mode == "external" and not self.command:
            raise DataError("external depth provider needs a command")


def rescale_unit(data: np.ndarray) -> np.ndarray:
    """Affine rescale to [0, 1]; a constant map becomes all 0.5."""
    lo = float(data.min())
    hi = float(data.max())
    if hi - lo <= 0:
        return np.full_like(data, 0.5, dtype=np.float64)
    return (data.astype(np.float64) - lo) / (hi - lo)


def _fit_to_frame(data, shape_hw, source, strict):
    if data.shape == tuple(shape_hw):
        return data
    if strict:
        raise DataError(
            f"depth map {source} is {data.shape[0]}x{data.shape[1]}, "
            f"expected {shape_hw[0]}x{shape_hw[1]}"
        )
    warnings.warn(
        f"resizing depth map {source} from {data.shape} to {tuple(shape_hw)}"
    )
    return bilinear_resize(data, shape_hw[0], shape_hw[1])


def provide_depth_map(
    sample_id: str,
    index: int,
    shape_hw: tuple[int, int],
    config: DepthProviderConfig,
    strict: bool = False,
) -> PropertyMap:
    """Fetch the depth map for one frame from the configured provider."""
    if config.mode == "constant":
        data = np.full(shape_hw, 0.5, dtype=np.float32)
        return PropertyMap(kind=PropertyKind.DEPTH, data=data, source_frame=index)

    if config.mode == "precomputed":
        path = Path(config.path_template.format(sample_id=sample_id, index=index))
        raw = read_pfm(path)
        raw = _fit_to_frame(raw, shape_hw, path, strict)
        return PropertyMap(
            kind=PropertyKind.DEPTH,
            data=rescale_unit(raw).astype(np.float32),
            source_frame=index,
        )

    with tempfile.TemporaryDirectory(prefix="padpipe-depth-") as tmp:
        out = Path(tmp) / f"{sample_id}_{index}.pfm"
        cmd = config.command.format(sample_id=sample_id, index=index, out=str(out))
        proc = subprocess.run(shlex.split(cmd), capture_output=True, text=True)
        if proc.returncode != 0:
            raise DataError(
                f"depth command failed for {sample_id}/{index} "
                f"(exit {proc.returncode}): {proc.stderr.strip()}"
            )
        raw = read_pfm(out)
        raw = _fit_to_frame(raw, shape_hw, out, strict)
        return PropertyMap(
            kind=PropertyKind.DEPTH,
            data=rescale_unit(raw).astype(np.float32),
            source_frame=index,
        )
