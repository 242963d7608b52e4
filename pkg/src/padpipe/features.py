"""Fixed 2048-dimension feature vectors per (frame, property map).

The real extractor is a process boundary: an external command reads a map
file and writes a feature file in the PADF format below. A deterministic
built-in fallback descriptor keeps the pipeline self-contained for tests.

PADF file layout (little-endian): magic "PADF", uint16 version = 1,
uint32 count = 2048, then 2048 IEEE-754 float32 values.

Fallback descriptor layout (indices, three channels c0..c2; single-channel
maps are replicated to three):
      0 -  767   16x16 area-resized map, per channel (c0 rows, c1, c2)
    768 -  959   8x8 mean-pool grid, per channel
    960 - 1727   256-bin intensity histogram over [0, 1], per channel,
                 each normalized to sum 1
   1728 - 1983   16x16 gradient-magnitude grid of the channel mean
   1984 - 2047   zero padding
"""

from __future__ import annotations

import hashlib
import shlex
import struct
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .imageops import area_resize, gradient_magnitude
from .mapio import map_filename, save_property_map
from .maps.propmap import PropertyMap

FEATURE_DIM = 2048
PADF_MAGIC = b"PADF"
PADF_VERSION = 1

EXTRACTOR_MODES = ("fallback", "precomputed", "external")


@dataclass
class FeatureVector:
    values: np.ndarray  # (2048,) float32
    kind: PropertyKind
    sample_id: str
    frame_index: int
    extractor_id: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.shape != (FEATURE_DIM,):
            raise DataError(
                f"feature vector must have exactly {FEATURE_DIM} components, "
                f"got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise DataError("feature vector has non-finite components")


@dataclass(frozen=True)
class ExtractorConfig:
    """mode "fallback" uses the built-in descriptor; "precomputed" loads
    path_template ({sample_id}, {property}, {index}); "external" runs
    command (placeholders {map}, {out}) against a map file."""

    mode: str = "fallback"
    path_template: str | None = None
    command: str | None = None

    def __post_init__(self):
        if self.mode not in EXTRACTOR_MODES:
            raise DataError(f"unknown extractor mode {self.mode!r}")
        if self.mode == "precomputed" and not self.path_template:
            raise DataError("precomputed extractor needs a path_template")
        if self.mode == "external" and not self.command:
            raise DataError("external extractor needs a command")

    @property
    def extractor_id(self) -> str:
        if self.mode == "fallback":
            return "fallback-v1"
        if self.mode == "precomputed":
            return "precomputed"
        digest = hashlib.sha256(self.command.encode("utf-8")).hexdigest()[:8]
        return f"external-{digest}"


def write_features(path, vector: FeatureVector) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(PADF_MAGIC)
        fh.write(struct.pack("<HI", PADF_VERSION, FEATURE_DIM))
        fh.write(vector.values.astype("<f4").tobytes())


def read_feature_values(path) -> np.ndarray:
    """Read the raw 2048 float32 values from a PADF file."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"feature file missing: {path}")
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != PADF_MAGIC:
            raise DataError(f"{path}: bad magic {magic!r}, expected {PADF_MAGIC!r}")
        version, count = struct.unpack("<HI", fh.read(6))
        if version != PADF_VERSION:
            raise DataError(f"{path}: unsupported PADF version {version}")
        if count != FEATURE_DIM:
            raise DataError(
                f"{path}: expected {FEATURE_DIM} feature values, file declares {count}"
            )
        buf = fh.read(4 * count)
        if len(buf) != 4 * count:
            raise DataError(f"{path}: truncated feature payload")
    return np.frombuffer(buf, dtype="<f4").copy()


def _three_channel(data: np.ndarray) -> np.ndarray:
    if data.ndim == 2:
        return np.repeat(data[..., None], 3, axis=2)
    return data


def fallback_descriptor(map_: PropertyMap, sample_id: str = "") -> FeatureVector:
    """Deterministic handcrafted 2048-dim descriptor of a property map."""
    chans = _three_channel(map_.data.astype(np.float64))
    parts = []
    for c in range(3):
        parts.append(area_resize(chans[..., c], 16, 16).ravel())
    for c in range(3):
        parts.append(area_resize(chans[..., c], 8, 8).ravel())
    for c in range(3):
        hist, _ = np.histogram(chans[..., c].ravel(), bins=256, range=(0.0, 1.0))
        parts.append(hist.astype(np.float64) / chans[..., c].size)
    grad = gradient_magnitude(chans.mean(axis=2))
    parts.append(area_resize(grad, 16, 16).ravel())
    vec = np.concatenate(parts)
    vec = np.concatenate([vec, np.zeros(FEATURE_DIM - len(vec))])
    return FeatureVector(
        values=vec.astype(np.float32),
        kind=map_.kind,
        sample_id=sample_id,
        frame_index=map_.source_frame,
        extractor_id="fallback-v1",
    )


def _write_map_file(map_: PropertyMap, directory: Path) -> Path:
    """Materialize a map in its on-disk format (PFM or chromaticity PNG)."""
    path = directory / map_filename(map_.kind, map_.source_frame)
    save_property_map(path, map_)
    return path


def extract_features(
    map_: PropertyMap,
    config: ExtractorConfig,
    sample_id: str,
    map_path=None,
) -> FeatureVector:
    """Produce the feature vector for one property map.

    For the external extractor the map is materialized to a file (unless
    map_path is already on disk) and the command writes a PADF file back.
    """
    if config.mode == "fallback":
        return fallback_descriptor(map_, sample_id=sample_id)

    if config.mode == "precomputed":
        path = config.path_template.format(
            sample_id=sample_id, property=map_.kind.value, index=map_.source_frame
        )
        values = read_feature_values(path)
        return FeatureVector(
            values=values,
            kind=map_.kind,
            sample_id=sample_id,
            frame_index=map_.source_frame,
            extractor_id=config.extractor_id,
        )

    with tempfile.TemporaryDirectory(prefix="padpipe-feat-") as tmp:
        tmp = Path(tmp)
        src = Path(map_path) if map_path is not None else _write_map_file(map_, tmp)
        out = tmp / "features.padf"
        cmd = config.command.format(map=str(src), out=str(out))
        proc = subprocess.run(shlex.split(cmd), capture_output=True, text=True)
        if proc.returncode != 0:
            raise DataError(
                f"extractor command failed (exit {proc.returncode}): {proc.stderr.strip()}"
            )
        values = read_feature_values(out)
    return FeatureVector(
        values=values,
        kind=map_.kind,
        sample_id=sample_id,
        frame_index=map_.source_frame,
        extractor_id=config.extractor_id,
    )
