"""Per-sample orchestration with on-disk stage caching.

Stage outputs live under <cache_dir>/<config digest>/<stage>/<sample_id>.
A stage directory counts as complete only once its marker file exists;
markers are written atomically (temp file + rename), so interrupted runs
redo the stage. Alignment, the three property maps, and feature extraction
are cached; reruns with the same config digest skip completed work.

Feature vectors are always extracted from the on-disk map files, never from
in-memory rasters, so cached and fresh runs are bit-identical.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .config import RunConfig
from .errors import DataError
from .features import (
    ExtractorConfig,
    FeatureVector,
    extract_features,
    read_feature_values,
    write_features,
)
from .mapio import load_property_map, map_filename, save_property_map
from .maps.depth import DepthProviderConfig, provide_depth_map
from .maps.illuminant import estimate_illuminant_map
from .maps.saliency import boundary_connectivity, estimate_saliency_map
from .maps.superpixels import segment_superpixels
from .model import PROPERTY_ORDER, PropertyKind, SampleRecord
from .preprocess import (
    IMAGE_SUFFIXES,
    DecoderConfig,
    Frame,
    FrameSequence,
    align_sequence,
    extract_frames,
    read_landmarks,
)

MARKER = "_complete"


@dataclass
class PipelineRunner:
    """Executes and caches the per-sample stages for one configuration."""

    cfg: RunConfig

    def __post_init__(self):
        self.cache_root = Path(os.environ.get("PAD_CACHE_DIR", self.cfg.cache_dir))
        self.root = self.cache_root / self.cfg.digest()
        self.depth_config = DepthProviderConfig(
            mode=self.cfg.depth_mode,
            path_template=self.cfg.depth_path_template,
            command=self.cfg.depth_command,
        )
        self.extractor_config = ExtractorConfig(
            mode=self.cfg.extractor_mode,
            path_template=self.cfg.feature_path_template,
            command=self.cfg.extractor_command,
        )

    # -- cache bookkeeping -------------------------------------------------

    def stage_dir(self, stage: str, sample_id: str) -> Path:
        return self.root / stage / sample_id

    def _is_done(self, stage: str, sample_id: str) -> bool:
        return (self.stage_dir(stage, sample_id) / MARKER).exists()

    def _mark_done(self, stage: str, sample_id: str) -> None:
        directory = self.stage_dir(stage, sample_id)
        directory.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".marker-")
        os.close(fd)
        os.replace(tmp, directory / MARKER)

    # -- stage: raw frames ----------------------------------------------------

    def raw_frames(self, record: SampleRecord) -> FrameSequence:
        """Decoded (unaligned) frames. Still images and frame directories
        pass through; video decode results are cached."""
        media = Path(record.media_path)
        if media.is_dir() or media.suffix.lower() in IMAGE_SUFFIXES:
            return extract_frames(
                record.media_path, rate_hz=self.cfg.rate_hz, sample_id=record.sample_id
            )
        stage = self.stage_dir("frames", record.sample_id)
        if not self._is_done("frames", record.sample_id):
            decoder = (
                DecoderConfig(command=self.cfg.decoder_command)
                if self.cfg.decoder_command
                else None
            )
            seq = extract_frames(
                record.media_path,
                rate_hz=self.cfg.rate_hz,
                decoder=decoder,
                sample_id=record.sample_id,
            )
            stage.mkdir(parents=True, exist_ok=True)
            for frame in seq.frames:
                Image.fromarray(frame.pixels, mode="RGB").save(
                    stage / f"{frame.index:06d}.png"
                )
            self._mark_done("frames", record.sample_id)
        return extract_frames(
            stage, rate_hz=self.cfg.rate_hz, sample_id=record.sample_id
        )

    def _ensure_landmarks(self, record: SampleRecord, seq: FrameSequence):
        """Sidecar landmarks, generated by the configured external landmark
        command when the record carries none."""
        if record.landmarks_path and Path(record.landmarks_path).exists():
            return read_landmarks(record.landmarks_path)
        if not self.cfg.landmark_command:
            raise DataError(f"sample {record.sample_id!r} has no landmark sidecar")
        out = self.root / "landmarks" / f"{record.sample_id}.txt"
        if not out.exists():
            media = Path(record.media_path)
            if media.is_dir():
                frames_dir = media
            else:
                frames_dir = self.stage_dir("frames", record.sample_id)
                if not self._is_done("frames", record.sample_id):
                    frames_dir.mkdir(parents=True, exist_ok=True)
                    for frame in seq.frames:
                        Image.fromarray(frame.pixels, mode="RGB").save(
                            frames_dir / f"{frame.index:06d}.png"
                        )
                    self._mark_done("frames", record.sample_id)
            out.parent.mkdir(parents=True, exist_ok=True)
            cmd = self.cfg.landmark_command.format(
                frames_dir=str(frames_dir), out=str(out)
            )
            proc = subprocess.run(shlex.split(cmd), capture_output=True, text=True)
            if proc.returncode != 0 or not out.exists():
                raise DataError(
                    f"landmark command failed for {record.sample_id!r} "
                    f"(exit {proc.returncode}): {proc.stderr.strip()}"
                )
        return read_landmarks(out)

    # -- stage: aligned frames ----------------------------------------------

    def aligned_frames(self, record: SampleRecord) -> list[Frame]:
        stage = self.stage_dir("aligned", record.sample_id)
        if not self._is_done("aligned", record.sample_id):
            seq = self.raw_frames(record)
            landmarks = self._ensure_landmarks(record, seq)
            aligned = align_sequence(
                seq,
                list(landmarks),
                canonical_size=self.cfg.canonical_size,
                eye_row_frac=self.cfg.eye_row_frac,
                eye_dist_frac=self.cfg.eye_dist_frac,
            )
            stage.mkdir(parents=True, exist_ok=True)
            for frame in aligned.frames:
                Image.fromarray(frame.pixels, mode="RGB").save(
                    stage / f"{frame.index:06d}.png"
                )
            self._mark_done("aligned", record.sample_id)

        frames = []
        for path in sorted(stage.glob("*.png")):
            index = int(path.stem)
            with Image.open(path) as img:
                pixels = np.asarray(img.convert("RGB"), dtype=np.uint8)
            frames.append(
                Frame(pixels=pixels, timestamp_s=index / self.cfg.rate_hz, index=index)
            )
        if not frames:
            raise DataError(f"sample {record.sample_id!r}: no aligned frames cached")
        return frames

    # -- stage: property maps -----------------------------------------------

    def map_paths(self, record: SampleRecord) -> dict[PropertyKind, list[tuple[int, Path]]]:
        """Compute (or reuse) the three map files for every aligned frame."""
        sid = record.sample_id
        if not self._is_done("maps", sid):
            frames = self.aligned_frames(record)
            base = self.stage_dir("maps", sid)
            for frame in frames:
                graph = segment_superpixels(
                    frame,
                    target_count=self.cfg.superpixels,
                    compactness=self.cfg.compactness,
                )
                illum = estimate_illuminant_map(
                    frame,
                    graph,
                    bin_width=self.cfg.hough_bin,
                    intensity_low=self.cfg.intensity_low,
                    intensity_high=self.cfg.intensity_high,
                    min_usable=self.cfg.min_usable_pixels,
                )
                weights = boundary_connectivity(
                    graph, sigma_clr=self.cfg.sigma_clr, sigma_bnd=self.cfg.sigma_bnd
                )
                sal = estimate_saliency_map(
                    frame,
                    graph,
                    weights=weights,
                    sigma_clr=self.cfg.sigma_clr,
                    sigma_spa=self.cfg.sigma_spa,
                    edge_floor=self.cfg.smooth_floor,
                )
                depth = provide_depth_map(
                    sid,
                    frame.index,
                    frame.shape_hw,
                    self.depth_config,
                    strict=self.cfg.strict,
                )
                for map_ in (depth, illum, sal):
                    save_property_map(
                        base / map_.kind.value / map_filename(map_.kind, frame.index),
                        map_,
                    )
            self._mark_done("maps", sid)

        out: dict[PropertyKind, list[tuple[int, Path]]] = {}
        for kind in PROPERTY_ORDER:
            directory = self.stage_dir("maps", sid) / kind.value
            entries = sorted(
                (int(p.stem), p)
                for p in directory.iterdir()
                if p.suffix in (".pfm", ".png")
            )
            if not entries:
                raise DataError(f"sample {sid!r}: no cached {kind.value} maps")
            out[kind] = entries
        return out

    # -- stage: features ------------------------------------------------------

    def features(self, record: SampleRecord) -> dict[PropertyKind, list[FeatureVector]]:
        sid = record.sample_id
        if not self._is_done("features", sid):
            maps = self.map_paths(record)
            base = self.stage_dir("features", sid)
            for kind in PROPERTY_ORDER:
                for index, path in maps[kind]:
                    map_ = load_property_map(path, kind, index)
                    fv = extract_features(
                        map_, self.extractor_config, sample_id=sid, map_path=path
                    )
                    out_path = base / kind.value / f"{index:06d}.padf"
                    write_features(out_path, fv)
            self._mark_done("features", sid)

        out: dict[PropertyKind, list[FeatureVector]] = {}
        for kind in PROPERTY_ORDER:
            directory = self.stage_dir("features", sid) / kind.value
            vectors = []
            for path in sorted(directory.glob("*.padf")):
                index = int(path.stem)
                vectors.append(
                    FeatureVector(
                        values=read_feature_values(path),
                        kind=kind,
                        sample_id=sid,
                        frame_index=index,
                        extractor_id=self.extractor_config.extractor_id,
                    )
                )
            if not vectors:
                raise DataError(f"sample {sid!r}: no cached {kind.value} features")
            out[kind] = vectors
        return out

    def features_for(self, records: list[SampleRecord]) -> dict[str, dict[PropertyKind, list[FeatureVector]]]:
        """Features for many samples, optionally across a worker pool."""
        jobs = max(1, int(self.cfg.jobs))
        if jobs == 1:
            return {rec.sample_id: self.features(rec) for rec in records}
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(self.features, records))
        return {rec.sample_id: feats for rec, feats in zip(records, results)}
