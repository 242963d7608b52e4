"""Frame extraction at a fixed rate plus eye-level alignment and cropping.

Video decoding is delegated to an external decoder command (configurable
template) that writes numbered PNG frames into a scratch directory. Still
images are treated as one-frame videos; a directory of numbered PNGs is
treated as an already-decoded sequence. Eye landmarks come from sidecar
files with one "lx ly rx ry" line per frame.
"""

from __future__ import annotations

import math
import shlex
import subprocess
import tempfile
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".ppm"}

DEFAULT_CANONICAL_SIZE = 224
DEFAULT_EYE_ROW_FRAC = 0.40
DEFAULT_EYE_DIST_FRAC = 0.42


@dataclass
class Frame:
    """One 8-bit sRGB frame with its sampling timestamp."""

    pixels: np.ndarray  # (H, W, 3) uint8
    timestamp_s: float
    index: int

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise DataError(f"frame {self.index}: expected HxWx3 pixels, got {self.pixels.shape}")
        if self.pixels.dtype != np.uint8:
            raise DataError(f"frame {self.index}: expected uint8 pixels, got {self.pixels.dtype}")
        if min(self.pixels.shape[:2]) < 1:
            raise DataError(f"frame {self.index}: empty raster")

    @property
    def shape_hw(self) -> tuple[int, int]:
        return self.pixels.shape[0], self.pixels.shape[1]


@dataclass(frozen=True)
class EyeLandmarks:
    """Eye centers in pixel coordinates, left as seen in the image."""

    left_eye: tuple[float, float]
    right_eye: tuple[float, float]

    def __post_init__(self):
        lx, ly = self.left_eye
        rx, ry = self.right_eye
        if math.hypot(rx - lx, ry - ly) <= 0:
            raise DataError("degenerate landmarks: coincident eyes")
        if lx >= rx:
            raise DataError("landmarks must satisfy left_eye.x < right_eye.x")


@dataclass
class FrameSequence:
    """Ordered frames for one sample; timestamps strictly increasing."""

    sample_id: str
    frames: list[Frame]

    def __post_init__(self):
        if not self.frames:
            raise DataError(f"sample {self.sample_id!r}: empty frame sequence")
        ts = [f.timestamp_s for f in self.frames]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise DataError(f"sample {self.sample_id!r}: timestamps not strictly increasing")

    @property
    def n(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class DecoderConfig:
    """External decoder contract: a command template with {video}, {rate}
    and {outdir} placeholders that writes numbered PNG frames to outdir."""

    command: str


def _load_image(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def _frames_from_dir(directory: Path, rate_hz: float, sample_id: str) -> FrameSequence:
    paths = sorted(p for p in directory.iterdir() if p.suffix.lower() == ".png")
    if not paths:
        raise DataError(f"no PNG frames found in {directory}")
    frames = [
        Frame(pixels=_load_image(p), timestamp_s=i / rate_hz, index=i)
        for i, p in enumerate(paths)
    ]
    return FrameSequence(sample_id=sample_id, frames=frames)


def extract_frames(
    media_path,
    rate_hz: float = 10.0,
    decoder: DecoderConfig | None = None,
    sample_id: str | None = None,
    scratch_dir=None,
) -> FrameSequence:
    """Sample frames at uniform timestamps k/rate_hz starting at 0.

    Still images become one-frame sequences (timestamp 0); directories of
    numbered PNGs are used as-is; anything else is decoded by the external
    decoder command, which is expected to emit floor(duration * rate)
    frames (minimum 1).
    """
    if rate_hz <= 0:
        raise DataError(f"rate_hz must be positive, got {rate_hz}")
    media_path = Path(media_path)
    if sample_id is None:
        sample_id = media_path.stem
    if not media_path.exists():
        raise DataError(f"media file missing: {media_path}")

    if media_path.is_dir():
        return _frames_from_dir(media_path, rate_hz, sample_id)
    if media_path.suffix.lower() in IMAGE_SUFFIXES:
        frame = Frame(pixels=_load_image(media_path), timestamp_s=0.0, index=0)
        return FrameSequence(sample_id=sample_id, frames=[frame])

    if decoder is None:
        raise DataError(
            f"cannot decode {media_path}: no decoder command configured"
        )
    with tempfile.TemporaryDirectory(dir=scratch_dir, prefix="padpipe-decode-") as tmp:
        cmd = decoder.command.format(
            video=str(media_path), rate=f"{rate_hz:g}", outdir=tmp
        )
        proc = subprocess.run(
            shlex.split(cmd), capture_output=True, text=True
        )
        if proc.returncode != 0:
            raise DataError(
                f"decoder failed on {media_path} (exit {proc.returncode}): {proc.stderr.strip()}"
            )
        try:
            return _frames_from_dir(Path(tmp), rate_hz, sample_id)
        except DataError:
            raise DataError(f"undecodable media (decoder wrote no frames): {media_path}") from None


def read_landmarks(path) -> list[EyeLandmarks]:
    """Parse a landmark sidecar: one "lx ly rx ry" line per frame."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"landmark sidecar missing: {path}")
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise DataError(f"{path}:{line_no}: expected 4 values, got {len(parts)}")
            try:
                lx, ly, rx, ry = (float(v) for v in parts)
            except ValueError:
                raise DataError(f"{path}:{line_no}: non-numeric landmark") from None
            out.append(EyeLandmarks(left_eye=(lx, ly), right_eye=(rx, ry)))
    return out


def alignment_transform(
    landmarks: EyeLandmarks,
    canonical_size: int = DEFAULT_CANONICAL_SIZE,
    eye_row_frac: float = DEFAULT_EYE_ROW_FRAC,
    eye_dist_frac: float = DEFAULT_EYE_DIST_FRAC,
) -> np.ndarray:
    """Similarity transform (2x3 matrix, forward source->canonical) that puts
    the eye midpoint at (size/2, eye_row_frac*size), eyes horizontal, with
    inter-ocular distance eye_dist_frac*size."""
    lx, ly = landmarks.left_eye
    rx, ry = landmarks.right_eye
    dx, dy = rx - lx, ry - ly
    dist = math.hypot(dx, dy)
    scale = (eye_dist_frac * canonical_size) / dist
    theta = math.atan2(dy, dx)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    # rotation by -theta levels the eyes
    a, b = scale * cos_t, scale * sin_t
    cx, cy = (lx + rx) / 2.0, (ly + ry) / 2.0
    tx = canonical_size / 2.0
    ty = eye_row_frac * canonical_size
    return np.array(
        [
            [a, b, tx - (a * cx + b * cy)],
            [-b, a, ty - (-b * cx + a * cy)],
        ]
    )


def _invert_affine(mat: np.ndarray) -> np.ndarray:
    lin = mat[:, :2]
    inv = np.linalg.inv(lin)
    t = -inv @ mat[:, 2]
    return np.concatenate([inv, t[:, None]], axis=1)


def warp_affine(pixels: np.ndarray, forward: np.ndarray, out_size: int) -> np.ndarray:
    """Inverse-map bilinear warp; out-of-source pixels are black."""
    inv = _invert_affine(forward)
    ys, xs = np.mgrid[0:out_size, 0:out_size].astype(np.float64)
    src_x = inv[0, 0] * xs + inv[0, 1] * ys + inv[0, 2]
    src_y = inv[1, 0] * xs + inv[1, 1] * ys + inv[1, 2]
    h, w = pixels.shape[:2]
    inside = (src_x >= 0) & (src_x <= w - 1) & (src_y >= 0) & (src_y <= h - 1)
    x0 = np.clip(np.floor(src_x), 0, w - 1).astype(int)
    y0 = np.clip(np.floor(src_y), 0, h - 1).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    wx = np.clip(src_x - x0, 0.0, 1.0)
    wy = np.clip(src_y - y0, 0.0, 1.0)
    img = pixels.astype(np.float64)
    if img.ndim == 3:
        wx = wx[..., None]
        wy = wy[..., None]
        inside_mask = inside[..., None]
    else:
        inside_mask = inside
    out = (
        img[y0, x0] * (1 - wy) * (1 - wx)
        + img[y0, x1] * (1 - wy) * wx
        + img[y1, x0] * wy * (1 - wx)
        + img[y1, x1] * wy * wx
    )
    out = np.where(inside_mask, out, 0.0)
    if pixels.dtype == np.uint8:
        return np.clip(np.rint(out), 0, 255).astype(np.uint8)
    return out


def align_and_crop(
    frame: Frame,
    landmarks: EyeLandmarks,
    canonical_size: int = DEFAULT_CANONICAL_SIZE,
    eye_row_frac: float = DEFAULT_EYE_ROW_FRAC,
    eye_dist_frac: float = DEFAULT_EYE_DIST_FRAC,
) -> Frame:
    """Rotate, scale, and crop a frame to the canonical eye geometry."""
    h, w = frame.shape_hw
    for name, (x, y) in (("left", landmarks.left_eye), ("right", landmarks.right_eye)):
        if not (0 <= x <= w - 1 and 0 <= y <= h - 1):
            warnings.warn(
                f"frame {frame.index}: {name} eye ({x:.1f},{y:.1f}) outside bounds {w}x{h}"
            )
    mat = alignment_transform(landmarks, canonical_size, eye_row_frac, eye_dist_frac)
    pixels = warp_affine(frame.pixels, mat, canonical_size)
    return Frame(pixels=pixels, timestamp_s=frame.timestamp_s, index=frame.index)


def align_sequence(
    seq: FrameSequence,
    landmarks: list[EyeLandmarks | None],
    canonical_size: int = DEFAULT_CANONICAL_SIZE,
    eye_row_frac: float = DEFAULT_EYE_ROW_FRAC,
    eye_dist_frac: float = DEFAULT_EYE_DIST_FRAC,
) -> FrameSequence:
    """Align every frame that has landmarks; frames without are dropped with
    a warning. Fails only when all frames drop."""
    aligned = []
    for frame in seq.frames:
        lm = landmarks[frame.index] if frame.index < len(landmarks) else None
        if lm is None:
            warnings.warn(f"sample {seq.sample_id!r}: dropping frame {frame.index} (no landmarks)")
            continue
        aligned.append(
            align_and_crop(frame, lm, canonical_size, eye_row_frac, eye_dist_frac)
        )
    if not aligned:
        raise DataError(f"sample {seq.sample_id!r}: all frames dropped (no usable landmarks)")
    return FrameSequence(sample_id=seq.sample_id, frames=aligned)
