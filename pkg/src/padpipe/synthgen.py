"""Deterministic synthetic dataset generator.

Stands in for license-restricted PAD corpora so the full pipeline stays
testable. Bona fide samples get high-texture faces, per-frame illuminant
tint jitter, and dome-shaped "nose-forward" depth maps; attack samples get
a flat constant depth, a fixed neutral illuminant, a mild blur, and a thin
dark screen-bezel border. Splits are subject-disjoint. Identical specs and
seeds reproduce a bit-identical directory tree: all manifest paths are
relative to the output directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError
from .model import DatasetManifest, SampleRecord, load_manifest
from .pfm import write_pfm

DEFAULT_FRAME_SIZE = 96
DEFAULT_DEPTH_SIZE = 64


@dataclass(frozen=True)
class SynthSpec:
    n_subjects: int
    videos_per_subject: int
    frames_per_video: int
    seed: int = 0
    attack_fraction: float = 0.5
    frame_size: int = DEFAULT_FRAME_SIZE
    depth_size: int = DEFAULT_DEPTH_SIZE
    dataset_name: str = "synth"

    def __post_init__(self):
        if min(self.n_subjects, self.videos_per_subject, self.frames_per_video) < 1:
            raise DataError("all synthetic counts must be >= 1")
        if not 0.0 < self.attack_fraction < 1.0:
            raise DataError("attack_fraction must lie in (0, 1)")


def _box_blur(img: np.ndarray, k: int) -> np.ndarray:
    out = img.astype(np.float64)
    for axis in (0, 1):
        acc = np.zeros_like(out)
        for off in range(-k, k + 1):
            acc += np.roll(out, off, axis=axis)
        out = acc / (2 * k + 1)
    return out


def _subject_face(rng: np.random.Generator, size: int) -> np.ndarray:
    """Base albedo for one subject: skin ellipse over a noisy backdrop."""
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    back = 0.30 + 0.10 * _box_blur(rng.normal(0.0, 1.0, (size, size)), 6)
    img = np.repeat(back[..., None], 3, axis=2)
    skin = np.array([0.66, 0.52, 0.42]) + rng.uniform(-0.06, 0.06, 3)
    cx, cy = size * 0.5, size * 0.52
    ellipse = ((xs - cx) / (0.33 * size)) ** 2 + ((ys - cy) / (0.43 * size)) ** 2 <= 1.0
    img[ellipse] = skin
    texture = _box_blur(rng.normal(0.0, 1.0, (size, size)), 1) * 0.10
    img += texture[..., None]
    return np.clip(img, 0.02, 0.98)


def _stamp_eyes(img, lx, ly, rx, ry, size):
    ys, xs = np.mgrid[0 : img.shape[0], 0 : img.shape[1]].astype(np.float64)
    r = max(2.0, size * 0.03)
    for ex, ey in ((lx, ly), (rx, ry)):
        disk = (xs - ex) ** 2 + (ys - ey) ** 2 <= r * r
        img[disk] = np.array([0.08, 0.07, 0.07])
    return img


def _bezel(img, size):
    inset = max(2, int(round(size * 0.07)))
    t = 2
    dark = np.array([0.06, 0.06, 0.07])
    img[inset : inset + t, inset : size - inset] = dark
    img[size - inset - t : size - inset, inset : size - inset] = dark
    img[inset : size - inset, inset : inset + t] = dark
    img[inset : size - inset, size - inset - t : size - inset] = dark
    return img


def _depth_dome(rng: np.random.Generator, size: int) -> np.ndarray:
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    cx = size * (0.5 + rng.uniform(-0.02, 0.02))
    cy = size * (0.55 + rng.uniform(-0.02, 0.02))
    r = np.sqrt((xs - cx) ** 2 + (ys - cy) ** 2) / (0.6 * size)
    dome = np.clip(1.0 - r**2, 0.0, 1.0)
    return (0.15 + 0.7 * dome).astype(np.float32)


def _assign_labels(spec: SynthSpec) -> list[bool]:
    """Per-(subject, video) attack flags; global count = round(fraction *
    total) spread as evenly as possible across subjects."""
    total = spec.n_subjects * spec.videos_per_subject
    n_attacks = int(round(spec.attack_fraction * total))
    base, extra = divmod(n_attacks, spec.n_subjects)
    flags = []
    for subj in range(spec.n_subjects):
        quota = base + (1 if subj < extra else 0)
        quota = min(quota, spec.videos_per_subject)
        flags.extend(
            vid >= spec.videos_per_subject - quota
            for vid in range(spec.videos_per_subject)
        )
    return flags


def _assign_splits(spec: SynthSpec) -> dict[int, str]:
    rng = np.random.default_rng(spec.seed)
    order = [int(i) for i in rng.permutation(spec.n_subjects)]
    n = spec.n_subjects
    if n == 1:
        cuts = (1, 1)
    elif n == 2:
        cuts = (1, 1)  # one train, one test, no dev
    else:
        n_train = max(1, int(round(0.5 * n)))
        n_test = max(1, int(round(0.25 * n)))
        n_train = min(n_train, n - 2)
        cuts = (n_train, n - n_test)
    split_of = {}
    for pos, subj in enumerate(order):
        if pos < cuts[0]:
            split_of[subj] = "train"
        elif pos < cuts[1]:
            split_of[subj] = "dev"
        else:
            split_of[subj] = "test"
    return split_of


def generate_synthetic_dataset(spec: SynthSpec, out_dir) -> DatasetManifest:
    """Render the dataset under out_dir and return its manifest.

    Layout: frames/<sample>/NNNNNN.png, landmarks/<sample>.txt,
    depth/<sample>/NNNNNN.pfm, manifest.jsonl.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    size = spec.frame_size
    flags = _assign_labels(spec)
    split_of = _assign_splits(spec)

    records = []
    attack_counter = 0
    for subj in range(spec.n_subjects):
        face_rng = np.random.default_rng([spec.seed, 1000 + subj])
        base_face = _subject_face(face_rng, size)
        for vid in range(spec.videos_per_subject):
            sample_id = f"s{subj:03d}v{vid:02d}"
            is_attack = flags[subj * spec.videos_per_subject + vid]
            rng = np.random.default_rng([spec.seed, subj, vid])
            frames_dir = out_dir / "frames" / sample_id
            depth_dir = out_dir / "depth" / sample_id
            frames_dir.mkdir(parents=True, exist_ok=True)
            depth_dir.mkdir(parents=True, exist_ok=True)

            lm_lines = []
            for idx in range(spec.frames_per_video):
                shift = rng.uniform(-1.5, 1.5, 2)
                lx, ly = size * 0.32 + shift[0], size * 0.42 + shift[1]
                rx, ry = size * 0.68 + shift[0], size * 0.42 + shift[1]
                img = _stamp_eyes(base_face.copy(), lx, ly, rx, ry, size)
                if is_attack:
                    img = _box_blur(img, 1)
                    img = _bezel(img * 0.95, size)
                    tint = np.ones(3)
                else:
                    tint = 1.0 + rng.uniform(-0.15, 0.15, 3)
                img = np.clip(img * tint, 0.0, 1.0)
                png = (np.rint(img * 255.0)).astype(np.uint8)
                Image.fromarray(png, mode="RGB").save(frames_dir / f"{idx:06d}.png")
                lm_lines.append(f"{lx:.3f} {ly:.3f} {rx:.3f} {ry:.3f}")

                if is_attack:
                    depth = np.full((spec.depth_size, spec.depth_size), 0.5, dtype=np.float32)
                else:
                    depth = _depth_dome(rng, spec.depth_size)
                write_pfm(depth_dir / f"{idx:06d}.pfm", depth)

            lm_path = out_dir / "landmarks" / f"{sample_id}.txt"
            lm_path.parent.mkdir(parents=True, exist_ok=True)
            lm_path.write_text("\n".join(lm_lines) + "\n", encoding="utf-8")

            if is_attack:
                attack_type = ("print", "tablet")[attack_counter % 2]
                attack_counter += 1
            else:
                attack_type = None
            records.append(
                SampleRecord(
                    sample_id=sample_id,
                    media_path=f"frames/{sample_id}",
                    label="attack" if is_attack else "bonafide",
                    attack_type=attack_type,
                    subject_id=f"subj{subj:03d}",
                    split=split_of[subj],
                    dataset_name=spec.dataset_name,
                    landmarks_path=f"landmarks/{sample_id}.txt",
                )
            )

    manifest_path = out_dir / "manifest.jsonl"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "sample_id": rec.sample_id,
                        "media_path": rec.media_path,
                        "label": rec.label,
                        "attack_type": rec.attack_type,
                        "subject_id": rec.subject_id,
                        "split": rec.split,
                        "dataset_name": rec.dataset_name,
                        "landmarks_path": rec.landmarks_path,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    # reload so relative paths resolve against the manifest location
    return load_manifest(manifest_path)
