"""Domain types, dataset manifests, and evaluation protocol resolution.

A manifest is a JSON-Lines file, one sample per line, with exactly the keys
sample_id, media_path, label, attack_type, subject_id, split, dataset_name,
landmarks_path. Manifests and protocol objects are immutable after
construction and safe to share across workers.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ManifestError, ProtocolError

LABELS = ("bonafide", "attack")
SPLITS = ("train", "dev", "test", "enroll")

MANIFEST_KEYS = frozenset(
    {
        "sample_id",
        "media_path",
        "label",
        "attack_type",
        "subject_id",
        "split",
        "dataset_name",
        "landmarks_path",
    }
)


class PropertyKind(str, Enum):
    """The three intrinsic image properties the pipeline estimates."""

    DEPTH = "depth"
    ILLUMINANT = "illuminant"
    SALIENCY = "saliency"

    def __str__(self):
        return self.value


# Canonical ordering used everywhere a per-property triple is assembled.
PROPERTY_ORDER = (PropertyKind.DEPTH, PropertyKind.ILLUMINANT, PropertyKind.SALIENCY)


@dataclass(frozen=True)
class SampleRecord:
    """One media sample (video or still image) with its label and split."""

    sample_id: str
    media_path: str
    label: str
    attack_type: str | None
    subject_id: str
    split: str
    dataset_name: str
    landmarks_path: str | None = None

    def __post_init__(self):
        if self.label not in LABELS:
            raise ManifestError(
                f"sample {self.sample_id!r}: label must be one of {LABELS}, got {self.label!r}"
            )
        if self.split not in SPLITS:
            raise ManifestError(
                f"sample {self.sample_id!r}: split must be one of {SPLITS}, got {self.split!r}"
            )
        if (self.attack_type is not None) != (self.label == "attack"):
            raise ManifestError(
                f"sample {self.sample_id!r}: attack_type must be present "
                f"iff label is 'attack' (label={self.label!r}, attack_type={self.attack_type!r})"
            )

    @property
    def is_attack(self) -> bool:
        return self.label == "attack"

    @property
    def y(self) -> int:
        """Signed label: +1 = attack, -1 = bonafide."""
        return 1 if self.is_attack else -1


@dataclass(frozen=True)
class DatasetManifest:
    """Immutable, validated listing of every sample in one dataset."""

    dataset_name: str
    records: tuple[SampleRecord, ...]
    fps_native: float | None = None

    def __post_init__(self):
        if not self.records:
            raise ManifestError(f"manifest {self.dataset_name!r} is empty")
        seen = set()
        for rec in self.records:
            if rec.sample_id in seen:
                raise ManifestError(f"duplicate sample_id {rec.sample_id!r}")
            seen.add(rec.sample_id)
            if rec.dataset_name != self.dataset_name:
                raise ManifestError(
                    f"sample {rec.sample_id!r} belongs to dataset "
                    f"{rec.dataset_name!r}, not {self.dataset_name!r}"
                )

    def split(self, name: str) -> list[SampleRecord]:
        return [r for r in self.records if r.split == name]

    def require_split(self, name: str) -> list[SampleRecord]:
        recs = self.split(name)
        if not recs:
            raise ProtocolError(
                f"dataset {self.dataset_name!r} has no {name!r} split"
            )
        return recs


@dataclass(frozen=True)
class ProtocolSpec:
    """How train/dev/test record lists are drawn from the manifests.

    mode "intra": single train dataset, identical to the test dataset,
    disjoint splits. mode "inter": one or more train datasets, all distinct
    from the test dataset; their train splits are concatenated.

    dev_source is either "dev_split" or "kfold:<k>"; the k-fold mechanism
    carves a subject-disjoint dev fold out of the training records.
    """

    mode: str
    train_datasets: tuple[str, ...]
    test_dataset: str
    dev_source: str = "dev_split"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("intra", "inter"):
            raise ProtocolError(f"unknown protocol mode {self.mode!r}")
        if not self.train_datasets:
            raise ProtocolError("protocol needs at least one train dataset")
        if self.mode == "intra":
            if len(self.train_datasets) != 1 or self.train_datasets[0] != self.test_dataset:
                raise ProtocolError(
                    "intra protocol requires a single train dataset equal to the test dataset"
                )
        else:
            for name in self.train_datasets:
                if name == self.test_dataset:
                    raise ProtocolError(
                        f"inter protocol train dataset {name!r} equals the test dataset"
                    )
        self.kfold_k  # validates the dev_source syntax

    @property
    def kfold_k(self) -> int | None:
        """Fold count when dev_source is kfold, else None."""
        if self.dev_source == "dev_split":
            return None
        if self.dev_source.startswith("kfold:"):
            try:
                k = int(self.dev_source.split(":", 1)[1])
            except ValueError:
                raise ProtocolError(f"bad dev_source {self.dev_source!r}") from None
            if k < 2:
                raise ProtocolError("kfold needs k >= 2")
            return k
        raise ProtocolError(f"bad dev_source {self.dev_source!r}")


def _parse_record(obj: dict, line_no: int, strict: bool) -> SampleRecord:
    unknown = set(obj) - MANIFEST_KEYS
    if unknown and strict:
        raise ManifestError(f"unknown keys {sorted(unknown)}", line_no)
    missing = MANIFEST_KEYS - set(obj) - {"attack_type", "landmarks_path", "fps_native"}
    if missing:
        raise ManifestError(f"missing keys {sorted(missing)}", line_no)
    try:
        return SampleRecord(
            sample_id=str(obj["sample_id"]),
            media_path=str(obj["media_path"]),
            label=str(obj["label"]),
            attack_type=obj.get("attack_type"),
            subject_id=str(obj["subject_id"]),
            split=str(obj["split"]),
            dataset_name=str(obj["dataset_name"]),
            landmarks_path=obj.get("landmarks_path"),
        )
    except ManifestError as exc:
        raise ManifestError(str(exc), line_no) from None


def load_manifest(path, strict: bool = False) -> DatasetManifest:
    """Load and validate a JSON-Lines manifest.

    Relative media and landmark paths are resolved against the manifest's
    directory. With strict=True, unknown keys are rejected and every
    media_path must exist on disk.
    """
    path = Path(path)
    base = path.parent
    records = []
    dataset_name = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"invalid JSON ({exc.msg})", line_no) from None
            if not isinstance(obj, dict):
                raise ManifestError("record is not a JSON object", line_no)
            rec = _parse_record(obj, line_no, strict)
            resolved = {}
            if not Path(rec.media_path).is_absolute():
                resolved["media_path"] = str(base / rec.media_path)
            if rec.landmarks_path and not Path(rec.landmarks_path).is_absolute():
                resolved["landmarks_path"] = str(base / rec.landmarks_path)
            if resolved:
                rec = dataclasses.replace(rec, **resolved)
            if strict and not Path(rec.media_path).exists():
                raise ManifestError(
                    f"media file missing: {rec.media_path}", line_no
                )
            if dataset_name is None:
                dataset_name = rec.dataset_name
            records.append(rec)
    if not records:
        raise ManifestError(f"manifest {path} is empty")
    return DatasetManifest(dataset_name=dataset_name, records=tuple(records))


def subject_folds(records: list[SampleRecord], k: int, seed: int) -> list[list[SampleRecord]]:
    """Partition records into k subject-disjoint folds, deterministically.

    Subjects are keyed by (dataset_name, subject_id) so mixed-dataset record
    lists never collide on bare subject ids. The same seed reproduces
    identical folds.
    """
    subjects = sorted({(r.dataset_name, r.subject_id) for r in records})
    if len(subjects) < k:
        raise ProtocolError(
            f"kfold:{k} needs at least {k} subjects, got {len(subjects)}"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(subjects))
    fold_of = {subjects[int(idx)]: i % k for i, idx in enumerate(order)}
    folds: list[list[SampleRecord]] = [[] for _ in range(k)]
    for rec in records:
        folds[fold_of[(rec.dataset_name, rec.subject_id)]].append(rec)
    return folds


def resolve_protocol(
    spec: ProtocolSpec, manifests: dict[str, DatasetManifest]
) -> tuple[list[SampleRecord], list[SampleRecord], list[SampleRecord]]:
    """Resolve a protocol into (train_records, dev_records, test_records).

    The three lists are pairwise disjoint by sample_id; a violation is a
    ProtocolError. In inter mode with several train manifests the train
    records are their concatenated train splits.
    """
    for name in (*spec.train_datasets, spec.test_dataset):
        if name not in manifests:
            raise ProtocolError(f"manifest {name!r} not provided")

    test_records = manifests[spec.test_dataset].require_split("test")
    train_records: list[SampleRecord] = []
    for name in spec.train_datasets:
        train_records.extend(manifests[name].require_split("train"))

    k = spec.kfold_k
    if k is None:
        dev_records: list[SampleRecord] = []
        for name in spec.train_datasets:
            dev_records.extend(manifests[name].require_split("dev"))
    else:
        folds = subject_folds(train_records, k, spec.seed)
        dev_records = folds[0]
        train_records = [r for fold in folds[1:] for r in fold]

    lists = {"train": train_records, "dev": dev_records, "test": test_records}
    for a in lists:
        for b in lists:
            if a < b:
                overlap = {r.sample_id for r in lists[a]} & {r.sample_id for r in lists[b]}
                if overlap:
                    raise ProtocolError(
                        f"{a} and {b} records overlap: {sorted(overlap)[:5]}"
                    )
    return train_records, dev_records, test_records
