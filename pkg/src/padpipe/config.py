"""Declarative run configuration: a flat TOML-style key/value file.

Sections become dotted key prefixes. Values are strings (quoted or bare),
numbers, booleans, or comma-separated lists. Every config carries a content
digest that is embedded in all artifacts so any result table can be traced
back to the exact settings that produced it.

Example::

    [paths]
    manifests = "data/manifest.jsonl"
    cache_dir = ".padcache"

    [protocol]
    mode = "intra"
    train_datasets = "synth"
    test_dataset = "synth"
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import DataError
from .model import ProtocolSpec


def parse_config_file(path) -> dict[str, object]:
    """Parse `key = value` lines under [section] headers into dotted keys."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"config file missing: {path}")
    out: dict[str, object] = {}
    section = ""
    for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise DataError(f"{path}:{line_no}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        full = f"{section}.{key}" if section else key
        out[full] = _parse_value(value.strip())
    return out


def _parse_value(text: str):
    if text.startswith('"') and text.endswith('"') and len(text) >= 2:
        return text[1:-1]
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    if "," in text:
        return [v.strip().strip('"') for v in text.split(",") if v.strip()]
    return text


@dataclass(frozen=True)
class RunConfig:
    """All knobs for one pipeline run. Paths are absolute after loading."""

    # paths
    manifests: tuple[str, ...] = ()
    cache_dir: str = ".padcache"
    model_dir: str = "models"
    out_dir: str = "out"

    # preprocess
    rate_hz: float = 10.0
    canonical_size: int = 224
    eye_row_frac: float = 0.40
    eye_dist_frac: float = 0.42
    decoder_command: str | None = None
    landmark_command: str | None = None

    # property maps
    superpixels: int = 200
    compactness: float = 10.0
    sigma_clr: float = 10.0
    sigma_bnd: float = 1.0
    sigma_spa: float = 0.25
    smooth_floor: float = 0.1
    hough_bin: float = 0.01
    intensity_low: float = 0.03
    intensity_high: float = 0.98
    min_usable_pixels: int = 16

    # depth provider
    depth_mode: str = "constant"
    depth_path_template: str | None = None
    depth_command: str | None = None

    # feature extractor
    extractor_mode: str = "fallback"
    feature_path_template: str | None = None
    extractor_command: str | None = None

    # classifiers
    kernel: str = "linear"
    c_param: float = 1.0
    gamma: float | None = None
    standardize: bool = False
    class_weight_attack: float | None = None
    fusion_c: float = 1.0
    fusion_gamma: float | None = None
    fusion_mode: str = "pfv"  # "pfv" (two-stage) or "concat" (joined features)

    # protocol
    protocol_mode: str = "intra"
    train_datasets: tuple[str, ...] = ()
    test_dataset: str = ""
    dev_source: str = "dev_split"

    seed: int = 0
    strict: bool = False
    jobs: int = 1

    _KEYMAP = {
        "paths.manifests": "manifests",
        "paths.cache_dir": "cache_dir",
        "paths.model_dir": "model_dir",
        "paths.out_dir": "out_dir",
        "preprocess.rate_hz": "rate_hz",
        "preprocess.canonical_size": "canonical_size",
        "preprocess.eye_row_frac": "eye_row_frac",
        "preprocess.eye_dist_frac": "eye_dist_frac",
        "preprocess.decoder_command": "decoder_command",
        "preprocess.landmark_command": "landmark_command",
        "maps.superpixels": "superpixels",
        "maps.compactness": "compactness",
        "maps.sigma_clr": "sigma_clr",
        "maps.sigma_bnd": "sigma_bnd",
        "maps.sigma_spa": "sigma_spa",
        "maps.smooth_floor": "smooth_floor",
        "maps.hough_bin": "hough_bin",
        "maps.intensity_low": "intensity_low",
        "maps.intensity_high": "intensity_high",
        "maps.min_usable_pixels": "min_usable_pixels",
        "depth.mode": "depth_mode",
        "depth.path_template": "depth_path_template",
        "depth.command": "depth_command",
        "features.extractor": "extractor_mode",
        "features.path_template": "feature_path_template",
        "features.command": "extractor_command",
        "classifier.kernel": "kernel",
        "classifier.c_param": "c_param",
        "classifier.gamma": "gamma",
        "classifier.standardize": "standardize",
        "classifier.class_weight_attack": "class_weight_attack",
        "classifier.fusion_c": "fusion_c",
        "classifier.fusion_gamma": "fusion_gamma",
        "classifier.fusion_mode": "fusion_mode",
        "protocol.mode": "protocol_mode",
        "protocol.train_datasets": "train_datasets",
        "protocol.test_dataset": "test_dataset",
        "protocol.dev_source": "dev_source",
        "run.seed": "seed",
        "run.strict": "strict",
        "run.jobs": "jobs",
    }

    _PATH_FIELDS = ("cache_dir", "model_dir", "out_dir")
    _PATH_TEMPLATE_FIELDS = ("depth_path_template", "feature_path_template")

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "RunConfig":
        path = Path(path)
        raw = parse_config_file(path)
        kwargs: dict[str, object] = {}
        for key, value in raw.items():
            if key not in cls._KEYMAP:
                raise DataError(f"{path}: unknown config key {key!r}")
            kwargs[cls._KEYMAP[key]] = value
        if overrides:
            kwargs.update(overrides)
        for tup_field in ("manifests", "train_datasets"):
            if tup_field in kwargs:
                v = kwargs[tup_field]
                kwargs[tup_field] = tuple(v) if isinstance(v, (list, tuple)) else (str(v),)
        cfg = cls(**kwargs)  # type: ignore[arg-type]
        return cfg._resolve_paths(path.parent)

    def _resolve_paths(self, base: Path) -> "RunConfig":
        updates: dict[str, object] = {}
        resolved = []
        for m in self.manifests:
            resolved.append(str(base / m) if not Path(m).is_absolute() else m)
        updates["manifests"] = tuple(resolved)
        for name in self._PATH_FIELDS + self._PATH_TEMPLATE_FIELDS:
            value = getattr(self, name)
            if value and not Path(str(value)).is_absolute():
                updates[name] = str(base / str(value))
        return dataclasses.replace(self, **updates)

    def protocol_spec(self) -> ProtocolSpec:
        if not self.test_dataset:
            raise DataError("config has no protocol.test_dataset")
        return ProtocolSpec(
            mode=self.protocol_mode,
            train_datasets=tuple(self.train_datasets),
            test_dataset=self.test_dataset,
            dev_source=self.dev_source,
            seed=self.seed,
        )

    def digest(self) -> str:
        """Canonical content hash: run settings minus machine-local roots."""
        skip = {"cache_dir", "model_dir", "out_dir", "jobs"}
        lines = []
        for f in fields(self):
            if f.name.startswith("_") or f.name in skip:
                continue
            lines.append(f"{f.name}={getattr(self, f.name)!r}")
        blob = "\n".join(sorted(lines)).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]
