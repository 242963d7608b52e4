"""Command-line entry point.

Subcommands mirror the pipeline stages: synth, extract-frames, align,
compute-maps, extract-features, train, evaluate, report. Each reads a
config file plus flag overrides. Exit codes: 0 success, 1 usage error,
2 data error, 3 internal error. PAD_CACHE_DIR overrides the cache path.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

from .config import RunConfig
from .errors import PadError
from .model import load_manifest
from .pipeline import PipelineRunner
from .protocol import fit_models, render_report, report_from_dict, run_protocol
from .svm import save_model
from .synthgen import SynthSpec, generate_synthetic_dataset

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="padpipe", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    def add_common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="run config file")
        p.add_argument("--jobs", type=int, default=None, help="parallel workers")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--strict", action="store_true", help="fail on soft data issues")

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--subjects", type=int, default=10)
    p.add_argument("--videos", type=int, default=4)
    p.add_argument("--frames", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--attack-fraction", type=float, default=0.5)
    p.add_argument("--frame-size", type=int, default=96)
    p.add_argument("--depth-size", type=int, default=64)
    p.add_argument("--dataset", default="synth")

    for name in ("extract-frames", "align", "compute-maps", "extract-features"):
        p = sub.add_parser(name, help=f"run the {name.replace('-', ' ')} stage")
        add_common(p)

    p = sub.add_parser("train", help="fit stage-1, fusion models and thresholds")
    add_common(p)

    p = sub.add_parser("evaluate", help="run the configured protocol end to end")
    add_common(p)
    p.add_argument("--protocol", choices=("intra", "inter"), default=None)
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")

    p = sub.add_parser("report", help="re-render saved evaluation reports")
    p.add_argument("--in", dest="inputs", action="append", required=True)
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p.add_argument("--force", action="store_true", help="merge despite digest mismatch")
    return parser


def _load_config(args) -> RunConfig:
    overrides = {}
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.strict:
        overrides["strict"] = True
    if getattr(args, "protocol", None):
        overrides["protocol_mode"] = args.protocol
    return RunConfig.from_file(args.config, overrides)


def _records(cfg: RunConfig):
    for path in cfg.manifests:
        manifest = load_manifest(path, strict=cfg.strict)
        yield from manifest.records


def _cmd_synth(args) -> int:
    spec = SynthSpec(
        n_subjects=args.subjects,
        videos_per_subject=args.videos,
        frames_per_video=args.frames,
        seed=args.seed,
        attack_fraction=args.attack_fraction,
        frame_size=args.frame_size,
        depth_size=args.depth_size,
        dataset_name=args.dataset,
    )
    manifest = generate_synthetic_dataset(spec, args.out)
    cfg_path = Path(args.out) / "run.cfg"
    cfg_path.write_text(_synth_config_text(spec), encoding="utf-8")
    print(f"wrote {len(manifest.records)} samples to {args.out}")
    print(f"wrote starter config {cfg_path}")
    return EXIT_OK


def _synth_config_text(spec: SynthSpec) -> str:
    return f"""[paths]
manifests = "manifest.jsonl"
cache_dir = ".padcache"
model_dir = "models"
out_dir = "reports"

[preprocess]
rate_hz = 10
canonical_size = 64

[maps]
superpixels = 64

[depth]
mode = "precomputed"
path_template = "depth/{{sample_id}}/{{index:06d}}.pfm"

[features]
extractor = "fallback"

[protocol]
mode = "intra"
train_datasets = "{spec.dataset_name}"
test_dataset = "{spec.dataset_name}"
dev_source = "dev_split"

[run]
seed = {spec.seed}
"""


def _cmd_stage(args, stage: str) -> int:
    cfg = _load_config(args)
    runner = PipelineRunner(cfg)
    count = 0
    for record in _records(cfg):
        if stage == "extract-frames":
            runner.raw_frames(record)
        elif stage == "align":
            runner.aligned_frames(record)
        elif stage == "compute-maps":
            runner.map_paths(record)
        else:
            runner.features(record)
        count += 1
    print(f"{stage}: {count} samples complete (cache {runner.root})")
    return EXIT_OK


def _cmd_train(args) -> int:
    cfg = _load_config(args)
    trained, report = fit_models(cfg)
    model_dir = Path(cfg.model_dir) / trained.config_digest
    for name, model in trained.models.items():
        save_model(model_dir / f"{name}.padm", model)
    meta = {
        "config_digest": trained.config_digest,
        "seed": trained.seed,
        "thresholds": trained.thresholds,
    }
    (model_dir / "meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"saved {len(trained.models)} models to {model_dir}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    report = run_protocol(cfg)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(render_report(report, "json"), encoding="utf-8")
    (out_dir / "report.csv").write_text(render_report(report, "csv"), encoding="utf-8")
    (out_dir / "report.txt").write_text(render_report(report, "text"), encoding="utf-8")
    sys.stdout.write(render_report(report, args.format))
    return EXIT_OK


def _cmd_report(args) -> int:
    reports = []
    for path in args.inputs:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        reports.append(report_from_dict(data))
    digests = {r.config_digest for r in reports}
    if len(digests) > 1 and not args.force:
        raise PadError(
            f"refusing to merge reports with differing config digests {sorted(digests)}; "
            "pass --force to override"
        )
    for report in reports:
        sys.stdout.write(render_report(report, args.format))
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command in ("extract-frames", "align", "compute-maps", "extract-features"):
            return _cmd_stage(args, args.command)
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "evaluate":
            return _cmd_evaluate(args)
        if args.command == "report":
            return _cmd_report(args)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except _UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except PadError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DATA
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
