"""Protocol execution and report rendering.

A run trains the three per-property frame classifiers on the train split,
calibrates them and picks per-property thresholds on the dev split, trains
the fusion classifier over probability feature vectors, and evaluates the
test split. Per-property rows decide each video by majority vote over its
frames; the fused row uses the stage-2 prediction. Attack-type slices pair
each attack type with the full bona fide set so all three rates exist.

Reports embed the config digest and seed, and render as a text table in the
percentage layout of the standard PAD result tables, as CSV, or as JSON.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
from dataclasses import dataclass

import numpy as np

from .classify import (
    FUSION_PROPERTY,
    FrameProbabilitySeries,
    assemble_pfv,
    majority_vote,
    majority_vote_video,
    predict_frame_probabilities,
    train_fusion_classifier,
)
from .config import RunConfig
from .errors import DataError, ProtocolError
from .features import FeatureVector
from .metrics import ConfusionCounts, compute_rates, select_threshold_eer
from .model import (
    PROPERTY_ORDER,
    DatasetManifest,
    PropertyKind,
    SampleRecord,
    load_manifest,
    resolve_protocol,
)
from .pipeline import PipelineRunner
from .svm import SvmModel, decision_values, platt_calibrate, predict_probabilities, svm_train

SCHEMA_VERSION = 1

METHOD_NAMES = {
    PropertyKind.DEPTH: "Depth",
    PropertyKind.ILLUMINANT: "Illuminant",
    PropertyKind.SALIENCY: "Saliency",
}
FUSED_NAME = "Fused"


@dataclass(frozen=True)
class RateCell:
    hter: float
    apcer: float
    bpcer: float
    n_attacks: int
    n_bonafide: int


@dataclass(frozen=True)
class MethodRow:
    method: str
    threshold: float
    overall: RateCell
    per_attack_type: tuple[tuple[str, RateCell], ...]  # sorted by type name


@dataclass(frozen=True)
class EvalReport:
    protocol_mode: str
    train_datasets: tuple[str, ...]
    test_dataset: str
    dev_source: str
    fusion_mode: str
    seed: int
    config_digest: str
    rows: tuple[MethodRow, ...]

    def row(self, method: str) -> MethodRow:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)


@dataclass
class TrainedModels:
    """Stage-1 models keyed by property name, plus the fusion model and the
    dev-selected decision thresholds."""

    models: dict[str, SvmModel]
    thresholds: dict[str, float]
    config_digest: str
    seed: int


def _labels(records: list[SampleRecord]) -> np.ndarray:
    return np.array([r.y for r in records], dtype=np.float64)


def _frame_matrix(
    records: list[SampleRecord],
    feats: dict[str, dict[PropertyKind, list[FeatureVector]]],
    kind: PropertyKind,
) -> tuple[np.ndarray, np.ndarray]:
    rows, ys = [], []
    for rec in records:
        for fv in feats[rec.sample_id][kind]:
            rows.append(fv.values.astype(np.float64))
            ys.append(rec.y)
    return np.stack(rows), np.array(ys, dtype=np.float64)


def _concat_matrix(records, feats):
    rows, ys = [], []
    for rec in records:
        by_kind = feats[rec.sample_id]
        n = min(len(by_kind[k]) for k in PROPERTY_ORDER)
        for i in range(n):
            rows.append(
                np.concatenate(
                    [by_kind[k][i].values.astype(np.float64) for k in PROPERTY_ORDER]
                )
            )
            ys.append(rec.y)
    return np.stack(rows), np.array(ys, dtype=np.float64)


def _series_for(
    model: SvmModel,
    records: list[SampleRecord],
    feats,
    kind: PropertyKind,
) -> dict[str, FrameProbabilitySeries]:
    return {
        rec.sample_id: predict_frame_probabilities(model, feats[rec.sample_id][kind])
        for rec in records
    }


def _check_uniform_extractor(feats) -> None:
    ids = {
        fv.extractor_id
        for by_kind in feats.values()
        for vectors in by_kind.values()
        for fv in vectors
    }
    if len(ids) > 1:
        raise DataError(f"mixed extractor ids within one run: {sorted(ids)}")


def _rate_cell(labels_pred: dict[str, str], records: list[SampleRecord]) -> RateCell:
    attacks = [r for r in records if r.is_attack]
    bonafide = [r for r in records if not r.is_attack]
    counts = ConfusionCounts(
        attacks_total=len(attacks),
        attacks_accepted=sum(labels_pred[r.sample_id] == "bonafide" for r in attacks),
        bonafide_total=len(bonafide),
        bonafide_rejected=sum(labels_pred[r.sample_id] == "attack" for r in bonafide),
    )
    apcer, bpcer, hter = compute_rates(counts)
    return RateCell(
        hter=hter,
        apcer=apcer,
        bpcer=bpcer,
        n_attacks=len(attacks),
        n_bonafide=len(bonafide),
    )


def _method_row(
    method: str, threshold: float, labels_pred: dict[str, str], test: list[SampleRecord]
) -> MethodRow:
    overall = _rate_cell(labels_pred, test)
    slices = []
    types = sorted({r.attack_type for r in test if r.attack_type})
    bonafide = [r for r in test if not r.is_attack]
    for atk in types:
        subset = [r for r in test if r.attack_type == atk] + bonafide
        slices.append((atk, _rate_cell(labels_pred, subset)))
    return MethodRow(
        method=method,
        threshold=float(threshold),
        overall=overall,
        per_attack_type=tuple(slices),
    )


def fit_models(
    cfg: RunConfig, manifests: dict[str, DatasetManifest] | None = None
) -> tuple[TrainedModels, EvalReport]:
    """Train everything and evaluate the test split; never partial."""
    if manifests is None:
        manifests = {}
        for path in cfg.manifests:
            man = load_manifest(path, strict=cfg.strict)
            manifests[man.dataset_name] = man
    spec = cfg.protocol_spec()
    train, dev, test = resolve_protocol(spec, manifests)
    if not (train and dev and test):
        raise ProtocolError("protocol resolution produced an empty split")

    runner = PipelineRunner(cfg)
    feats = {}
    for records in (train, dev, test):
        feats.update(runner.features_for(records))
    _check_uniform_extractor(feats)

    class_weight = (
        {1: cfg.class_weight_attack} if cfg.class_weight_attack else None
    )
    models: dict[str, SvmModel] = {}
    thresholds: dict[str, float] = {}
    rows: list[MethodRow] = []
    dev_series: dict[PropertyKind, dict[str, FrameProbabilitySeries]] = {}
    train_series: dict[PropertyKind, dict[str, FrameProbabilitySeries]] = {}
    test_series: dict[PropertyKind, dict[str, FrameProbabilitySeries]] = {}

    for kind in PROPERTY_ORDER:
        x_train, y_train = _frame_matrix(train, feats, kind)
        model = svm_train(
            x_train,
            y_train,
            kernel=cfg.kernel,
            c_param=cfg.c_param,
            gamma=cfg.gamma,
            seed=cfg.seed,
            class_weight=class_weight,
            standardize=cfg.standardize,
            extractor_id=next(iter(feats.values()))[kind][0].extractor_id,
            property_name=kind.value,
        )
        x_dev, y_dev = _frame_matrix(dev, feats, kind)
        model = platt_calibrate(model, decision_values(model, x_dev), y_dev)
        models[kind.value] = model

        dev_probs = predict_probabilities(model, x_dev)
        tau = select_threshold_eer(dev_probs, y_dev)
        thresholds[kind.value] = tau

        train_series[kind] = _series_for(model, train, feats, kind)
        dev_series[kind] = _series_for(model, dev, feats, kind)
        test_series[kind] = _series_for(model, test, feats, kind)

        pred = {
            sid: majority_vote_video(series, tau)
            for sid, series in test_series[kind].items()
        }
        rows.append(_method_row(METHOD_NAMES[kind], tau, pred, test))

    if cfg.fusion_mode == "pfv":
        train_pfvs = [
            assemble_pfv({k: train_series[k][r.sample_id] for k in PROPERTY_ORDER})
            for r in train
        ]
        dev_pfvs = [
            assemble_pfv({k: dev_series[k][r.sample_id] for k in PROPERTY_ORDER})
            for r in dev
        ]
        test_pfvs = [
            assemble_pfv({k: test_series[k][r.sample_id] for k in PROPERTY_ORDER})
            for r in test
        ]
        fusion = train_fusion_classifier(
            train_pfvs,
            _labels(train),
            dev_pfvs,
            _labels(dev),
            c_param=cfg.fusion_c,
            gamma=cfg.fusion_gamma,
            seed=cfg.seed,
        )
        dev_fused = predict_probabilities(
            fusion, np.stack([p.as_array() for p in dev_pfvs])
        )
        tau_f = select_threshold_eer(dev_fused, _labels(dev))
        test_fused = predict_probabilities(
            fusion, np.stack([p.as_array() for p in test_pfvs])
        )
        pred_f = {
            rec.sample_id: ("attack" if prob > tau_f else "bonafide")
            for rec, prob in zip(test, test_fused)
        }
    elif cfg.fusion_mode == "concat":
        x_train, y_train = _concat_matrix(train, feats)
        fusion = svm_train(
            x_train,
            y_train,
            kernel="rbf",
            c_param=cfg.fusion_c,
            gamma=cfg.fusion_gamma,
            seed=cfg.seed,
            extractor_id="concat",
            property_name=FUSION_PROPERTY,
        )
        x_dev, y_dev = _concat_matrix(dev, feats)
        fusion = platt_calibrate(fusion, decision_values(fusion, x_dev), y_dev)
        tau_f = select_threshold_eer(predict_probabilities(fusion, x_dev), y_dev)
        pred_f = {}
        for rec in test:
            by_kind = feats[rec.sample_id]
            n = min(len(by_kind[k]) for k in PROPERTY_ORDER)
            x = np.stack(
                [
                    np.concatenate(
                        [by_kind[k][i].values.astype(np.float64) for k in PROPERTY_ORDER]
                    )
                    for i in range(n)
                ]
            )
            pred_f[rec.sample_id] = majority_vote(
                predict_probabilities(fusion, x), tau_f
            )
    else:
        raise DataError(f"unknown fusion_mode {cfg.fusion_mode!r}")

    models[FUSION_PROPERTY] = fusion
    thresholds[FUSION_PROPERTY] = float(tau_f)
    rows.append(_method_row(FUSED_NAME, tau_f, pred_f, test))

    report = EvalReport(
        protocol_mode=spec.mode,
        train_datasets=tuple(spec.train_datasets),
        test_dataset=spec.test_dataset,
        dev_source=spec.dev_source,
        fusion_mode=cfg.fusion_mode,
        seed=cfg.seed,
        config_digest=cfg.digest(),
        rows=tuple(rows),
    )
    trained = TrainedModels(
        models=models,
        thresholds=thresholds,
        config_digest=cfg.digest(),
        seed=cfg.seed,
    )
    return trained, report


def run_protocol(
    cfg: RunConfig, manifests: dict[str, DatasetManifest] | None = None
) -> EvalReport:
    """Execute the configured protocol end to end."""
    _, report = fit_models(cfg, manifests)
    return report


# -- rendering ---------------------------------------------------------------


def report_to_dict(report: EvalReport) -> dict:
    out = dataclasses.asdict(report)
    out["schema_version"] = SCHEMA_VERSION
    return out


def report_from_dict(data: dict) -> EvalReport:
    if data.get("schema_version") != SCHEMA_VERSION:
        raise DataError(f"unsupported report schema {data.get('schema_version')!r}")
    rows = []
    for row in data["rows"]:
        rows.append(
            MethodRow(
                method=row["method"],
                threshold=row["threshold"],
                overall=RateCell(**row["overall"]),
                per_attack_type=tuple(
                    (atk, RateCell(**cell)) for atk, cell in row["per_attack_type"]
                ),
            )
        )
    return EvalReport(
        protocol_mode=data["protocol_mode"],
        train_datasets=tuple(data["train_datasets"]),
        test_dataset=data["test_dataset"],
        dev_source=data["dev_source"],
        fusion_mode=data["fusion_mode"],
        seed=data["seed"],
        config_digest=data["config_digest"],
        rows=tuple(rows),
    )


def _pct(value: float) -> str:
    return f"{value * 100.0:.2f}"


def render_report(report: EvalReport, fmt: str = "text-table") -> str:
    if fmt in ("text", "text-table"):
        return _render_text(report)
    if fmt == "csv":
        return _render_csv(report)
    if fmt == "json":
        return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"
    raise DataError(f"unknown report format {fmt!r}")


def _render_text(report: EvalReport) -> str:
    types = sorted({atk for row in report.rows for atk, _ in row.per_attack_type})
    header = ["Method", *[t.capitalize() for t in types], "Overall"]
    lines = [
        f"protocol: {report.protocol_mode}  train: {'+'.join(report.train_datasets)}"
        f"  test: {report.test_dataset}  dev: {report.dev_source}",
        f"fusion: {report.fusion_mode}  seed: {report.seed}  config: {report.config_digest}",
        "",
        "HTER (%) by attack type",
    ]
    table = [header]
    for row in report.rows:
        cells = dict(row.per_attack_type)
        table.append(
            [
                row.method,
                *[(_pct(cells[t].hter) if t in cells else "-") for t in types],
                _pct(row.overall.hter),
            ]
        )
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    for r in table:
        lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)))

    lines += ["", "Overall rates (%)"]
    table2 = [["Method", "HTER", "APCER", "BPCER", "threshold"]]
    for row in report.rows:
        table2.append(
            [
                row.method,
                _pct(row.overall.hter),
                _pct(row.overall.apcer),
                _pct(row.overall.bpcer),
                f"{row.threshold:.4f}",
            ]
        )
    widths2 = [max(len(r[i]) for r in table2) for i in range(5)]
    for r in table2:
        lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths2)))
    return "\n".join(lines) + "\n"


def _render_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(
        ["method", "attack_type", "hter", "apcer", "bpcer", "threshold", "n_test", "seed"]
    )
    for row in report.rows:
        cells = [("overall", row.overall), *row.per_attack_type]
        for atk, cell in cells:
            writer.writerow(
                [
                    row.method,
                    atk,
                    repr(cell.hter),
                    repr(cell.apcer),
                    repr(cell.bpcer),
                    repr(row.threshold),
                    cell.n_attacks + cell.n_bonafide,
                    report.seed,
                ]
            )
    return buf.getvalue()
