import json

import numpy as np
import pytest

from padpipe.cli import main
from padpipe.pfm import write_pfm


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture
def synth_dir(tmp_path):
    code = run_cli(
        "synth", "--out", str(tmp_path / "data"),
        "--subjects", "5", "--videos", "2", "--frames", "2",
        "--seed", "3", "--frame-size", "72", "--depth-size", "48",
    )
    assert code == 0
    cfg = tmp_path / "data" / "run.cfg"
    text = cfg.read_text().replace("canonical_size = 64", "canonical_size = 48")
    text = text.replace("superpixels = 64", "superpixels = 32")
    cfg.write_text(text)
    return tmp_path / "data"


def test_synth_writes_dataset_and_config(synth_dir):
    assert (synth_dir / "manifest.jsonl").exists()
    assert (synth_dir / "run.cfg").exists()
    assert len(list((synth_dir / "frames").iterdir())) == 10


def test_evaluate_end_to_end(synth_dir, capsys):
    code = run_cli("evaluate", "--config", str(synth_dir / "run.cfg"))
    assert code == 0
    out = capsys.readouterr().out
    assert "Fused" in out
    reports = synth_dir / "reports"
    assert (reports / "report.json").exists()
    assert (reports / "report.csv").exists()
    assert (reports / "report.txt").exists()
    data = json.loads((reports / "report.json").read_text())
    assert data["schema_version"] == 1


def test_stage_commands_fill_the_cache(synth_dir):
    assert run_cli("extract-frames", "--config", str(synth_dir / "run.cfg")) == 0
    assert run_cli("align", "--config", str(synth_dir / "run.cfg")) == 0
    assert run_cli("compute-maps", "--config", str(synth_dir / "run.cfg")) == 0
    assert run_cli("extract-features", "--config", str(synth_dir / "run.cfg")) == 0
    cache = synth_dir / ".padcache"
    assert list(cache.rglob("*.padf"))


def test_train_saves_models(synth_dir):
    code = run_cli("train", "--config", str(synth_dir / "run.cfg"))
    assert code == 0
    models = list((synth_dir / "models").rglob("*.padm"))
    assert {p.stem for p in models} == {"depth", "illuminant", "saliency", "fusion"}
    meta = json.loads(next((synth_dir / "models").rglob("meta.json")).read_text())
    assert set(meta["thresholds"]) == {"depth", "illuminant", "saliency", "fusion"}


def test_train_without_config_is_usage_error(capsys):
    assert run_cli("train") == 1
    err = capsys.readouterr().err
    assert "usage" in err.lower()


def test_unknown_flag_is_usage_error(capsys):
    assert run_cli("evaluate", "--config", "x", "--bogus") == 1


def test_no_command_is_usage_error(capsys):
    assert run_cli() == 1


def test_missing_config_file_is_data_error(capsys):
    assert run_cli("evaluate", "--config", "/nonexistent/run.cfg") == 2


def test_strict_missized_depth_is_data_error_naming_file(synth_dir, capsys):
    bad = synth_dir / "depth" / "s000v00" / "000000.pfm"
    write_pfm(bad, np.zeros((7, 9), dtype=np.float32))
    code = run_cli("compute-maps", "--config", str(synth_dir / "run.cfg"), "--strict")
    assert code == 2
    err = capsys.readouterr().err
    assert "000000.pfm" in err


def test_report_rerenders_and_guards_digests(synth_dir, tmp_path, capsys):
    assert run_cli("evaluate", "--config", str(synth_dir / "run.cfg")) == 0
    capsys.readouterr()
    report = synth_dir / "reports" / "report.json"
    assert run_cli("report", "--in", str(report), "--format", "csv") == 0
    assert "method,attack_type" in capsys.readouterr().out

    other = tmp_path / "other.json"
    data = json.loads(report.read_text())
    data["config_digest"] = "deadbeef"
    other.write_text(json.dumps(data))
    assert run_cli("report", "--in", str(report), "--in", str(other)) == 2
    assert run_cli("report", "--in", str(report), "--in", str(other), "--force") == 0
