import json

import numpy as np
import pytest

from seed6d.cli import main
from seed6d.scenarios import load_config, trace_header
from seed6d.errors import ConfigError


def _contact_config(**overrides):
    cfg = {
        "type": "contact",
        "name": "mini",
        "mode": "closed-loop",
        "tool": {"contact_points": [[0.0, 0.0, -0.1]], "mass": 0.0},
        "stiffness_true": {"k_tau": [2, 2, 2], "k_f": [300, 300, 300]},
        "duration": 0.2,
        "force_setpoints": [{"time": 0.0, "f_z": 2.0}],
        "seed": 0,
    }
    cfg.update(overrides)
    return cfg


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_run_outputs_and_determinism(tmp_path):
    cfg = _write(tmp_path, _contact_config())
    assert main(["run", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["run", str(cfg), "--out", str(tmp_path / "b")]) == 0
    trace_a = (tmp_path / "a" / "mini" / "trace.csv").read_bytes()
    trace_b = (tmp_path / "b" / "mini" / "trace.csv").read_bytes()
    assert trace_a == trace_b
    out = tmp_path / "a" / "mini"
    assert (out / "summary.json").exists()
    assert (out / "force_torque.png").stat().st_size > 0
    header = trace_a.decode().splitlines()[0]
    assert header == ",".join(trace_header(1))
    # Every data row is numeric and full-width.
    for line in trace_a.decode().splitlines()[1:]:
        assert len(line.split(",")) == len(trace_header(1))
        [float(v) for v in line.split(",")]


def test_run_respects_env_out(tmp_path, monkeypatch):
    cfg = _write(tmp_path, _contact_config(duration=0.05))
    monkeypatch.setenv("SEED6D_OUT", str(tmp_path / "env_out"))
    monkeypatch.chdir(tmp_path)
    assert main(["run", str(cfg)]) == 0
    assert (tmp_path / "env_out" / "mini" / "trace.csv").exists()


def test_unknown_key_rejected(tmp_path, capsys):
    cfg = _write(tmp_path, _contact_config(typo_key=1))
    assert main(["run", str(cfg)]) == 1
    assert "typo_key" in capsys.readouterr().err


def test_missing_key_rejected(tmp_path):
    bad = _contact_config()
    del bad["force_setpoints"]
    cfg = _write(tmp_path, bad)
    assert main(["run", str(cfg)]) == 1


def test_bad_mode_rejected(tmp_path):
    cfg = _write(tmp_path, _contact_config(mode="sideways"))
    with pytest.raises(ConfigError):
        load_config(cfg)
    assert main(["run", str(cfg)]) == 1


def test_invalid_json_rejected(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["run", str(path)]) == 1


def test_parallel_jobs_match_serial(tmp_path):
    cfg_a = _write(tmp_path, _contact_config(name="job_a", duration=0.05), "a.json")
    cfg_b = _write(tmp_path, _contact_config(name="job_b", duration=0.05, seed=1), "b.json")
    assert main(["run", str(cfg_a), str(cfg_b), "--out", str(tmp_path / "ser")]) == 0
    assert main(["run", str(cfg_a), str(cfg_b), "--out", str(tmp_path / "par"), "--jobs", "2"]) == 0
    for name in ("job_a", "job_b"):
        a = (tmp_path / "ser" / name / "trace.csv").read_bytes()
        b = (tmp_path / "par" / name / "trace.csv").read_bytes()
        assert a == b


def test_sysid_subcommand(tmp_path):
    cfg = _write(
        tmp_path,
        {
            "type": "sysid",
            "name": "mini_sysid",
            "stiffness_true": {"k_tau": [2, 2, 2], "k_f": [300, 300, 300]},
            "axes": ["roll", "x"],
            "amplitude": [0.3, 0.02],
            "count": 10,
        },
    )
    assert main(["sysid", str(cfg), "--out", str(tmp_path / "out")]) == 0
    out = tmp_path / "out" / "mini_sysid"
    report = json.loads((out / "report.json").read_text())
    assert report["k_tau"][0] == pytest.approx(2.0)
    assert report["k_f"][0] == pytest.approx(300.0)
    assert "tau_p" in report["unidentifiable"]
    assert (out / "samples.csv").exists()
    assert (out / "stiffness.png").stat().st_size > 0


def _estimator_config():
    return {
        "type": "estimator-eval",
        "name": "mini_eval",
        "sweeps": [{"axis": "roll", "amplitude_deg": 10.0, "count": 3}],
        "calibration": {"flow_search_radius": 12, "flow_crop": 46},
        "seed": 1234,
    }


def test_eval_estimator_subcommand(tmp_path):
    cfg = _write(tmp_path, _estimator_config())
    assert main(["eval-estimator", str(cfg), "--out", str(tmp_path / "out")]) == 0
    out = tmp_path / "out" / "mini_eval"
    report = json.loads((out / "report.json").read_text())
    assert report["sweeps"][0]["axis"] == "roll"
    assert len(report["rows"]) == 3
    assert (out / "sweeps.png").stat().st_size > 0


def test_gen_corpus_subcommand(tmp_path):
    cfg = _write(tmp_path, _estimator_config())
    assert main(["gen-corpus", str(cfg), "--out", str(tmp_path / "out")]) == 0
    corpus = tmp_path / "out" / "mini_eval" / "corpus"
    from seed6d import load_frame

    frame, gt = load_frame(corpus, "roll_000")
    assert gt is not None
    assert frame.depth_left.shape == (120, 160)


def test_shipped_scenarios_parse():
    import pathlib

    root = pathlib.Path(__file__).parent.parent / "scenarios"
    names = {p.name for p in root.glob("*.json")}
    assert {
        "pen.json",
        "squeegee_closed.json",
        "squeegee_open.json",
        "squeegee_welded.json",
        "sysid.json",
        "estimator_eval.json",
    } <= names
    for p in root.glob("*.json"):
        load_config(p)
