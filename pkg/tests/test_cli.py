import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from gossip_blocks.analysis import stationary_expectation
from gossip_blocks.cli import DETECT_COLUMNS, main
from gossip_blocks.model import BlockModel, save_model_config


@pytest.fixture
def model_path(tmp_path, small_model):
    path = tmp_path / "model.json"
    save_model_config(path, small_model, seed=3)
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_validate_ok_and_failure(tmp_path, model_path, capsys):
    assert main(["validate", "--model", str(model_path)]) == 0
    assert json.loads(capsys.readouterr().out)["ok"] is True
    bad = tmp_path / "bad.json"
    save_model_config(bad, BlockModel(2, 3, 1, 2, 0.04, 0.04, (1.0,), (0.0,)))
    assert main(["validate", "--model", str(bad)]) == 1
    assert json.loads(capsys.readouterr().out)["errors"]


def test_validate_edges(tmp_path, capsys):
    edges = tmp_path / "g.txt"
    edges.write_text("1 2\n2 3\n")
    assert main(["validate", "--edges", str(edges), "--stubborn", "3=1.0"]) == 0
    assert main(["validate", "--edges", str(edges), "--stubborn", "3"]) == 1
    edges.write_text("1 2\n2 1\n")
    assert main(["validate", "--edges", str(edges)]) == 1


def test_missing_keys_exit_one(tmp_path, capsys):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"n1": 2}))
    assert main(["analyze", "--model", str(path)]) == 1
    assert "missing keys" in capsys.readouterr().err


def test_runtime_error_exit_two(tmp_path, capsys):
    assert main(["analyze", "--model", str(tmp_path / "nope.json")]) == 2


def test_analyze(tmp_path, model_path, small_model):
    out = tmp_path / "report.json"
    assert main(["analyze", "--model", str(model_path), "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    st = stationary_expectation(small_model)
    assert report["chi1"] == st.chi1 and report["chi2"] == st.chi2
    assert set(report["gamma"]) == {"gamma11", "gamma12", "gamma21", "gamma22"}
    assert report["identifiable"] is True


def test_simulate_csv(tmp_path, model_path):
    out = tmp_path / "traj.csv"
    assert main(["simulate", "--model", str(model_path), "--steps", "100",
                 "--log-every", "10", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["t", "x_1", "x_2", "x_3", "x_4", "x_5"]
    assert [int(r[0]) for r in rows[1:]] == list(range(0, 101, 10))
    assert all(float(r[2]) == 1.0 and float(r[5]) == 0.0 for r in rows[1:])
    assert out.read_bytes().count(b"\r") == 0

    out2 = tmp_path / "reg.csv"
    assert main(["simulate", "--model", str(model_path), "--steps", "100", "--log-every", "10",
                 "--regular-only", "--out", str(out2)]) == 0
    rows2 = read_csv(out2)
    assert rows2[0] == ["t", "x_1", "x_3", "x_4"]
    assert [r[:2] + r[3:5] for r in rows] == rows2


def test_simulate_edges(tmp_path):
    edges = tmp_path / "g.txt"
    edges.write_text("1 2\n2 3\n3 4\n")
    out = tmp_path / "e.csv"
    assert main(["simulate", "--edges", str(edges), "--stubborn", "1=1", "--stubborn", "4=0",
                 "--steps", "50", "--seed", "1", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 52
    assert all(float(r[1]) == 1.0 for r in rows[1:])


def test_simulate_seed_override(tmp_path, model_path):
    paths = [tmp_path / f"{k}.csv" for k in range(3)]
    main(["simulate", "--model", str(model_path), "--steps", "200", "--out", str(paths[0])])
    main(["simulate", "--model", str(model_path), "--steps", "200", "--seed", "3",
          "--out", str(paths[1])])
    main(["simulate", "--model", str(model_path), "--steps", "200", "--seed", "4",
          "--out", str(paths[2])])
    assert paths[0].read_bytes() == paths[1].read_bytes() != paths[2].read_bytes()


def test_negative_steps(model_path):
    assert main(["simulate", "--model", str(model_path), "--steps", "-1"]) == 1


def test_detect(tmp_path, model_path):
    log, summary = tmp_path / "d.csv", tmp_path / "s.json"
    anchors = tmp_path / "anchors.txt"
    anchors.write_text("# stubborn regular\n2 1\n5 3\n")
    assert main(["detect", "--model", str(model_path), "--steps", "5000", "--anchors", str(anchors),
                 "--log", str(log), "--log-every", "1000", "--summary", str(summary)]) == 0
    rows = read_csv(log)
    assert tuple(rows[0]) == DETECT_COLUMNS
    assert [int(r[0]) for r in rows[1:]] == list(range(0, 5001, 1000))
    s = json.loads(summary.read_text())
    for key in ("final_labels", "w_s_hat", "w_d_hat", "skipped_updates", "converged_at"):
        assert key in s
    assert len(s["final_labels"]) == 5


def test_detect_bad_anchor(tmp_path, model_path):
    anchors = tmp_path / "anchors.txt"
    anchors.write_text("2 1\n")
    assert main(["detect", "--model", str(model_path), "--steps", "10",
                 "--anchors", str(anchors)]) == 1


def test_karate(tmp_path):
    log, summary = tmp_path / "k.csv", tmp_path / "k.json"
    assert main(["karate", "--steps", "3000", "--log", str(log), "--log-every", "1000",
                 "--summary", str(summary)]) == 0
    assert read_csv(log)[0] == ["t", "accuracy", "w_s_hat", "w_d_hat"]
    assert len(json.loads(summary.read_text())["final_labels"]) == 34


def test_montecarlo(tmp_path, model_path):
    out = tmp_path / "mc.json"
    assert main(["montecarlo", "--model", str(model_path), "--ergodic-steps", "10000",
                 "--batches", "10", "--replications", "20", "--replication-steps", "100",
                 "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert np.allclose(report["target"], [41 / 76, 63 / 152, 63 / 152])


def test_module_entry_point(model_path):
    proc = subprocess.run([sys.executable, "-m", "gossip_blocks", "analyze", "--model",
                           str(model_path)], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["chi1"] == pytest.approx(41 / 76)
