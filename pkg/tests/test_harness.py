import json

import numpy as np
import pytest

from gossip_blocks.harness import (ExperimentConfig, experiment_streams, load_karate,
                                   monte_carlo_stationarity, run_block_detection, run_experiment,
                                   run_karate, run_seeds)
from gossip_blocks.model import BlockModel, InvalidModelError, five_node_model, validate_network


def test_karate_loader():
    data = load_karate()
    assert len(data.truth) == 34 and len(data.edges) == 78
    assert sorted(np.bincount(data.truth)[1:].tolist()) == [17, 17]
    assert data.truth[0] != data.truth[33]
    assert data.anchors == {0: 1, 33: 32}
    assert data.truth[1] == data.truth[0] and data.truth[32] == data.truth[33]
    net = data.network()
    assert np.array_equal(net.W, net.W.T)
    assert validate_network(net).ok
    assert net.stubborn == (0, 33) and net.x_s == (1.0, 0.0)
    assert np.count_nonzero(net.W) == 2 * 78


def test_karate_short_run_reports_misspecification():
    run = run_karate(0, steps=2000, log_every=500)
    s = run.summary()
    assert s["model_misspecified"] is True
    assert 0.5 <= s["final_accuracy"] <= 1.0
    assert run.trace.t.tolist() == [0, 500, 1000, 1500, 2000]


def test_streams_are_distinct_and_reproducible():
    a = [np.random.default_rng(s).random() for s in experiment_streams(3)]
    b = [np.random.default_rng(s).random() for s in experiment_streams(3)]
    assert a == b and len(set(a)) == 3


def test_block_detection_flags():
    run = run_block_detection(five_node_model(), 1, 4000, log_every=1000)
    assert "stabilized" in run.extra
    assert run.extra["stabilized"] == (run.last_change <= 2000)


def test_run_seeds_order():
    assert run_seeds(lambda s: s * 2, [3, 1, 2], workers=2) == [6, 2, 4]


def test_experiment_config_round_trip(tmp_path):
    cfg = ExperimentConfig(steps=3000, replications=2, seed=5, log_every=250,
                           output=str(tmp_path / "a"))
    path = tmp_path / "cfg.json"
    cfg.save(path)
    again = ExperimentConfig.load(path)
    assert again == cfg
    first = run_experiment(cfg)
    again.output = str(tmp_path / "b")
    second = run_experiment(again)
    assert first == second
    for name in ("trace_0.csv", "trace_1.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    header = (tmp_path / "a" / "trace_0.csv").read_text().splitlines()[0]
    assert header == "t,accuracy,w_s_hat,w_d_hat"
    assert json.loads((tmp_path / "a" / "summary.json").read_text())[0]["steps"] == 3000


def test_experiment_config_rejects_bad_values():
    with pytest.raises(ValueError):
        ExperimentConfig(steps=0)
    with pytest.raises(ValueError):
        ExperimentConfig(replications=0)


def test_monte_carlo_consensus_case():
    m = five_node_model((0.3,), (0.3,))
    x0 = np.full(5, 0.3)
    rep = monte_carlo_stationarity(m, 0, x0=x0, ergodic_steps=1000, batches=10,
                                   replications=5, replication_steps=100)
    assert rep["chi1"] == pytest.approx(0.3) and rep["chi2"] == pytest.approx(0.3)
    assert rep["replication"]["pass"] and rep["ergodic"]["pass"]
    assert rep["replication"]["z"] == [0.0, 0.0, 0.0]


def test_monte_carlo_invalid_model():
    bad = BlockModel(2, 3, 1, 2, 0.04, 0.04, (1.0,), (0.0,))
    with pytest.raises(InvalidModelError):
        monte_carlo_stationarity(bad, replications=2, replication_steps=10, ergodic_steps=100)
