"""Experiment runners: the 5-agent block model, the karate club network and
Monte Carlo checks of the stationary analysis."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .analysis import stationary_expectation
from .detector import AccuracyTrace, DetectionRun, accuracy, init_detector, track
from .model import (BlockModel, GossipNetwork, default_prior, five_node_model, model_from_dict,
                    model_to_dict, read_edge_list, same_partition, to_general)
from .simulator import batch_means, initial_state, map_replications, replicate_final_states

__all__ = ["AccuracyTrace", "accuracy", "ExperimentConfig", "KarateData", "load_karate",
           "run_block_detection", "run_five_node", "run_karate", "run_seeds",
           "monte_carlo_stationarity", "run_experiment"]

FIVE_NODE_STEPS = 10 ** 5


def experiment_streams(seed):
    """Independent streams for (initial states, dynamics, detector init)."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return seed.spawn(3)


def run_block_detection(m: BlockModel, seed, steps: int, prior=None, x0=None,
                        log_every: int = 100) -> DetectionRun:
    net = to_general(m)
    s_x0, s_dyn, s_det = experiment_streams(seed)
    x = initial_state(net, x0, s_x0)
    detector = init_detector(net.n, net.regular, prior or default_prior(m), s_det)
    run = track(net, x, steps, s_dyn, detector, truth=m.communities, log_every=log_every)
    run.extra["stabilized"] = bool(run.last_change <= steps // 2)
    return run


def run_five_node(seed, steps: int = FIVE_NODE_STEPS, log_every: int = 100) -> DetectionRun:
    """Detection on the 5-agent model (w_s = 0.05, w_d = 7/240), Gaussian initial states."""
    return run_block_detection(five_node_model(), seed, steps, log_every=log_every)


@dataclass(frozen=True)
class KarateData:
    edges: tuple[tuple[int, int], ...]
    truth: np.ndarray
    anchors: dict

    def network(self, states=(1.0, 0.0)) -> GossipNetwork:
        lines = [f"{i} {j}" for i, j in self.edges]
        return read_edge_list(lines, {1: states[0], 34: states[1]}, n=len(self.truth))


def _read_pairs(text):
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].split()
        if line:
            out.append((int(line[0]), int(line[1])))
    return out


def load_karate() -> KarateData:
    """Bundled karate club data: edges, split labels and anchors (1-based in the files)."""
    pkg = resources.files("gossip_blocks") / "data"
    try:
        edges = _read_pairs((pkg / "karate_edges.txt").read_text())
        nodes = _read_pairs((pkg / "karate_nodes.txt").read_text())
        anchors = _read_pairs((pkg / "karate_anchors.txt").read_text())
    except FileNotFoundError as exc:
        raise FileNotFoundError(f"karate dataset missing: {exc}") from exc
    truth = np.zeros(len(nodes), dtype=np.int64)
    for node, label in nodes:
        truth[node - 1] = label
    return KarateData(tuple(edges), truth, {s - 1: r - 1 for s, r in anchors})


def run_karate(seed, steps: int = 10 ** 6, states=(1.0, 0.0), log_every: int = 100) -> DetectionRun:
    """Detection on the karate club network with members 1 and 34 stubborn.

    The network is not a block model, so the weight estimates are reported
    but flagged as coming from a misspecified model.
    """
    data = load_karate()
    net = data.network(states)
    s_x0, s_dyn, s_det = experiment_streams(seed)
    x = initial_state(net, None, s_x0)
    detector = init_detector(net.n, net.regular, data.anchors, s_det)
    run = track(net, x, steps, s_dyn, detector, truth=data.truth, log_every=log_every)
    run.extra["model_misspecified"] = True
    return run


def run_seeds(fn, seeds, workers=None) -> list:
    """Run ``fn(seed)`` for each seed, results in seed order."""
    seeds = list(seeds)
    return map_replications(lambda k, _child: fn(seeds[k]), len(seeds), 0, workers)


def monte_carlo_stationarity(m: BlockModel, seed=0, x0=None, ergodic_steps: int = 10 ** 6,
                             batches: int = 50, replications: int = 2000,
                             replication_steps: int = 2000, z_limit: float = 3.0) -> dict:
    """Compare simulated averages of regular states with the stationary expectation.

    Two oracles are used: independent replications of x(T) (standard error
    from the replication spread), and one long trajectory split into batches
    (standard error from the spread of batch means).
    """
    st = stationary_expectation(m)
    net = to_general(m)
    s_x0, s_rep, s_erg = experiment_streams(seed)
    x = initial_state(net, x0, s_x0)
    target = st.x_r_star

    finals = replicate_final_states(net, x, replication_steps, replications, s_rep)[:, net.regular]
    rep_mean = finals.mean(axis=0)
    rep_se = finals.std(axis=0, ddof=1) / np.sqrt(replications) if replications > 1 \
        else np.zeros_like(rep_mean)

    bm = batch_means(net, x, ergodic_steps, s_erg, batches)
    erg_mean = bm.mean(axis=0)
    erg_se = bm.std(axis=0, ddof=1) / np.sqrt(batches)

    # differences at rounding level count as exact agreement
    tol = 1e-12 * max(1.0, float(np.max(np.abs(target))))

    def z(mean, se):
        diff = mean - target
        diff = np.where(np.abs(diff) <= tol, 0.0, diff)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(se > 0, diff / se, np.where(diff == 0, 0.0, np.inf))
        return out

    z_rep = z(rep_mean, rep_se)
    z_erg = z(erg_mean, erg_se)
    return {
        "chi1": st.chi1,
        "chi2": st.chi2,
        "target": target.tolist(),
        "replication": {"mean": rep_mean.tolist(), "stderr": rep_se.tolist(),
                        "z": z_rep.tolist(), "pass": bool(np.all(np.abs(z_rep) <= z_limit)),
                        "replications": replications, "steps": replication_steps},
        "ergodic": {"mean": erg_mean.tolist(), "stderr": erg_se.tolist(),
                    "z": z_erg.tolist(), "pass": bool(np.all(np.abs(z_erg) <= z_limit)),
                    "steps": (ergodic_steps // batches) * batches, "batches": batches},
    }


@dataclass
class ExperimentConfig:
    """A detection experiment on a block model, serializable to JSON."""

    model: BlockModel = field(default_factory=five_node_model)
    steps: int = FIVE_NODE_STEPS
    replications: int = 1
    seed: int = 0
    log_every: int = 100
    output: str = "out"

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"] = model_to_dict(self.model)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        d["model"] = model_from_dict(d["model"])[0]
        return cls(**d)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    """Run every replication, writing ``trace_<k>.csv`` and ``summary.json`` to ``cfg.output``."""
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    truth = cfg.model.communities

    def one(k, child):
        return run_block_detection(cfg.model, child, cfg.steps, log_every=cfg.log_every)

    runs = map_replications(one, cfg.replications, cfg.seed)
    summaries = []
    for k, run in enumerate(runs):
        run.trace.write_csv(out / f"trace_{k}.csv")
        s = run.summary()
        s["correct_partition"] = same_partition(run.detector.labels, truth)
        s["final_accuracy"] = accuracy(run.detector.labels, truth)
        summaries.append(s)
    (out / "summary.json").write_text(json.dumps(summaries, indent=2) + "\n")
    return summaries
