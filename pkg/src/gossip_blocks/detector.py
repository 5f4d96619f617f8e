"""Online community detection and parameter estimation.

Regular agents are split by comparing each agent's running state average with
the mean of all running averages; stubborn agents inherit the label of their
anchor. The same-community weight is tracked by a sign-corrected
stochastic-approximation recursion with step size 1/t, and the
cross-community weight follows from the normalization
``(n1^2 + n2^2) w_s + 2 n1 n2 w_d = 1``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from .model import GossipNetwork, check_prior, same_partition
from .simulator import CHUNK, TrajectoryState, draw_pairs, initial_state, make_rng

W_S, W_D, SKIPPED, N1, N2 = range(5)


@dataclass
class DetectorState:
    regular: np.ndarray
    stubborn: np.ndarray
    anchor_pos: np.ndarray
    labels_r: np.ndarray
    labels_s: np.ndarray
    est: np.ndarray
    t: int = -1
    s_r: np.ndarray | None = None
    x_s: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.regular) + len(self.stubborn)

    @property
    def labels(self) -> np.ndarray:
        out = np.empty(self.n, dtype=np.int64)
        out[self.regular] = self.labels_r
        out[self.stubborn] = self.labels_s
        return out

    @property
    def w_s_hat(self) -> float:
        return float(self.est[W_S])

    @property
    def w_d_hat(self) -> float:
        return float(self.est[W_D])

    @property
    def skipped_updates(self) -> int:
        return int(self.est[SKIPPED])

    @property
    def n1_hat(self) -> int:
        return int(self.est[N1])

    @property
    def n2_hat(self) -> int:
        return int(self.est[N2])


def init_detector(n: int, regular: Sequence[int], prior: Mapping[int, int], seed) -> DetectorState:
    """Random labels, ``w_s_hat`` uniform on (0, 2), ``w_d_hat`` from the normalization.

    If the random labels leave a community empty, ``w_d_hat`` is drawn
    uniformly from (0, 1) instead.
    """
    regular = np.sort(np.asarray(regular, dtype=np.int64))
    if len(regular) == 0:
        raise ValueError("need at least one regular agent")
    stubborn = np.setdiff1d(np.arange(n), regular)
    check_prior(prior, stubborn, regular)
    pos = {int(r): k for k, r in enumerate(regular)}
    anchor_pos = np.array([pos[int(prior[int(s)])] for s in stubborn], dtype=np.int64)
    rng = make_rng(seed)
    labels_r = rng.integers(1, 3, size=len(regular)).astype(np.int64)
    labels_s = labels_r[anchor_pos].copy()
    w_s = rng.uniform(0.0, 2.0)
    n1 = int(np.sum(labels_r == 1) + np.sum(labels_s == 1))
    n2 = n - n1
    if n1 * n2 > 0:
        w_d = (1.0 - (n1 * n1 + n2 * n2) * w_s) / (2.0 * n1 * n2)
    else:
        w_d = rng.uniform(0.0, 1.0)
    est = np.array([w_s, w_d, 0.0, n1, n2], dtype=float)
    return DetectorState(regular, stubborn, anchor_pos, labels_r, labels_s, est)


def observe(state: DetectorState, x_r, x_s) -> DetectorState:
    """Feed one observation. The first call seeds the running averages with x^r(0)."""
    x_r = np.ascontiguousarray(x_r, dtype=float)
    x_s = np.asarray(x_s, dtype=float)
    if x_r.shape != (len(state.regular),) or x_s.shape != (len(state.stubborn),):
        raise ValueError("observation dimensions do not match the detector")
    if state.s_r is None:
        state.s_r = x_r.copy()
        state.x_s = x_s.copy()
        state.t = 0
        return state
    if not np.array_equal(x_s, state.x_s):
        raise ValueError("stubborn states changed between observations")
    state.t += 1
    _kernels.detector_iteration(state.t, state.s_r, x_r, state.x_s, state.anchor_pos,
                                state.labels_r, state.labels_s, state.est)
    return state


class DetectorObserver:
    """Adapter so a detector can be passed to :func:`simulator.run`."""

    def __init__(self, state: DetectorState, keep_history: bool = False):
        self.state = state
        self.history = [] if keep_history else None

    def __call__(self, t, changed, x):
        observe(self.state, x[self.state.regular], x[self.state.stubborn])
        if self.history is not None:
            self.history.append(self.state.labels)


def has_converged(history: Sequence, window: int) -> bool:
    """True iff the partition is the same over the last ``window`` entries."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if len(history) < window:
        return False
    last = history[-1]
    return all(same_partition(h, last) for h in history[-window:])


def accuracy(est, truth) -> float:
    """Fraction of agreeing labels, maximized over both relabelings of {1, 2}."""
    est = np.asarray(est)
    truth = np.asarray(truth)
    if est.shape != truth.shape:
        raise ValueError("assignments cover different agent sets")
    if est.size == 0:
        raise ValueError("empty assignment")
    hits = int(np.sum(est == truth))
    swapped = int(np.sum((3 - est) == truth))
    return max(hits, swapped) / est.size


@dataclass
class AccuracyTrace:
    t: np.ndarray
    accuracy: np.ndarray
    w_s_hat: np.ndarray
    w_d_hat: np.ndarray
    labels_changed: np.ndarray

    def write_csv(self, path, columns=("t", "accuracy", "w_s_hat", "w_d_hat")) -> None:
        cols = [getattr(self, c) for c in columns]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in zip(*cols):
                writer.writerow([repr(v.item()) for v in row])


@dataclass
class DetectionRun:
    detector: DetectorState
    final: TrajectoryState
    trace: AccuracyTrace
    last_wrong: int
    last_change: int
    first_correct: int = -1
    extra: dict = field(default_factory=dict)

    @property
    def converged_at(self) -> int:
        """Step of the last label change; labels are constant afterwards."""
        return self.last_change

    def summary(self) -> dict:
        d = self.detector
        return {
            "final_labels": d.labels.tolist(),
            "w_s_hat": d.w_s_hat,
            "w_d_hat": d.w_d_hat,
            "skipped_updates": d.skipped_updates,
            "converged_at": self.converged_at,
            "last_wrong": self.last_wrong,
            "first_correct": self.first_correct,
            "steps": self.final.t,
            **self.extra,
        }


def track(net: GossipNetwork, x0, T: int, seed, detector: DetectorState,
          truth=None, log_every: int = 100) -> DetectionRun:
    """Simulate ``T`` steps with the detector observing every state.

    The compiled loop runs the same per-step code as :func:`observe`. With
    ``truth`` given, the trace records permutation-maximized accuracy and
    ``last_wrong`` is the last step whose partition differed from the truth.
    """
    if detector.s_r is not None:
        raise ValueError("detector has already observed data")
    if not (np.array_equal(detector.regular, net.regular)
            and np.array_equal(detector.stubborn, net.stubborn_index)):
        raise ValueError("detector and network disagree on regular/stubborn agents")
    x = initial_state(net, x0)
    rng = make_rng(seed)
    observe(detector, x[detector.regular], x[detector.stubborn])
    have_truth = truth is not None
    if have_truth:
        truth = np.asarray(truth, dtype=np.int64)
        truth_r, truth_s = truth[detector.regular], truth[detector.stubborn]
    else:
        truth_r = np.zeros(len(detector.regular), dtype=np.int64)
        truth_s = np.zeros(len(detector.stubborn), dtype=np.int64)
    acc0 = _kernels.partition_accuracy(detector.labels_r, detector.labels_s, truth_r, truth_s)
    full0 = have_truth and acc0 == 1.0
    tracking = np.array([-1 if full0 else 0, 0, 0, 0 if full0 else -1], dtype=np.int64)

    cols = {"t": [np.array([0])], "accuracy": [np.array([acc0])],
            "w_s_hat": [detector.est[W_S:W_S + 1].copy()],
            "w_d_hat": [detector.est[W_D:W_D + 1].copy()],
            "labels_changed": [np.array([0])]}
    every = int(log_every) if log_every else 0
    rows_cap = CHUNK // every + 1 if every else 1
    buf_t = np.empty(rows_cap, dtype=np.int64)
    buf_acc = np.empty(rows_cap)
    buf_ws = np.empty(rows_cap)
    buf_wd = np.empty(rows_cap)
    buf_ch = np.empty(rows_cap, dtype=np.int64)
    is_reg = net.is_regular
    t = 0
    while t < T:
        size = min(CHUNK, T - t)
        first, second = draw_pairs(net, rng, size)
        rows = _kernels.detect_chunk(x, is_reg, detector.regular, first, second, t,
                                     detector.s_r, detector.x_s, detector.anchor_pos,
                                     detector.labels_r, detector.labels_s, detector.est,
                                     truth_r, truth_s, every, tracking,
                                     buf_t, buf_acc, buf_ws, buf_wd, buf_ch)
        for key, buf in zip(cols, (buf_t, buf_acc, buf_ws, buf_wd, buf_ch)):
            cols[key].append(buf[:rows].copy())
        t += size
    detector.t = t
    trace = AccuracyTrace(**{k: np.concatenate(v) for k, v in cols.items()})
    if not have_truth:
        trace.accuracy[:] = np.nan
    final = TrajectoryState(t, x, rng)
    extra = {}
    if have_truth:
        extra["final_accuracy"] = accuracy(detector.labels, truth)
    else:
        tracking[[0, 3]] = -1
    return DetectionRun(detector, final, trace, int(tracking[0]), int(tracking[1]),
                        int(tracking[3]), extra)


def estimator_bracket(s_r, x_s, labels_r, labels_s, w_s: float) -> float:
    """``g * w_s + beta2 / (2 n1 n2)`` for given averages and labels.

    The weight recursion moves ``w_s_hat`` against the sign-corrected value
    of this bracket, so it vanishes at the fixed point.
    """
    beta1, beta2, g, n1, n2, nr1 = _kernels.estimator_terms(
        np.ascontiguousarray(s_r, dtype=float), np.ascontiguousarray(x_s, dtype=float),
        np.asarray(labels_r, dtype=np.int64), np.asarray(labels_s, dtype=np.int64))
    if nr1 == 0 or n1 == 0 or n2 == 0:
        raise ValueError("labeling leaves a community without regular agents")
    return g * w_s + beta2 / (2.0 * n1 * n2)
