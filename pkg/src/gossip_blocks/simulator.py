"""Seeded simulation of gossip trajectories.

Randomness comes from numpy's PCG64 generator. One uniform double is consumed
per step and mapped to a pair event by inverse CDF, so a trajectory is fixed
by ``(seed, T, network, x0)`` regardless of how the steps are batched.
Independent replications use streams spawned from ``SeedSequence(seed)``.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .model import GossipNetwork

CHUNK = 1 << 16

Observer = Callable[[int, tuple, np.ndarray], None]


@dataclass
class TrajectoryState:
    t: int
    x: np.ndarray
    rng: np.random.Generator


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def worker_count() -> int:
    env = os.environ.get("GOSSIP_BLOCKS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def draw_pairs(net: GossipNetwork, rng: np.random.Generator, size: int):
    table = net.pairs
    idx = np.searchsorted(table.cdf, rng.random(size), side="right")
    np.minimum(idx, len(table.cdf) - 1, out=idx)
    return table.first[idx], table.second[idx]


def sample_pair(net: GossipNetwork, rng: np.random.Generator) -> tuple[int, int]:
    """Draw one unordered pair; ``i == j`` is the no-op self pair."""
    first, second = draw_pairs(net, rng, 1)
    return int(first[0]), int(second[0])


def initial_state(net: GossipNetwork, x0=None, rng=None) -> np.ndarray:
    """Check ``x0`` against the network, or draw standard Gaussian regular states."""
    if x0 is None:
        x = np.zeros(net.n)
        x[net.regular] = make_rng(rng).standard_normal(len(net.regular))
        x[net.stubborn_index] = net.x_s
        return x
    x = np.array(x0, dtype=float)
    if x.shape != (net.n,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({net.n},)")
    if not np.array_equal(x[net.stubborn_index], np.asarray(net.x_s)):
        raise ValueError("stubborn coordinates of x0 differ from the network's fixed states")
    return x


def step(net: GossipNetwork, state: TrajectoryState) -> TrajectoryState:
    i, j = sample_pair(net, state.rng)
    _kernels.apply_pair(state.x, net.is_regular, i, j)
    state.t += 1
    return state


def _changed(is_regular, i, j) -> tuple:
    if i == j:
        return ()
    return tuple(k for k in (i, j) if is_regular[k])


def run(net: GossipNetwork, x0, T: int, seed, observers: Sequence[Observer] = ()) -> TrajectoryState:
    """Run ``T`` steps from ``x0``.

    Each observer is called as ``observer(t, changed, x)`` once with the
    initial state (``t = 0``, nothing changed) and then once after every step.
    ``x`` is a read-only view of the live state.
    """
    x = initial_state(net, x0)
    state = TrajectoryState(0, x, make_rng(seed))
    view = x.view()
    view.flags.writeable = False
    for obs in observers:
        obs(0, (), view)
    mask = net.is_regular
    remaining = int(T)
    while remaining > 0:
        size = min(CHUNK, remaining)
        first, second = draw_pairs(net, state.rng, size)
        if not observers:
            _kernels.apply_pairs(x, mask, first, second)
            state.t += size
        else:
            for i, j in zip(first.tolist(), second.tolist()):
                _kernels.apply_pair(x, mask, i, j)
                state.t += 1
                changed = _changed(mask, i, j)
                for obs in observers:
                    obs(state.t, changed, view)
        remaining -= size
    return state


class RunningAverage:
    """Observer keeping the per-agent running mean of regular states."""

    def __init__(self, regular):
        self.regular = np.asarray(regular, dtype=np.int64)
        self.s = None
        self.count = 0

    def __call__(self, t, changed, x):
        xr = np.ascontiguousarray(x[self.regular])
        if self.s is None:
            self.s = xr.copy()
        else:
            _kernels.average_update(self.count, self.s, xr)
        self.count += 1


class TrajectoryRecorder:
    """Observer storing full states every ``every`` steps."""

    def __init__(self, every: int = 1):
        self.every = every
        self.t = []
        self.states = []

    def __call__(self, t, changed, x):
        if t % self.every == 0:
            self.t.append(t)
            self.states.append(np.array(x))

    def as_array(self) -> np.ndarray:
        return np.array(self.states)


def run_time_average(net: GossipNetwork, x0, T: int, seed) -> tuple[TrajectoryState, np.ndarray]:
    """Fused run returning the final state and the time average of x^r(0..T)."""
    x = initial_state(net, x0)
    state = TrajectoryState(0, x, make_rng(seed))
    regular = net.regular
    s = x[regular].copy()
    remaining = int(T)
    while remaining > 0:
        size = min(CHUNK, remaining)
        first, second = draw_pairs(net, state.rng, size)
        _kernels.apply_pairs_averaging(x, net.is_regular, regular, first, second, state.t, s)
        state.t += size
        remaining -= size
    return state, s


def sample_path(net: GossipNetwork, x0, T: int, seed, every: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """States at ``t = 0, every, 2 every, ...`` up to ``T``; returns (times, states)."""
    if every < 1:
        raise ValueError("every must be >= 1")
    x = initial_state(net, x0)
    rng = make_rng(seed)
    times = [0]
    rows = [x.copy()]
    t = 0
    while t < T:
        size = min(CHUNK, T - t)
        first, second = draw_pairs(net, rng, size)
        start = 0
        while start < size:
            stop = min(size, start + every - (t + start) % every)
            _kernels.apply_pairs(x, net.is_regular, first[start:stop], second[start:stop])
            if (t + stop) % every == 0:
                times.append(t + stop)
                rows.append(x.copy())
            start = stop
        t += size
    return np.array(times), np.array(rows)


def map_replications(fn: Callable[[int, np.random.SeedSequence], object], replications: int,
                     seed, workers: int | None = None) -> list:
    """Evaluate ``fn(index, child_seed)`` for every replication, ordered by index."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    children = seed.spawn(replications)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or replications <= 1:
        return [fn(k, c) for k, c in enumerate(children)]
    with ThreadPoolExecutor(max_workers=min(workers, replications)) as pool:
        return list(pool.map(fn, range(replications), children))


def replicate_final_states(net: GossipNetwork, x0, T: int, replications: int, seed,
                           workers: int | None = None) -> np.ndarray:
    """Final states x(T) of independent trajectories, shape (replications, n)."""
    x = initial_state(net, x0)

    def one(k, child):
        return run(net, x, T, child).x

    return np.array(map_replications(one, replications, seed, workers))


def empirical_expectation(net: GossipNetwork, x0, T: int, replications: int, seed,
                          workers: int | None = None) -> np.ndarray:
    return replicate_final_states(net, x0, T, replications, seed, workers).mean(axis=0)


def batch_means(net: GossipNetwork, x0, T: int, seed, batches: int = 50) -> np.ndarray:
    """Time averages of x^r over ``batches`` consecutive equal blocks of steps.

    Row ``b`` averages the post-update states of steps ``b L + 1 .. (b + 1) L``
    with ``L = T // batches``; leftover steps are not simulated.
    """
    length = T // batches
    if length < 1:
        raise ValueError("need at least one step per batch")
    x = initial_state(net, x0)
    rng = make_rng(seed)
    regular = net.regular
    out = np.zeros((batches, len(regular)))
    for b in range(batches):
        done = 0
        while done < length:
            size = min(CHUNK, length - done)
            first, second = draw_pairs(net, rng, size)
            _kernels.apply_pairs_summing(x, net.is_regular, regular, first, second, out[b])
            done += size
        out[b] /= length
    return out
