"""Gossip models with stubborn agents.

Two representations are provided. :class:`BlockModel` holds the generative
parameters of the two-community block model; :class:`GossipNetwork` holds a
general symmetric pair-probability matrix together with the stubborn agents
and their fixed states. ``to_general`` converts the former to the latter.

Agent indices are 0-based throughout the Python API. File formats use 1-based
indices.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

SUM_TOL = 1e-12


class InvalidModelError(ValueError):
    """Raised when an operation needs a valid model and gets an invalid one."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors

    def raise_if_invalid(self) -> None:
        if self.errors:
            raise InvalidModelError(self.errors)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "errors": list(self.errors), "warnings": list(self.warnings)}


@dataclass(frozen=True)
class BlockModel:
    """Two-community block model.

    Agents are ordered as community-1 regular, community-1 stubborn,
    community-2 regular, community-2 stubborn.
    """

    n1: int
    n2: int
    n_r1: int
    n_r2: int
    w_s: float
    w_d: float
    x_s1: tuple[float, ...] = ()
    x_s2: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "x_s1", tuple(float(v) for v in self.x_s1))
        object.__setattr__(self, "x_s2", tuple(float(v) for v in self.x_s2))

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    @property
    def n_s1(self) -> int:
        return self.n1 - self.n_r1

    @property
    def n_s2(self) -> int:
        return self.n2 - self.n_r2

    @property
    def n_r(self) -> int:
        return self.n_r1 + self.n_r2

    @property
    def n_s(self) -> int:
        return self.n_s1 + self.n_s2

    @property
    def regular(self) -> np.ndarray:
        return np.r_[np.arange(self.n_r1), self.n1 + np.arange(self.n_r2)]

    @property
    def stubborn(self) -> np.ndarray:
        return np.r_[self.n_r1 + np.arange(self.n_s1), self.n1 + self.n_r2 + np.arange(self.n_s2)]

    @property
    def x_s(self) -> np.ndarray:
        return np.array(self.x_s1 + self.x_s2, dtype=float)

    @property
    def communities(self) -> np.ndarray:
        """Ground-truth labels (1 or 2) for every agent."""
        return np.r_[np.ones(self.n1, dtype=np.int64), np.full(self.n2, 2, dtype=np.int64)]

    def with_stubborn_states(self, x_s1, x_s2) -> "BlockModel":
        return BlockModel(self.n1, self.n2, self.n_r1, self.n_r2, self.w_s, self.w_d,
                          tuple(x_s1), tuple(x_s2))


def five_node_model(x_s1=(1.0,), x_s2=(0.0,)) -> BlockModel:
    """The 5-agent example: regular {1}, stubborn {2} | regular {3, 4}, stubborn {5}."""
    return BlockModel(n1=2, n2=3, n_r1=1, n_r2=2, w_s=0.05, w_d=7 / 240,
                      x_s1=tuple(x_s1), x_s2=tuple(x_s2))


def block_model_from_ratio(n1, n2, n_r1, n_r2, ratio, x_s1=(), x_s2=()) -> BlockModel:
    """Build a block model with ``w_d = ratio * w_s`` and the weights normalized to sum 1."""
    w_s = 1.0 / (n1 * n1 + n2 * n2 + 2.0 * ratio * n1 * n2)
    return BlockModel(n1, n2, n_r1, n_r2, w_s, ratio * w_s, tuple(x_s1), tuple(x_s2))


def random_block_model(rng: np.random.Generator, max_n: int = 8) -> BlockModel:
    """Draw a valid block model with at most ``max_n`` agents."""
    while True:
        n = int(rng.integers(3, max_n + 1))
        n1 = int(rng.integers(1, n))
        n2 = n - n1
        n_r1 = int(rng.integers(1, n1 + 1))
        n_r2 = int(rng.integers(1, n2 + 1))
        if n_r1 + n_r2 < n:
            break
    ratio = float(np.exp(rng.uniform(-2.5, 2.5)))
    x_s = rng.normal(size=n - n_r1 - n_r2)
    return block_model_from_ratio(n1, n2, n_r1, n_r2, ratio,
                                  x_s[: n1 - n_r1], x_s[n1 - n_r1:])


def validate_block_model(m: BlockModel) -> ValidationReport:
    errors = []
    warnings = []
    if m.n1 < 1 or m.n2 < 1:
        errors.append("both communities must be non-empty")
    if m.n_r1 < 1 or m.n_r2 < 1:
        errors.append("both communities need at least one regular agent (n_r1, n_r2 >= 1)")
    if m.n_s1 < 0 or m.n_s2 < 0:
        errors.append("regular counts exceed community sizes (n_s1, n_s2 >= 0)")
    elif m.n_s1 + m.n_s2 < 1:
        errors.append("at least one stubborn agent is required (n_s1 + n_s2 >= 1)")
    if not (m.w_s > 0 and m.w_d > 0):
        errors.append("w_s and w_d must be positive")
    if m.w_s == m.w_d:
        errors.append("w_s != w_d required (no block structure otherwise)")
    total = m.w_s * (m.n1 ** 2 + m.n2 ** 2) + 2.0 * m.w_d * m.n1 * m.n2
    if abs(total - 1.0) > SUM_TOL:
        errors.append(f"weights must satisfy 1'W1 = 1 (got {total!r})")
    if m.n_s1 >= 0 and len(m.x_s1) != m.n_s1:
        errors.append(f"x_s1 has {len(m.x_s1)} entries, expected n_s1 = {m.n_s1}")
    if m.n_s2 >= 0 and len(m.x_s2) != m.n_s2:
        errors.append(f"x_s2 has {len(m.x_s2)} entries, expected n_s2 = {m.n_s2}")
    if not np.all(np.isfinite(m.x_s1 + m.x_s2)):
        errors.append("stubborn states must be finite")
    if not errors and not _distinct_stubborn_means(m):
        warnings.append("stubborn means of the two communities coincide or a community "
                        "has no stubborn agents; communities are not identifiable")
    return ValidationReport(tuple(errors), tuple(warnings))


def _distinct_stubborn_means(m: BlockModel, tol: float = 1e-12) -> bool:
    if m.n_s1 <= 0 or m.n_s2 <= 0:
        return False
    return abs(float(np.mean(m.x_s1)) - float(np.mean(m.x_s2))) > tol


@dataclass(frozen=True)
class GossipNetwork:
    """General gossip network.

    ``W[i, j]`` is half the probability that the unordered pair ``{i, j}`` is
    activated; ``W[i, i]`` is the probability of the no-op self pair.
    """

    W: np.ndarray
    stubborn: tuple[int, ...] = ()
    x_s: tuple[float, ...] = ()

    def __post_init__(self):
        W = np.array(self.W, dtype=float)
        W.setflags(write=False)
        object.__setattr__(self, "W", W)
        order = np.argsort(np.asarray(self.stubborn, dtype=np.int64), kind="stable")
        stub = tuple(int(self.stubborn[k]) for k in order)
        xs = tuple(float(self.x_s[k]) for k in order) if len(self.x_s) == len(self.stubborn) \
            else tuple(float(v) for v in self.x_s)
        object.__setattr__(self, "stubborn", stub)
        object.__setattr__(self, "x_s", xs)

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @cached_property
    def is_regular(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=np.bool_)
        mask[list(self.stubborn)] = False
        mask.setflags(write=False)
        return mask

    @property
    def regular(self) -> np.ndarray:
        return np.flatnonzero(self.is_regular)

    @property
    def stubborn_index(self) -> np.ndarray:
        return np.asarray(self.stubborn, dtype=np.int64)

    @cached_property
    def pairs(self) -> "PairTable":
        return pair_distribution(self)


def validate_network(net: GossipNetwork) -> ValidationReport:
    errors = []
    W = net.W
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        return ValidationReport(("W must be a square matrix",))
    if not np.all(np.isfinite(W)):
        errors.append("W must be finite")
    if np.any(W < 0):
        errors.append("W must be nonnegative")
    if not np.array_equal(W, W.T):
        errors.append("W must be symmetric")
    total = float(W.sum())
    if abs(total - 1.0) > SUM_TOL:
        errors.append(f"1'W1 must equal 1 (got {total!r})")
    if any(i < 0 or i >= net.n for i in net.stubborn):
        errors.append("stubborn index out of range")
    if len(set(net.stubborn)) != len(net.stubborn):
        errors.append("duplicate stubborn index")
    if len(net.x_s) != len(net.stubborn):
        errors.append("x_s must give exactly one state per stubborn agent")
    return ValidationReport(tuple(errors))


def to_general(m: BlockModel) -> GossipNetwork:
    validate_block_model(m).raise_if_invalid()
    c = m.communities
    W = np.where(c[:, None] == c[None, :], m.w_s, m.w_d)
    return GossipNetwork(W, tuple(int(i) for i in m.stubborn), tuple(m.x_s))


def update_matrix(net: GossipNetwork, i: int, j: int) -> np.ndarray:
    """The update matrix applied when the pair ``{i, j}`` is activated."""
    n = net.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"agent pair ({i}, {j}) out of range for n = {n}")
    R = np.eye(n)
    if i == j:
        return R
    reg = net.is_regular
    for a, b in ((i, j), (j, i)):
        if reg[a]:
            R[a, a] = 0.5
            R[a, b] = 0.5
    return R


@dataclass(frozen=True)
class PairTable:
    """Unordered pair events ``(first[k], second[k])`` with probabilities ``prob[k] > 0``."""

    first: np.ndarray
    second: np.ndarray
    prob: np.ndarray
    cdf: np.ndarray


def pair_distribution(net: GossipNetwork) -> PairTable:
    W = net.W
    i, j = np.triu_indices(net.n)
    p = np.where(i == j, W[i, j], 2.0 * W[i, j])
    keep = p > 0
    i, j, p = i[keep], j[keep], p[keep]
    cdf = np.cumsum(p)
    cdf /= cdf[-1]
    for a in (i, j, p, cdf):
        a.setflags(write=False)
    return PairTable(i.astype(np.int64), j.astype(np.int64), p, cdf)


# --- community assignments and stubborn priors -------------------------------

def same_partition(a, b) -> bool:
    """Whether two 1/2 labelings describe the same partition."""
    a = np.asarray(a)
    b = np.asarray(b)
    return bool(np.array_equal(a, b) or np.array_equal(a, 3 - b))


def check_prior(prior: Mapping[int, int], stubborn: Sequence[int], regular: Sequence[int]) -> None:
    """Every stubborn agent needs exactly one anchor, and anchors must be regular."""
    regular = set(int(r) for r in regular)
    missing = [int(s) for s in stubborn if int(s) not in prior]
    if missing:
        raise ValueError(f"stubborn agents without an anchor: {missing}")
    extra = set(prior) - set(int(s) for s in stubborn)
    if extra:
        raise ValueError(f"anchors given for non-stubborn agents: {sorted(extra)}")
    bad = {s: r for s, r in prior.items() if int(r) not in regular}
    if bad:
        raise ValueError(f"anchors must be regular agents: {bad}")


def default_prior(m: BlockModel) -> dict[int, int]:
    """Anchor each stubborn agent to the first regular agent of its community."""
    first = {1: 0, 2: m.n1}
    c = m.communities
    return {int(s): first[int(c[s])] for s in m.stubborn}


# --- files -------------------------------------------------------------------

def load_model_config(path) -> tuple[BlockModel, int | None, np.ndarray | None]:
    """Read a JSON block-model config.

    Returns the model, the ``seed`` entry (or None) and an optional
    ``x_r0`` override for the initial regular states.
    """
    data = json.loads(Path(path).read_text())
    return model_from_dict(data)


def model_from_dict(data: Mapping) -> tuple[BlockModel, int | None, np.ndarray | None]:
    required = ("n1", "n2", "n_r1", "n_r2", "w_s", "w_d")
    missing = [k for k in required if k not in data]
    if missing:
        raise ValueError(f"model config missing keys: {missing}")
    m = BlockModel(int(data["n1"]), int(data["n2"]), int(data["n_r1"]), int(data["n_r2"]),
                   float(data["w_s"]), float(data["w_d"]),
                   tuple(data.get("x_s1", ())), tuple(data.get("x_s2", ())))
    seed = data.get("seed")
    x_r0 = data.get("x_r0")
    return m, (None if seed is None else int(seed)), (None if x_r0 is None else np.asarray(x_r0, float))


def model_to_dict(m: BlockModel, seed: int | None = None, x_r0=None) -> dict:
    data = {"n1": m.n1, "n2": m.n2, "n_r1": m.n_r1, "n_r2": m.n_r2, "w_s": m.w_s, "w_d": m.w_d,
            "x_s1": list(m.x_s1), "x_s2": list(m.x_s2)}
    if seed is not None:
        data["seed"] = int(seed)
    if x_r0 is not None:
        data["x_r0"] = [float(v) for v in x_r0]
    return data


def save_model_config(path, m: BlockModel, seed: int | None = None, x_r0=None) -> None:
    Path(path).write_text(json.dumps(model_to_dict(m, seed, x_r0), indent=2) + "\n")


def read_edge_list(path_or_lines, stubborn: Mapping[int, float], n: int | None = None) -> GossipNetwork:
    """Build a network from an edge list.

    Each non-comment line is ``i j [weight]`` with 1-based agent ids. Without
    weights, every edge gets ``w_ij = 1 / (2 |E|)`` so each edge is activated
    with probability ``1 / |E|``. ``stubborn`` maps 1-based ids to fixed states.
    """
    if isinstance(path_or_lines, (str, Path)):
        lines = Path(path_or_lines).read_text().splitlines()
    else:
        lines = list(path_or_lines)
    edges = []
    weights = []
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ValueError(f"line {lineno}: expected 'i j [weight]'")
        i, j = int(parts[0]), int(parts[1])
        if i < 1 or j < 1:
            raise ValueError(f"line {lineno}: agent ids are 1-based")
        if i == j and len(parts) == 2:
            raise ValueError(f"line {lineno}: self pairs need an explicit weight")
        edges.append((i - 1, j - 1))
        weights.append(float(parts[2]) if len(parts) == 3 else None)
    if not edges:
        raise ValueError("edge list is empty")
    has_w = [w is not None for w in weights]
    if any(has_w) and not all(has_w):
        raise ValueError("either every edge carries a weight or none does")
    size = max(max(e) for e in edges) + 1
    if stubborn:
        size = max(size, max(stubborn))
    if n is not None:
        if n < size:
            raise ValueError(f"n = {n} is smaller than the largest agent id {size}")
        size = n
    W = np.zeros((size, size))
    for (i, j), w in zip(edges, weights):
        value = 1.0 / (2 * len(edges)) if w is None else w
        if W[i, j] != 0:
            raise ValueError(f"duplicate edge {{{i + 1}, {j + 1}}}")
        W[i, j] = value
        W[j, i] = value
    ids = sorted(stubborn)
    return GossipNetwork(W, tuple(i - 1 for i in ids), tuple(float(stubborn[i]) for i in ids))
