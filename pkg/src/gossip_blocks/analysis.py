"""Closed-form stationary analysis of the block gossip model.

Everything here is deterministic dense linear algebra on small matrices. The
functions double as oracles for the simulator and the detector.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import BlockModel, GossipNetwork, update_matrix, validate_block_model

STRUCTURE_TOL = 1e-10


@dataclass(frozen=True)
class ExpectedMatrices:
    R_bar: np.ndarray
    A_bar: np.ndarray
    B_bar: np.ndarray


@dataclass(frozen=True)
class StationaryAnalysis:
    x_r_star: np.ndarray
    chi1: float
    chi2: float
    gamma11: float
    gamma12: float
    gamma21: float
    gamma22: float
    delta: float
    rho_A_bar: float

    @property
    def gamma(self) -> dict:
        return {"gamma11": self.gamma11, "gamma12": self.gamma12,
                "gamma21": self.gamma21, "gamma22": self.gamma22}


def _ones(r, c):
    return np.ones((r, c))


def expected_matrices(m: BlockModel) -> ExpectedMatrices:
    """Block closed forms of E{R(t)}, E{A(t)} and E{B(t)}."""
    validate_block_model(m).raise_if_invalid()
    ws, wd = m.w_s, m.w_d
    nr1, ns1, nr2, ns2 = m.n_r1, m.n_s1, m.n_r2, m.n_s2
    d1 = (1 - ws * m.n1 - wd * m.n2) * np.eye(nr1) + ws * _ones(nr1, nr1)
    d2 = (1 - ws * m.n2 - wd * m.n1) * np.eye(nr2) + ws * _ones(nr2, nr2)
    A = np.block([[d1, wd * _ones(nr1, nr2)],
                  [wd * _ones(nr2, nr1), d2]])
    B = np.block([[ws * _ones(nr1, ns1), wd * _ones(nr1, ns2)],
                  [wd * _ones(nr2, ns1), ws * _ones(nr2, ns2)]])
    R = np.block([
        [d1, ws * _ones(nr1, ns1), wd * _ones(nr1, nr2), wd * _ones(nr1, ns2)],
        [np.zeros((ns1, nr1)), np.eye(ns1), np.zeros((ns1, nr2)), np.zeros((ns1, ns2))],
        [wd * _ones(nr2, nr1), wd * _ones(nr2, ns1), d2, ws * _ones(nr2, ns2)],
        [np.zeros((ns2, nr1)), np.zeros((ns2, ns1)), np.zeros((ns2, nr2)), np.eye(ns2)],
    ])
    return ExpectedMatrices(R, A, B)


def enumerated_expected_update(net: GossipNetwork) -> np.ndarray:
    """E{R(t)} by brute force: sum of event probability times update matrix over all pair events."""
    R = np.zeros((net.n, net.n))
    table = net.pairs
    for i, j, p in zip(table.first, table.second, table.prob):
        R += p * update_matrix(net, int(i), int(j))
    return R


def expected_update(net: GossipNetwork) -> np.ndarray:
    """E{R(t)} for a general network, assembled row by row.

    A regular agent keeps ``1 - sum_{j != i} w_ij`` of its own state and takes
    ``w_ij`` from every partner; stubborn rows are unit vectors.
    """
    W = np.array(net.W)
    np.fill_diagonal(W, 0.0)
    R = np.diag(1.0 - W.sum(axis=1)) + W
    stub = net.stubborn_index
    R[stub] = 0.0
    R[stub, stub] = 1.0
    return R


def regular_blocks(net: GossipNetwork, R_bar: np.ndarray | None = None):
    """Split E{R(t)} into (A_bar, B_bar) over regular rows."""
    if R_bar is None:
        R_bar = expected_update(net)
    reg, stub = net.regular, net.stubborn_index
    return R_bar[np.ix_(reg, reg)], R_bar[np.ix_(reg, stub)]


def spectral_radius_symmetric(A: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvalsh(A))))


def gamma_coefficients(m: BlockModel) -> tuple[float, float, float, float, float]:
    ws, wd = m.w_s, m.w_d
    n1, n2, nr1, nr2, ns1, ns2 = m.n1, m.n2, m.n_r1, m.n_r2, m.n_s1, m.n_s2
    g11 = ws * wd * n1 + wd ** 2 * nr2 + ws ** 2 * ns2
    g12 = wd * (wd * n1 + ws * n2)
    g21 = ws * wd * n2 + wd ** 2 * nr1 + ws ** 2 * ns1
    g22 = wd * (wd * n2 + ws * n1)
    delta = ws ** 2 * ns1 * ns2 + ws * wd * (n1 * ns1 + n2 * ns2) + wd ** 2 * (n1 * n2 - nr1 * nr2)
    return g11, g12, g21, g22, delta


def solve_stationary(A_bar: np.ndarray, B_bar: np.ndarray, x_s: np.ndarray) -> np.ndarray:
    """Solve (I - A_bar) v = B_bar x_s with a dense LU factorization."""
    rhs = B_bar @ np.asarray(x_s, dtype=float)
    return np.linalg.solve(np.eye(A_bar.shape[0]) - A_bar, rhs)


def stationary_expectation(m: BlockModel) -> StationaryAnalysis:
    """Limit of E{x^r(t)} via the gamma/delta closed form, cross-checked by a linear solve."""
    mats = expected_matrices(m)
    rho = spectral_radius_symmetric(mats.A_bar)
    if not rho < 1.0:
        raise np.linalg.LinAlgError(f"rho(A_bar) = {rho} >= 1; the model is not stable")
    g11, g12, g21, g22, delta = gamma_coefficients(m)
    sum1 = float(np.sum(m.x_s1)) if m.n_s1 > 0 else 0.0
    sum2 = float(np.sum(m.x_s2)) if m.n_s2 > 0 else 0.0
    chi1 = (g11 * sum1 + g12 * sum2) / delta
    chi2 = (g21 * sum2 + g22 * sum1) / delta
    closed = np.r_[np.full(m.n_r1, chi1), np.full(m.n_r2, chi2)]
    solved = solve_stationary(mats.A_bar, mats.B_bar, m.x_s)
    scale = max(1.0, float(np.max(np.abs(m.x_s))))
    err = float(np.max(np.abs(closed - solved)))
    if err > STRUCTURE_TOL * scale:
        raise ArithmeticError(f"closed-form and solved stationary states differ by {err:.3e}")
    return StationaryAnalysis(solved, chi1, chi2, g11, g12, g21, g22, delta, rho)


def stationary_expectation_general(net: GossipNetwork) -> np.ndarray:
    """Limit of E{x^r(t)} for any network, by direct solve."""
    A, B = regular_blocks(net)
    return solve_stationary(A, B, np.asarray(net.x_s))


def identifiable(m: BlockModel, tol: float = 1e-12) -> bool:
    if m.n_s1 <= 0 or m.n_s2 <= 0:
        return False
    return abs(float(np.mean(m.x_s1)) - float(np.mean(m.x_s2))) > tol


def inverse_structure_residuals(m: BlockModel) -> dict:
    """How far (I - A_bar)^{-1} is from its predicted block pattern.

    Off-diagonal blocks should be constant. Diagonal block ``k`` minus
    ``I / a_k`` should be constant, with ``a_k = w_s n_k + w_d n_{3-k}``.
    Residuals are max-minus-min spreads of the entries that should be equal.
    """
    A = expected_matrices(m).A_bar
    M = np.linalg.inv(np.eye(A.shape[0]) - A)
    r1 = m.n_r1
    a1 = m.w_s * m.n1 + m.w_d * m.n2
    a2 = m.w_s * m.n2 + m.w_d * m.n1
    d1 = M[:r1, :r1] - np.eye(r1) / a1
    d2 = M[r1:, r1:] - np.eye(m.n_r2) / a2

    def spread(X):
        return float(X.max() - X.min())

    return {
        "a1": a1,
        "a2": a2,
        "inverse": M,
        "diag1": spread(d1),
        "diag2": spread(d2),
        "offdiag12": spread(M[:r1, r1:]),
        "offdiag21": spread(M[r1:, :r1]),
        # c in (1/a)(I - c 11'), read off the constant part
        "c1": float(-d1[0, 0] * a1),
        "c2": float(-d2[0, 0] * a2),
    }


def inverse_structure_check(m: BlockModel, tol: float = STRUCTURE_TOL) -> bool:
    res = inverse_structure_residuals(m)
    scale = max(1.0, float(np.max(np.abs(res["inverse"]))))
    return all(res[k] <= tol * scale for k in ("diag1", "diag2", "offdiag12", "offdiag21"))


@dataclass(frozen=True)
class SingularSpread:
    smallest: float
    largest: float

    @property
    def ratio(self) -> float:
        return self.smallest / self.largest if self.largest > 0 else 0.0


def least_squares_data_matrix(m: BlockModel, trajectory: np.ndarray) -> np.ndarray:
    """Sum over time of z z' with z = [x^r; x^s], for a (T, n) array of full states."""
    X = np.asarray(trajectory, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    Z = np.concatenate([X[:, m.regular], X[:, m.stubborn]], axis=1)
    return Z.T @ Z


def rank_deficiency_demo(m: BlockModel, trajectory: np.ndarray) -> SingularSpread:
    """Singular-value spread of the least-squares data matrix built from a trajectory.

    With two or more stubborn agents the stubborn rows are all multiples of
    one row, so the smallest singular value is zero up to rounding.
    """
    if m.n_s < 2:
        raise ValueError("needs at least two stubborn agents")
    sv = np.linalg.svd(least_squares_data_matrix(m, trajectory), compute_uv=False)
    return SingularSpread(float(sv[-1]), float(sv[0]))


def analysis_report(m: BlockModel) -> dict:
    st = stationary_expectation(m)
    return {
        "chi1": st.chi1,
        "chi2": st.chi2,
        "gamma": st.gamma,
        "delta": st.delta,
        "rho_A_bar": st.rho_A_bar,
        "identifiable": identifiable(m),
    }
