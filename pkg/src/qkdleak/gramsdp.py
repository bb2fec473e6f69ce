"""Certified lower bound on the overlap of two leaky n-photon states through a
4x4 Gram-matrix semidefinite program.

Vector order: 0 = ideal zeta state, 1 = ideal gamma state, 2 = component of the
real zeta state orthogonal to 0, 3 = component of the real gamma state
orthogonal to 1.  The bound returned is always a dual objective value whose
feasibility has been checked, never a primal estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import asin, acos, cos, pi, sqrt

import numpy as np


class UncertifiedError(RuntimeError):
    """A bound could not be backed by a verified dual certificate."""


@dataclass(frozen=True)
class GramProblem:
    ideal_overlap: float
    gamma_zeta: float
    gamma_gamma: float

    def __post_init__(self):
        for name in ("ideal_overlap", "gamma_zeta", "gamma_gamma"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class CertifiedBound:
    value: float
    dual_objective: float
    residual: float
    method: str


def objective_weights(p: GramProblem) -> tuple[float, float, float, float]:
    gz, gg = p.gamma_zeta, p.gamma_gamma
    a = sqrt((1 - gg) * (1 - gz))
    b = sqrt((1 - gg) * gz)
    d = sqrt((1 - gz) * gg)
    e = sqrt(gg * gz)
    return a, b, d, e


def sdp_data(p: GramProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cost C, constraint matrices A (7x4x4) and right-hand side b."""
    a, b, d, e = objective_weights(p)
    C = np.zeros((4, 4))
    for i, j, w in ((1, 0, a), (1, 2, b), (3, 0, d), (3, 2, e)):
        C[i, j] += w / 2
        C[j, i] += w / 2
    A = np.zeros((7, 4, 4))
    for k in range(4):
        A[k, k, k] = 1.0
    for k, (i, j) in enumerate(((0, 2), (1, 3), (0, 1)), start=4):
        A[k, i, j] = A[k, j, i] = 0.5
    rhs = np.array([1.0, 1.0, 1.0, 1.0, 0.0, 0.0, p.ideal_overlap])
    return C, A, rhs


def analytic_bound(p: GramProblem) -> float:
    """Closed-form optimum: the real states sit within fixed angles of the ideal ones."""
    ang = acos(p.ideal_overlap) + asin(sqrt(p.gamma_zeta)) + asin(sqrt(p.gamma_gamma))
    return cos(min(ang, pi))


def witness_gram(p: GramProblem) -> np.ndarray:
    """A feasible Gram matrix attaining the optimum (used to check duality)."""
    phi = acos(p.ideal_overlap)
    tz = asin(sqrt(p.gamma_zeta))
    tg = asin(sqrt(p.gamma_gamma))
    if phi + tz + tg <= pi:
        ang = np.array([0.0, phi, -pi / 2, phi + pi / 2])
        V = np.vstack([np.cos(ang), np.sin(ang)])
        return V.T @ V
    # non-planar configuration reaching -1: real states antiparallel
    nz = np.array([1.0, 0.0, 0.0])
    ng = np.array([cos(phi), np.sin(phi), 0.0])
    cz, cg = cos(tz), cos(tg)
    y = -(cg + cos(phi) * cz) / np.sin(phi)
    u = np.array([cz, y, sqrt(max(1 - cz**2 - y**2, 0.0))])
    u /= np.linalg.norm(u)
    v = -u
    # orthogonal parts of the real states
    perp_z = u - (u @ nz) * nz
    perp_g = v - (v @ ng) * ng
    perp_z = perp_z / np.linalg.norm(perp_z) if np.linalg.norm(perp_z) > 1e-15 else np.array([0.0, 0.0, 1.0])
    perp_g = perp_g / np.linalg.norm(perp_g) if np.linalg.norm(perp_g) > 1e-15 else np.array([0.0, 0.0, 1.0])
    V = np.vstack([nz, ng, perp_z, perp_g]).T
    return V.T @ V


def primal_objective(p: GramProblem, G: np.ndarray) -> float:
    C, _, _ = sdp_data(p)
    return float(np.sum(C * G))


def _certify(C, A, rhs, y, tol, method) -> CertifiedBound:
    S = C - np.einsum("i,ijk->jk", y, A)
    lmin = float(np.linalg.eigvalsh(S)[0])
    residual = max(0.0, -lmin)
    if not np.isfinite(lmin) or residual > tol:
        raise UncertifiedError(f"{method}: dual residual {residual:.3e} exceeds {tol:.1e}")
    y = y.copy()
    if residual > 0:
        # shift the diagonal multipliers so S is PSD with margin
        n = C.shape[0]
        y[:n] -= residual + 8 * np.finfo(float).eps * (1 + np.abs(y).max())
    dual = float(rhs @ y)
    return CertifiedBound(min(max(dual, -1.0), 1.0), dual, residual, method)


def _slackness_dual(p: GramProblem, tol: float) -> CertifiedBound:
    C, A, rhs = sdp_data(p)
    phi = acos(p.ideal_overlap)
    ang = np.array([0.0, phi, -pi / 2, phi + pi / 2])
    X = np.vstack([np.cos(ang), np.sin(ang)])
    M = np.stack([(Ai @ X.T).ravel() for Ai in A], axis=1)
    y = np.linalg.lstsq(M, (C @ X.T).ravel(), rcond=None)[0]
    return _certify(C, A, rhs, y, tol, "slackness")


def _reduced_dual(p: GramProblem) -> CertifiedBound:
    """Exact dual at ideal_overlap = 1, where vectors 0 and 1 coincide."""
    a, b, d, e = objective_weights(p)
    # reduced variables (w, u2, u3); cost and constraints on the 3x3 face
    C = np.array([[a, b / 2, d / 2], [b / 2, 0.0, e / 2], [d / 2, e / 2, 0.0]])
    A = np.zeros((5, 3, 3))
    for k in range(3):
        A[k, k, k] = 1.0
    A[3, 0, 1] = A[3, 1, 0] = 0.5
    A[4, 0, 2] = A[4, 2, 0] = 0.5
    rhs = np.array([1.0, 1.0, 1.0, 0.0, 0.0])
    y = np.array([a, -e / 2, -e / 2, b, d])
    return _certify(C, A, rhs, y, 0.0, "facial")


def _barrier_dual(p: GramProblem, tol: float, t_final: float = 1e-13) -> CertifiedBound:
    """Log-barrier path on the dual; every iterate is strictly feasible."""
    C, A, rhs = sdp_data(p)
    Af = A.reshape(len(A), -1)

    def slack(y):
        return C - (y @ Af).reshape(C.shape)

    def merit(y, t):
        try:
            L = np.linalg.cholesky(slack(y))
        except np.linalg.LinAlgError:
            return -np.inf
        return rhs @ y + 2 * t * np.log(np.diag(L)).sum()

    y = np.zeros(len(A))
    y[:4] = -1.0 - np.abs(C).sum()
    t = 1.0
    while True:
        for _ in range(200):
            Si = np.linalg.inv(slack(y))
            g = rhs - t * (Af @ Si.ravel())
            SA = np.einsum("jk,ikl->ijl", Si, A)
            H = t * np.einsum("ijk,lkj->il", SA, SA)
            dy = np.linalg.lstsq(H, g, rcond=None)[0]
            dec = g @ dy
            if dec <= 1e-12 * t:
                break
            f0 = merit(y, t)
            s = 1.0
            while merit(y + s * dy, t) < f0 + 0.25 * s * dec and s > 1e-14:
                s *= 0.5
            y = y + s * dy
        if t <= t_final:
            break
        t *= 0.1
    return _certify(C, A, rhs, y, tol, "barrier")


def overlap_lower_bound(problem: GramProblem, tol: float = 1e-8) -> CertifiedBound:
    """Lower bound on Re<n_gamma^eps|n_zeta^eps> certified by a feasible dual point."""
    if problem.gamma_zeta == 0.0 and problem.gamma_gamma == 0.0:
        # objective is the fixed entry; y = e_7 makes the slack vanish
        C, A, rhs = sdp_data(problem)
        return _certify(C, A, rhs, np.eye(7)[6], 0.0, "exact")
    if problem.ideal_overlap == 1.0:
        return _reduced_dual(problem)
    capped = analytic_bound(problem) <= -1.0 + 1e-12
    if not capped:
        try:
            return _slackness_dual(problem, tol)
        except UncertifiedError:
            pass
    return _barrier_dual(problem, tol)


def squared_overlap_input(bound: CertifiedBound) -> float:
    """Squared-overlap input for the Cauchy-Schwarz constraints."""
    return max(bound.value, 0.0) ** 2
