"""Matrix-perturbation bounds: perturbed photon statistics, Davis-Kahan
eigenvector fidelity and Fock-truncation fidelity."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .source import PhotonStatistics


@dataclass(frozen=True)
class PerturbedStatistics:
    base: PhotonStatistics
    epsilon: float
    kappa: float
    lower: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class EigGapBound:
    n: int
    delta_n: float
    gamma_n: float


def perturb_statistics(stats: PhotonStatistics, epsilon: float) -> PerturbedStatistics:
    """Box each p_n by sqrt(epsilon) and clip to [0, 1]."""
    if not 0 <= epsilon <= 1:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    kappa = sqrt(epsilon)
    lower = np.maximum(stats.probs - kappa, 0.0)
    upper = np.minimum(stats.probs + kappa, 1.0)
    lower.setflags(write=False)
    upper.setflags(write=False)
    return PerturbedStatistics(stats, epsilon, kappa, lower, upper)


def dk_gamma(spectrum, n: int, kappa: float) -> EigGapBound:
    """Davis-Kahan bound on 1 - |<v_n^eps|v_n>|^2 for the n-th eigenvector.

    ``spectrum`` is sorted in descending order; the gap is the smaller distance
    to a neighbouring eigenvalue.
    """
    lam = np.asarray(spectrum, dtype=float)
    if lam.size == 0:
        raise ValueError("empty spectrum")
    if not 0 <= n < lam.size:
        raise ValueError(f"index {n} outside spectrum of size {lam.size}")
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    gaps = []
    if n > 0:
        gaps.append(abs(lam[n - 1] - lam[n]))
    if n < lam.size - 1:
        gaps.append(abs(lam[n] - lam[n + 1]))
    gap = min(gaps) if gaps else np.inf
    delta = gap - kappa
    if kappa == 0:
        gamma = 0.0
    elif delta <= 0:
        gamma = 1.0
    else:
        gamma = min(1.0, (kappa / delta) ** 2)
    return EigGapBound(n, float(delta), float(gamma))


def spectrum_gamma(probs, n: int, kappa: float) -> EigGapBound:
    """dk_gamma for eigenvalue probs[n] of an unsorted spectrum."""
    p = np.asarray(probs, dtype=float)
    order = np.argsort(-p, kind="stable")
    rank = int(np.nonzero(order == n)[0][0])
    b = dk_gamma(p[order], rank, kappa)
    return EigGapBound(n, b.delta_n, b.gamma_n)


def truncation_fidelity(spectrum, M: int) -> float:
    """Weight kept by projecting onto the first M + 1 eigenvectors."""
    if M < 0:
        raise ValueError("M must be nonnegative")
    lam = np.asarray(spectrum, dtype=float)
    if lam.size == 0:
        return 0.0
    # running sum keeps the result monotone in M under rounding
    return float(min(np.cumsum(lam)[min(M, lam.size - 1)], 1.0))


def fuchs_trace_bound(fidelity_lower: float) -> float:
    """Upper bound on the trace distance from a fidelity lower bound."""
    if not 0 <= fidelity_lower <= 1:
        raise ValueError("fidelity must lie in [0, 1]")
    return sqrt(1.0 - fidelity_lower)
