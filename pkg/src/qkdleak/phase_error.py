"""Basis-dependence (quantum coin) machinery and the phase-error bound."""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

from .perturb import EigGapBound, PerturbedStatistics


@dataclass(frozen=True)
class CoinAssessment:
    n: int
    F_lower: float
    Y_coin_lower: float
    Delta: float
    e_ph_upper: float
    vacuous: bool


def _clip01(x: float) -> float:
    return min(max(x, 0.0), 1.0)


def fidelity_from_q(q: float, gamma: float) -> float:
    """(1 - gamma) (sqrt q + sqrt(1-q))^2 / 2, written to stay exact at q = 1/2."""
    return _clip01((1 - gamma) * (0.5 + sqrt(q * (1 - q))))


def real_ideal_fidelity_lower(n: int, perturbed: PerturbedStatistics, gamma_n: EigGapBound) -> float:
    """Lower bound on the fidelity between the real and ideal entangled n-photon state."""
    lo = float(perturbed.lower[n])
    hi = float(perturbed.upper[n])
    if lo <= 0:
        return 0.0
    return fidelity_from_q(lo / (lo + hi), gamma_n.gamma_n)


def bures_distance(F: float) -> float:
    return sqrt(max(2 - 2 * sqrt(_clip01(F)), 0.0))


def fidelity_from_bures(d: float) -> float:
    d = min(max(d, 0.0), sqrt(2))
    return _clip01((1 - d * d / 2) ** 2)


def bures_triangle_fidelity(F_realZ_idealZ: float, ideal_coin_overlap: float, F_realX_idealX: float) -> float:
    """Fidelity lower bound between real Z and X states through the ideal ones."""
    if F_realZ_idealZ == 1.0 and F_realX_idealX == 1.0:
        return _clip01(ideal_coin_overlap**2)
    d = bures_distance(F_realZ_idealZ) + bures_distance(ideal_coin_overlap**2) + bures_distance(F_realX_idealX)
    return fidelity_from_bures(d)


def coin_imbalance(F_lower: float, Y_Z_lower: float, Y_X_lower: float) -> tuple[float, bool]:
    """Return (Delta, vacuous).  A vacuous assessment forces the phase error to 1/2."""
    y_coin = min(Y_Z_lower, Y_X_lower)
    if F_lower >= 1.0:
        return 0.0, False
    if y_coin <= 0:
        return 0.5, True
    delta = (1 - sqrt(_clip01(F_lower))) / (2 * y_coin)
    if delta > 0.5:
        return 0.5, True
    return delta, False


def phase_error_upper(e_bx: float, Delta: float) -> float:
    if not (0 <= e_bx <= 1 and 0 <= Delta <= 0.5):
        raise ValueError("need e_bx in [0, 1] and Delta in [0, 1/2]")
    if Delta == 0:
        return min(e_bx, 0.5)
    if e_bx >= 0.5:
        return 0.5
    e = e_bx
    val = e + 4 * Delta * (1 - Delta) * (1 - 2 * e) + 4 * (1 - 2 * Delta) * sqrt(Delta * (1 - Delta) * e * (1 - e))
    return min(val, 0.5)


def assess_coin(n: int, F_lower: float, Y_Z_lower: float, Y_X_lower: float, e_bx: float) -> CoinAssessment:
    delta, vacuous = coin_imbalance(F_lower, Y_Z_lower, Y_X_lower)
    e_ph = 0.5 if vacuous else phase_error_upper(min(e_bx, 0.5), delta)
    return CoinAssessment(n, F_lower, min(Y_Z_lower, Y_X_lower), delta, e_ph, vacuous)
