"""Fiber channel and threshold-detector model producing simulated gains and
error gains, plus per-photon-number yields for testing."""

from __future__ import annotations

from dataclasses import dataclass
from math import cos, exp, expm1, sin

import numpy as np


@dataclass(frozen=True)
class ChannelParams:
    eta_det: float = 0.65
    p_d: float = 7.2e-8
    alpha_db: float = 0.2
    delta_A: float = 0.08
    f_ec: float = 1.16

    def __post_init__(self):
        for name in ("eta_det", "p_d", "alpha_db", "delta_A", "f_ec"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.eta_det > 1 or self.p_d > 1:
            raise ValueError("eta_det and p_d must lie in [0, 1]")

    def eta(self, L: float) -> float:
        """Overall transmittance including detector efficiency."""
        if L < 0:
            raise ValueError("distance must be nonnegative")
        return self.eta_det * 10 ** (-self.alpha_db * L / 10)


def gain(params: ChannelParams, L: float, beta: float) -> float:
    return 1 - (1 - params.p_d) ** 2 * exp(-params.eta(L) * beta)


def error_gain(params: ChannelParams, L: float, beta: float) -> float:
    """E*Q for a coherent pulse; double clicks are assigned at random.

    Written as Q/2 + (1 - p_d) h, where h is the detector imbalance, so that
    complete mixing gives exactly half the gain.
    """
    x = params.eta(L) * beta
    da = params.delta_A
    c2 = cos(2 * da)
    if abs(c2) < 1e-15:
        # delta_A is pi/4 to within float precision: complete mixing
        c2 = 0.0
    h = 0.5 * exp(-x * sin(da) ** 2) * expm1(-x * c2)
    eq = 0.5 * gain(params, L, beta) + (1 - params.p_d) * h
    return min(max(eq, 0.0), gain(params, L, beta))


def true_yield_oracle(params: ChannelParams, L: float, n) -> tuple[np.ndarray, np.ndarray]:
    """Yield and error probability of an n-photon Fock pulse."""
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise ValueError("photon number must be nonnegative")
    eta = params.eta(L)
    pd = params.p_d
    da = params.delta_A
    q = 1 - pd
    Y = 1 - q**2 * (1 - eta) ** n
    # each photon hits the wrong detector with probability eta*sin^2
    right_silent = (1 - eta * cos(da) ** 2) ** n
    wrong_silent = (1 - eta * sin(da) ** 2) ** n
    xi = 0.5 + 0.5 * q * (right_silent - wrong_silent) - 0.5 * q**2 * (1 - eta) ** n
    return Y, xi
