"""Cauchy-Schwarz envelopes linking yields of nonorthogonal states and their
tangent-line relaxations."""

from __future__ import annotations

from math import isfinite, sqrt

# steeper tangents lose more to rounding than they gain; use the clamp constant
_MAX_SLOPE = 1e3
_EPS = 2.220446049250313e-16


def _check_unit(name: str, v: float) -> None:
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {v}")


def g_plus_minus(y: float, z: float) -> tuple[float, float]:
    _check_unit("y", y)
    _check_unit("z", z)
    base = y + (1 - z) * (1 - 2 * y)
    r = 2 * sqrt(z * (1 - z) * y * (1 - y))
    return base - r, base + r


def _lower_active(y: float, z: float) -> bool:
    return y > 1 - z


def _upper_active(y: float, z: float) -> bool:
    return y < z


def G_interval(y: float, z: float) -> tuple[float, float]:
    """Range of yields compatible with yield y at squared overlap z."""
    gm, gp = g_plus_minus(y, z)
    lo = min(max(gm, 0.0), 1.0) if _lower_active(y, z) else 0.0
    hi = min(max(gp, 0.0), 1.0) if _upper_active(y, z) else 1.0
    return lo, hi


def G_prime(y: float, z: float) -> tuple[float, float]:
    """Slopes of the clamped envelopes in y (zero on clamped branches).

    At y in {0, 1} on an active branch the slope diverges; ``inf`` is returned
    there and callers substitute a constant bound.
    """
    _check_unit("y", y)
    _check_unit("z", z)
    if z == 1.0:
        return 1.0, 1.0
    lo_act = _lower_active(y, z)
    hi_act = _upper_active(y, z)
    if y in (0.0, 1.0):
        sm = float("inf") if lo_act else 0.0
        sp = float("inf") if hi_act else 0.0
        return sm, sp
    r = (1 - 2 * y) * sqrt(z * (1 - z) / (y * (1 - y)))
    sm = -1 + 2 * z - r if lo_act else 0.0
    sp = -1 + 2 * z + r if hi_act else 0.0
    return sm, sp


def tangent_lines(y_ref: float, z: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """(slope, intercept) of sound tangents: lower below G_-, upper above G_+.

    G_- is convex and G_+ concave, so tangents at any reference bound them.
    Intercepts are pushed outward by the rounding error of evaluating the line.
    """
    lo, hi = G_interval(y_ref, z)
    sm, sp = G_prime(y_ref, z)
    if z == 1.0:
        return (1.0, lo - y_ref), (1.0, hi - y_ref)
    if not isfinite(sm) or abs(sm) > _MAX_SLOPE:
        low = (0.0, 0.0)
    else:
        low = (sm, lo - sm * y_ref - 4 * _EPS * (1 + abs(sm)))
    if not isfinite(sp) or abs(sp) > _MAX_SLOPE:
        up = (0.0, 1.0)
    else:
        up = (sp, hi - sp * y_ref + 4 * _EPS * (1 + abs(sp)))
    return low, up


def linearized_interval(y_ref: float, z: float, y: float) -> tuple[float, float]:
    _check_unit("y", y)
    (sm, cm), (sp, cp) = tangent_lines(y_ref, z)
    return sm * y + cm, sp * y + cp
