"""Scenario orchestration: observables, leakage-model inputs, decoy LPs, coin
bound and key rate, with intensity optimization and distance sweeps."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import lru_cache
from math import log2
from typing import Union

import numpy as np

from . import channel as ch
from .decoylp import DecoyInputs, InfeasibleError, best_over_references, polish_result, reference_strategy, solve_error_lp, solve_yield_lp
from .gramsdp import GramProblem, UncertifiedError, overlap_lower_bound, squared_overlap_input
from .perturb import perturb_statistics, spectrum_gamma
from .phase_error import assess_coin, bures_triangle_fidelity, real_ideal_fidelity_lower
from .source import UNIFORM, PhaseDistribution, fock_cutoff, ideal_coin_overlap, ideal_intensity_overlap, photon_statistics, poisson_pmf
from .tha import PmScenario, ThaScenario, pm_coin_fidelity, pm_leak_fidelity, tha_coin_fidelity, tha_overlaps, tha_photon_statistics

log = logging.getLogger(__name__)

_FINAL_POLISH = 5


@dataclass(frozen=True)
class GeneralEpsilon:
    epsilon: float
    dist: PhaseDistribution = UNIFORM


@dataclass(frozen=True)
class CharacterizedTha:
    I: float
    N: int = 8


@dataclass(frozen=True)
class ExtraPm:
    I: float
    I_l: float
    N: int = 4


Model = Union[GeneralEpsilon, CharacterizedTha, ExtraPm]


@dataclass(frozen=True)
class GridSpec:
    mu_min: float = 0.05
    mu_max: float = 1.0
    nu_min: float = 0.005
    n_mu: int = 6
    n_nu: int = 4
    rounds: int = 2
    shrink: float = 5.0


@dataclass(frozen=True)
class SolverSettings:
    restarts: int = 50
    seed: int = 0
    sdp_tol: float = 1e-8
    polish: int = 2


@dataclass(frozen=True)
class SourceScenario:
    model: Model
    channel: ch.ChannelParams = field(default_factory=ch.ChannelParams)
    omega: float = 0.0
    n_cut: int | None = None
    p_mu: float = 1.0
    p_Z: float = 1.0
    grid: GridSpec = field(default_factory=GridSpec)
    solver: SolverSettings = field(default_factory=SolverSettings)

    def resolved_n_cut(self) -> int:
        m = self.model
        if isinstance(m, CharacterizedTha):
            return m.N - 1
        if isinstance(m, GeneralEpsilon) and m.dist.is_discrete:
            return m.dist.N - 1
        return 10 if self.n_cut is None else self.n_cut


@dataclass(frozen=True)
class KeyRatePoint:
    L: float
    mu: float
    nu: float
    Q_muZ: float
    E_muZ: float
    Y1_lower: float
    eph1_upper: float
    lambda_EC: float
    rate: float
    status: str
    e_bx: float = float("nan")
    Delta: float = float("nan")
    F_coin: float = float("nan")


@dataclass(frozen=True)
class ModelData:
    """Distance-independent inputs for one (mu, nu, omega) choice."""

    p_lower: np.ndarray
    p_upper: np.ndarray
    z: np.ndarray
    mode: str
    p1_lower: float
    F_coin: float


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * log2(x) - (1 - x) * log2(1 - x)


def key_rate(p1_lower: float, Y1_lower: float, eph_upper: float, Q: float, E: float, f_ec: float, p_Z: float = 1.0, p_mu: float = 1.0) -> tuple[float, float]:
    """(R, lambda_EC) from the single-photon term and the error-correction cost."""
    lam = p_Z**2 * p_mu * f_ec * Q * binary_entropy(min(max(E, 0.0), 1.0))
    gainterm = p_Z**2 * p_mu * p1_lower * Y1_lower * (1 - binary_entropy(min(eph_upper, 0.5)))
    return max(0.0, gainterm - lam), lam


def _spectrum(beta: float, dist: PhaseDistribution) -> np.ndarray:
    """Eigenvalues of the ideal single-encoding state; trailing 0 for its kernel."""
    if dist.is_discrete:
        p = photon_statistics(beta, dist).probs
    else:
        p = poisson_pmf(beta, fock_cutoff(beta)).probs
    return np.append(p, 0.0)


@lru_cache(maxsize=4096)
def _sdp_z(c: float, gz: float, gg: float, tol: float) -> float:
    if max(gz, gg) >= 1.0:
        return 0.0
    return squared_overlap_input(overlap_lower_bound(GramProblem(c, gz, gg), tol))


@lru_cache(maxsize=2048)
def model_data(model: Model, intensities: tuple[float, float, float], n_cut: int, sdp_tol: float = 1e-8) -> ModelData:
    k = len(intensities)
    n1 = n_cut + 1
    mu = intensities[0]
    z = np.ones((n1, k, k))
    if isinstance(model, GeneralEpsilon):
        dist = model.dist
        pert = [perturb_statistics(photon_statistics(b, dist, n_cut), model.epsilon) for b in intensities]
        kappa = pert[0].kappa
        gam = np.array([[spectrum_gamma(_spectrum(b, dist), n, kappa).gamma_n for n in range(n1)] for b in intensities])
        for n in range(n1):
            for i in range(k):
                for j in range(i + 1, k):
                    c = ideal_intensity_overlap(n, intensities[i], intensities[j], dist)
                    z[n, i, j] = z[n, j, i] = _sdp_z(c, float(gam[i, n]), float(gam[j, n]), sdp_tol)
        fz = real_ideal_fidelity_lower(1, pert[0], spectrum_gamma(_spectrum(mu, dist), 1, kappa))
        F = bures_triangle_fidelity(fz, ideal_coin_overlap(1, mu, dist), fz)
        mode = "discrete" if dist.is_discrete else "general"
        return ModelData(np.array([p.lower for p in pert]), np.array([p.upper for p in pert]), z, mode, float(pert[0].lower[1]), F)
    if isinstance(model, CharacterizedTha):
        sc = ThaScenario(model.I, model.N, mu)
        probs = np.array([tha_photon_statistics(sc, b, "0Z").probs for b in intensities])
        for n in range(n1):
            for i in range(k):
                for j in range(i + 1, k):
                    z[n, i, j] = z[n, j, i] = tha_overlaps(sc, intensities[i], intensities[j], "0Z", n) ** 2
        F = tha_coin_fidelity(sc, mu, 1)
        return ModelData(probs, probs, z, "exact", float(probs[0, 1]), F)
    if isinstance(model, ExtraPm):
        ps = PmScenario(model.I, model.I_l, model.N, mu)
        probs = np.array([poisson_pmf(b, n_cut).probs for b in intensities])
        for i in range(k):
            for j in range(i + 1, k):
                z[:, i, j] = z[:, j, i] = pm_leak_fidelity(ps, intensities[i], intensities[j])
        F = pm_coin_fidelity(ps, mu, 1)
        return ModelData(probs, probs, z, "general", float(probs[0, 1]), F)
    raise TypeError(f"unknown model {model!r}")


@dataclass
class LaneState:
    """Warm-start references carried along one distance sweep."""

    yield_refs: np.ndarray | None = None
    error_refs: np.ndarray | None = None
    rng: np.random.Generator | None = None


@dataclass(frozen=True)
class Evaluation:
    point: KeyRatePoint
    yield_solution: np.ndarray | None
    error_solution: np.ndarray | None


def _polished(solve, inputs, target, refs_list, maximize, rounds):
    best = best_over_references(solve, inputs, target, refs_list, maximize)
    return polish_result(solve, inputs, target, best, maximize, rounds) if rounds else best


def evaluate(scenario: SourceScenario, L: float, mu: float, nu: float, yield_refs, error_refs) -> Evaluation:
    """Key-rate bound at one distance and intensity pair."""
    intensities = (mu, nu, scenario.omega)
    n_cut = scenario.resolved_n_cut()
    md = model_data(scenario.model, intensities, n_cut, scenario.solver.sdp_tol)
    cp = scenario.channel
    Q = np.array([ch.gain(cp, L, b) for b in intensities])
    EQ = np.array([ch.error_gain(cp, L, b) for b in intensities])
    E_mu = EQ[0] / Q[0] if Q[0] > 0 else 0.0
    base = dict(L=L, mu=mu, nu=nu, Q_muZ=float(Q[0]), E_muZ=float(E_mu))
    inputs = DecoyInputs(Q, EQ, md.p_lower, md.p_upper, md.z, md.mode)
    try:
        yl = _polished(solve_yield_lp, inputs, (1, 0), yield_refs, True, scenario.solver.polish)
        el = _polished(solve_error_lp, inputs, (1, 0), error_refs, False, scenario.solver.polish)
    except InfeasibleError:
        _, lam = key_rate(0, 0, 0.5, Q[0], E_mu, cp.f_ec, scenario.p_Z, scenario.p_mu)
        pt = KeyRatePoint(**base, Y1_lower=0.0, eph1_upper=0.5, lambda_EC=lam, rate=0.0, status="infeasible")
        return Evaluation(pt, None, None)
    Y1 = yl.value
    e_bx = 1.0 if Y1 <= 0 else min(1.0, el.value / Y1)
    coin = assess_coin(1, md.F_coin, Y1, Y1, e_bx)
    R, lam = key_rate(md.p1_lower, Y1, coin.e_ph_upper, Q[0], E_mu, cp.f_ec, scenario.p_Z, scenario.p_mu)
    status = "ok" if R > 0 else "zero"
    pt = KeyRatePoint(**base, Y1_lower=Y1, eph1_upper=coin.e_ph_upper, lambda_EC=lam, rate=R, status=status, e_bx=e_bx, Delta=coin.Delta, F_coin=md.F_coin)
    return Evaluation(pt, yl.solution, el.solution)


def _grid_axis(lo: float, hi: float, n: int) -> np.ndarray:
    if n <= 1 or hi <= lo:
        return np.array([lo])
    return np.linspace(lo, hi, n)


def candidate_grid(grid: GridSpec) -> list[tuple[float, float]]:
    out = []
    for mu in _grid_axis(grid.mu_min, grid.mu_max, grid.n_mu):
        for nu in _grid_axis(grid.nu_min, mu / 2, grid.n_nu):
            out.append((float(mu), float(nu)))
    return out


def optimize_intensities(scenario: SourceScenario, L: float, lane: LaneState | None = None) -> Evaluation:
    """Coarse grid search followed by rounds of local refinement around the incumbent."""
    lane = lane if lane is not None else LaneState()
    if lane.rng is None:
        lane.rng = np.random.default_rng(scenario.solver.seed)
    n1 = scenario.resolved_n_cut() + 1
    shape = (n1, 3)
    yrefs = reference_strategy(lane.yield_refs, shape, scenario.solver.restarts, lane.rng)
    erefs = reference_strategy(lane.error_refs, shape, scenario.solver.restarts, lane.rng)
    g = scenario.grid
    seen: dict[tuple[float, float], Evaluation] = {}
    uncertified = []

    def run(cands):
        for mu, nu in cands:
            key = (round(mu, 12), round(nu, 12))
            if key in seen or not (mu > nu > scenario.omega):
                continue
            try:
                seen[key] = evaluate(scenario, L, mu, nu, yrefs, erefs)
            except UncertifiedError as exc:
                uncertified.append(str(exc))
                log.warning("uncertified bound at L=%g mu=%g nu=%g: %s", L, mu, nu, exc)

    def best():
        if not seen:
            return None
        return max(seen.items(), key=lambda kv: (kv[1].point.rate, kv[1].point.Y1_lower, -kv[0][0], -kv[0][1]))

    run(candidate_grid(g))
    hmu = (g.mu_max - g.mu_min) / max(g.n_mu - 1, 1)
    hnu_frac = 1.0 / max(g.n_nu - 1, 1)
    for _ in range(g.rounds):
        inc = best()
        if inc is None or (g.n_mu <= 1 and g.n_nu <= 1):
            break
        (mu0, nu0) = inc[0]
        hmu /= g.shrink
        hnu_frac /= g.shrink
        cands = []
        for dm in (-1, 0, 1):
            mu = min(max(mu0 + dm * hmu, g.mu_min), g.mu_max)
            span = mu / 2 - g.nu_min
            for dn in (-1, 0, 1):
                nu = min(max(nu0 + dn * hnu_frac * span, g.nu_min), mu / 2)
                cands.append((mu, nu))
        run(cands)
    inc = best()
    if inc is None:
        raise UncertifiedError("; ".join(uncertified) or "no admissible intensity candidate")
    ev = inc[1]
    if ev.yield_solution is not None:
        # fixed-point polish of the incumbent; both bounds are certified, keep the better
        final = replace(scenario, solver=replace(scenario.solver, polish=max(scenario.solver.polish, _FINAL_POLISH)))
        try:
            pol = evaluate(final, L, ev.point.mu, ev.point.nu, [ev.yield_solution], [ev.error_solution])
            if (pol.point.rate, pol.point.Y1_lower) >= (ev.point.rate, ev.point.Y1_lower):
                ev = pol
        except UncertifiedError as exc:
            log.warning("polish at L=%g failed: %s", L, exc)
    if uncertified:
        ev = Evaluation(replace(ev.point, status="uncertified"), ev.yield_solution, ev.error_solution)
    if ev.yield_solution is not None:
        lane.yield_refs = ev.yield_solution
        lane.error_refs = ev.error_solution
    return ev


def sweep(scenario: SourceScenario, distances) -> list[KeyRatePoint]:
    """Optimized key-rate points along ascending distances, warm-starting references."""
    distances = list(distances)
    if any(b < a for a, b in zip(distances, distances[1:])):
        raise ValueError("distances must be sorted ascending")
    lane = LaneState(rng=np.random.default_rng(scenario.solver.seed))
    out = []
    for L in distances:
        try:
            out.append(optimize_intensities(scenario, L, lane).point)
        except UncertifiedError as exc:
            log.error("point L=%g failed: %s", L, exc)
            nan = float("nan")
            out.append(KeyRatePoint(L, nan, nan, nan, nan, nan, nan, nan, 0.0, "uncertified"))
    return out
