"""Acceptance criteria, one test each.  Every test prints a single
``CRITERION <k> PASS|FAIL: <detail>`` line to the terminal, even under capture.

Run with ``pytest tests/test_acceptance.py -v``.
"""

import math
import time
from math import pi

import numpy as np
import pytest

from fock_oracles import gram_span_fidelity, tha_class_state
from qkdleak import cli
from qkdleak.channel import ChannelParams, error_gain, gain, true_yield_oracle
from qkdleak.csbounds import G_interval, linearized_interval
from qkdleak.decoylp import DecoyInputs, best_over_references, polish_result, reference_strategy, solve_error_lp, solve_yield_lp
from qkdleak.engine import (
    CharacterizedTha,
    ExtraPm,
    GeneralEpsilon,
    SourceScenario,
    _sdp_z,
    binary_entropy,
    model_data,
    optimize_intensities,
    sweep,
)
from qkdleak.gramsdp import GramProblem, overlap_lower_bound, primal_objective, witness_gram
from qkdleak.phase_error import phase_error_upper
from qkdleak.source import UNIFORM, discrete, poisson_pmf
from qkdleak.tha import PmScenario, ThaScenario, leak_epsilon, pm_leak_fidelity, tha_overlaps, tha_photon_statistics

pytestmark = pytest.mark.slow

CH = ChannelParams()


@pytest.fixture
def report(capsys):
    def _report(k, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {k} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return _report


def _rates(points):
    return np.array([p.rate for p in points])


def test_criterion_01_channel_identities(report):
    t0 = time.perf_counter()
    worst = 0.0
    n = np.arange(120)
    for L in (0, 20, 50, 100, 200):
        Y, _ = true_yield_oracle(CH, L, n)
        for beta in (0.01, 0.1, 0.5, 1.0):
            worst = max(worst, abs(gain(CH, L, beta) - poisson_pmf(beta, n[-1]).probs @ Y))
    mix = ChannelParams(p_d=0.0, delta_A=pi / 4)
    exact = all(error_gain(mix, L, b) / gain(mix, L, b) == 0.5 for L in (0, 10, 50, 120) for b in (0.01, 0.1, 0.5, 1.0))
    dt = time.perf_counter() - t0
    report(1, worst <= 1e-10 and exact and dt < 1.0, f"max |Q - sum p_n Y_n| = {worst:.2e} over 20 pairs; E = 1/2 exactly: {exact}; {dt:.2f} s")


def test_criterion_02_lp_soundness(report):
    t0 = time.perf_counter()
    intens = (0.5, 0.1, 0.0)
    distances = np.arange(0, 150, 10)
    rng = np.random.default_rng(2)
    violations = []
    checks = 0
    for eps in (0.0, 1e-8, 1e-6):
        md = model_data(GeneralEpsilon(eps), intens, 10)
        for L in distances:
            Q = np.array([gain(CH, L, b) for b in intens])
            EQ = np.array([error_gain(CH, L, b) for b in intens])
            inp = DecoyInputs(Q, EQ, md.p_lower, md.p_upper, md.z, md.mode)
            Y, xi = true_yield_oracle(CH, L, np.arange(4))
            refs = reference_strategy(None, (11, 3), 5, rng)
            for n in range(4):
                for b in range(3):
                    y = polish_result(solve_yield_lp, inp, (n, b), best_over_references(solve_yield_lp, inp, (n, b), refs, True), True)
                    e = polish_result(solve_error_lp, inp, (n, b), best_over_references(solve_error_lp, inp, (n, b), refs, False), False)
                    checks += 2
                    if y.value > Y[n]:
                        violations.append(("Y", eps, L, n, b, y.value - Y[n]))
                    if e.value < xi[n]:
                        violations.append(("xi", eps, L, n, b, xi[n] - e.value))
    dt = time.perf_counter() - t0
    report(2, not violations and dt < 120, f"{checks} bounds, {len(violations)} violations {violations[:3]}; {dt:.1f} s")


def test_criterion_03_sdp_certification(report):
    grid = [(c, gz, gg) for c in (1.0, 0.99, 0.9, 0.6, 0.2) for gz in (0.0, 1e-6, 1e-3, 0.1, 0.7) for gg in (0.0, 1e-4, 0.05, 0.4)]
    bad = []
    worst_res = 0.0
    for c, gz, gg in grid:
        p = GramProblem(c, gz, gg)
        b = overlap_lower_bound(p)
        worst_res = max(worst_res, b.residual)
        if b.dual_objective > primal_objective(p, witness_gram(p)) + 1e-12 or b.residual > 1e-8:
            bad.append((c, gz, gg))
    analytic = max(abs(overlap_lower_bound(GramProblem(1.0, g, g)).value - (1 - 2 * g)) for g in np.linspace(0, 0.5, 26))
    report(3, len(grid) == 100 and not bad and analytic <= 1e-6, f"{len(grid)} points, failures {bad}, max residual {worst_res:.1e}, analytic-case error {analytic:.1e}")


def test_criterion_04_tangent_soundness(report):
    rng = np.random.default_rng(4)
    T = rng.uniform(0, 1, size=(10_000, 3))
    viol = 0
    worst = 0.0
    for y_ref, z, y in T:
        lo, hi = linearized_interval(y_ref, z, y)
        glo, ghi = G_interval(y, z)
        d = max(lo - glo, ghi - hi)
        worst = max(worst, d)
        viol += d > 1e-12
    report(4, viol == 0, f"10^4 triples, {viol} violations beyond 1e-12, worst excess {worst:.1e}")


def _zero_distance_rate(model):
    return optimize_intensities(SourceScenario(model), 0.0).point.rate


def test_criterion_05_threshold(report):
    t0 = time.perf_counter()
    details = []
    ok = True
    ladder = [1e-7 * 10 ** (k / 2) for k in range(11)]  # 1e-7 .. 1e-2
    for name, dist in (("passive", UNIFORM), ("active N=8", discrete(8))):
        small = {eps: _zero_distance_rate(GeneralEpsilon(eps, dist)) for eps in (1e-8, 1e-7)}
        big = _rates(sweep(SourceScenario(GeneralEpsilon(1e-4, dist)), range(0, 201, 20)))
        threshold = None
        for eps in ladder:
            if _zero_distance_rate(GeneralEpsilon(eps, dist)) <= 0:
                threshold = eps
                break
        part = all(r > 0 for r in small.values()) and np.all(big == 0) and threshold is not None and 1e-7 < threshold <= 1e-5
        ok &= part
        details.append(
            f"{name}: R(0) at 1e-8, 1e-7 = {small[1e-8]:.3g}, {small[1e-7]:.3g}; "
            f"eps=1e-4 positive at {int(np.sum(big > 0))}/11 distances (R(0) = {big[0]:.3g}); "
            f"first eps with R(0) = 0: {threshold:.1e}" if threshold else f"{name}: no zero in ladder"
        )
    dt = time.perf_counter() - t0
    ok &= dt < 600
    report(5, ok, "; ".join(details) + f"; {dt:.0f} s")


def test_criterion_06_zero_epsilon_baseline(report):
    sc = SourceScenario(GeneralEpsilon(0.0))
    pts = sweep(sc, [0, 10, 20, 30, 40, 50, 110, 120])
    Y1 = np.array([true_yield_oracle(CH, p.L, [1])[0][0] for p in pts[:6]])
    rel = np.array([abs(p.Y1_lower - y) / y for p, y in zip(pts[:6], Y1)])
    beyond = pts[6].rate > 0
    report(6, beyond and np.all(rel <= 0.1), f"R(110 km) = {pts[6].rate:.3g}, R(120 km) = {pts[7].rate:.3g}; max relative Y1 gap for L <= 50: {rel.max():.2%}")


def test_criterion_07_tha_beats_general(report):
    distances = list(range(0, 136, 15))
    ok = True
    details = []
    for I in (1e-8, 1e-7):
        r_tha = _rates(sweep(SourceScenario(CharacterizedTha(I, 8)), distances))
        r_gen = _rates(sweep(SourceScenario(GeneralEpsilon(leak_epsilon(I), discrete(8))), distances))
        fails = [d for d, a, b in zip(distances, r_tha, r_gen) if a < b]
        ok &= not fails
        details.append(f"I={I:g}: THA {r_tha[0]:.3g}..{r_tha[-1]:.3g}, general {r_gen[0]:.3g}..{r_gen[-1]:.3g}, violations at {fails}")
    report(7, ok, "; ".join(details))


def test_criterion_08_fewer_phases_worse(report):
    res = {}
    for I in (1e-8, 1e-7):
        res[I] = (_zero_distance_rate(CharacterizedTha(I, 4)), _zero_distance_rate(CharacterizedTha(I, 8)))
    ok = all(a < b for a, b in res.values())
    report(8, ok, "; ".join(f"I={I:g}: R(N=4) = {a:.4g} vs R(N=8) = {b:.4g}" for I, (a, b) in res.items()))


def test_criterion_09_extra_pm(report):
    distances = list(range(0, 141, 20))
    ok = True
    details = []
    curves = {}
    for I in (1e-7, 1e-6):
        pm = _rates(sweep(SourceScenario(ExtraPm(I, 0.0, 4)), distances))
        base = _rates(sweep(SourceScenario(ExtraPm(I, 0.0, 1)), distances))
        fails = [d for d, a, b in zip(distances, pm, base) if a < b]
        ok &= not fails
        details.append(f"I={I:g}: PM(I_l=0) below baseline at {fails}")
        if I == 1e-7:
            curves = {"I_l=0": pm, "baseline": base}
    for I_l in (1e-8, 1e-7):
        curves[f"I_l={I_l:g}"] = _rates(sweep(SourceScenario(ExtraPm(1e-7, I_l, 4)), distances))
    M = np.vstack(list(curves.values()))
    top = M.max(axis=0)
    spread = np.where(top > 0, (top - M.min(axis=0)) / np.where(top > 0, top, 1), 0.0)
    ok &= bool(np.all(spread <= 0.05))
    details.append(f"I=1e-7 max relative spread of 4 curves {spread.max():.2%} (worst at {distances[int(spread.argmax())]} km)")
    report(9, ok, "; ".join(details))


def test_criterion_10_pipeline_identities(report):
    pts = sweep(SourceScenario(GeneralEpsilon(0.0)), range(0, 201, 20))
    coin = all(p.Delta == 0.0 and p.eph1_upper == p.e_bx for p in pts if p.status in ("ok", "zero"))
    ident = all(phase_error_upper(e, 0.0) == e for e in np.linspace(0, 0.5, 101))
    h = binary_entropy(0.5) == 1.0
    report(10, coin and ident and h, f"Delta = 0 and e_ph = e_bx at {len(pts)} distances: {coin}; phase_error_upper(e, 0) = e: {ident}; h(1/2) = 1: {h}")


def _coherent_ip(u, v):
    u, v = np.asarray(u), np.asarray(v)
    return np.exp(-0.5 * np.sum(np.abs(u) ** 2) - 0.5 * np.sum(np.abs(v) ** 2) + np.vdot(u, v))


def test_criterion_11_tha_oracles(report):
    rng = np.random.default_rng(11)
    cut = 22
    worst_p = worst_o = 0.0
    for _ in range(10):
        I = 10 ** rng.uniform(-9, -2)
        N = int(rng.integers(2, 9))
        mu = float(rng.uniform(0.1, 1.0))
        zeta, gamma = sorted(rng.uniform(0.01, 1.0, 2), reverse=True)
        a = str(rng.choice(["0Z", "1Z", "0X", "1X"]))
        sc = ThaScenario(I, N, mu)
        states = {b: [tha_class_state(b, sc.omega(b), a, n, N, cut) for n in range(N)] for b in (zeta, gamma)}
        ref_p = [np.linalg.norm(v) ** 2 for v in states[zeta]]
        worst_p = max(worst_p, float(np.max(np.abs(tha_photon_statistics(sc, zeta, a).probs - ref_p))))
        for n in range(N):
            u, v = states[zeta][n], states[gamma][n]
            ref = abs(np.vdot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v))
            worst_o = max(worst_o, abs(tha_overlaps(sc, zeta, gamma, a, n) - ref))
    pm_gap_max, pm_gap_min = 0.0, np.inf
    for _ in range(10):
        I, I_l = 10 ** rng.uniform(-8, -2, 2)
        N = int(rng.integers(1, 7))
        zeta, gamma = sorted(rng.uniform(0.0, 1.0, 2), reverse=True)
        sc = PmScenario(I, I_l, N, 0.5)

        def fam(beta):
            ph = 2 * np.pi * np.arange(N) / N
            return [(np.sqrt(sc.omega(beta)) * np.exp(1j * p), np.sqrt(I_l) * np.exp(1j * p)) for p in ph]

        gap = gram_span_fidelity(fam(zeta), fam(gamma), _coherent_ip) - pm_leak_fidelity(sc, zeta, gamma)
        pm_gap_max, pm_gap_min = max(pm_gap_max, gap), min(pm_gap_min, gap)
    # the oracle itself carries ~1e-13 rounding, hence the tiny negative allowance
    ok = worst_p <= 1e-9 and worst_o <= 1e-9 and pm_gap_max <= 1e-8 and pm_gap_min >= -1e-12
    report(11, ok, f"THA stats max err {worst_p:.1e}, overlaps max err {worst_o:.1e}; PM oracle - bound in [{pm_gap_min:.1e}, {pm_gap_max:.1e}]")


def test_criterion_12_determinism_and_runtime(report, tmp_path):
    cfg = tmp_path / "fig2.cfg"
    cfg.write_text("model = general_epsilon\nepsilon = 1e-8\nphase.kind = uniform\ndistance.start = 0\ndistance.stop = 145\ndistance.step = 5\nplot = false\n")
    times = []
    for out in ("a", "b"):
        model_data.cache_clear()
        _sdp_z.cache_clear()
        t0 = time.perf_counter()
        code = cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / out)])
        times.append(time.perf_counter() - t0)
        assert code == 0
    a = (tmp_path / "a" / "rates.csv").read_bytes()
    b = (tmp_path / "b" / "rates.csv").read_bytes()
    rows = [l for l in a.decode().splitlines() if l and not l.startswith("#")][1:]
    first_rate = float(rows[0].split(",")[8])
    ok = len(rows) == 30 and a == b and max(times) < 300 and first_rate > 0
    report(12, ok, f"{len(rows)} points, identical bytes: {a == b}, run times {times[0]:.0f} s / {times[1]:.0f} s, R(0) = {first_rate:.3g}")
