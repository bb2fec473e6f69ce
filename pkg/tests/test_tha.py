import numpy as np
import pytest

from fock_oracles import coin_overlap, gram_span_fidelity, pm_coin_bruteforce, tha_class_state
from qkdleak.source import discrete, discrete_pmf, ideal_coin_overlap, poisson_pmf
from qkdleak.tha import (
    PmScenario,
    ThaScenario,
    class_gram,
    class_overlap,
    leak_epsilon,
    pm_coin_fidelity,
    pm_leak_fidelity,
    pm_leak_fidelity_exact,
    pm_photon_statistics,
    tha_coin_fidelity,
    tha_gram,
    tha_overlaps,
    tha_photon_statistics,
)

CUT = 22


def _coherent_ip(u, v):
    u, v = np.asarray(u), np.asarray(v)
    return np.exp(-0.5 * np.sum(np.abs(u) ** 2) - 0.5 * np.sum(np.abs(v) ** 2) + np.vdot(u, v))


def _pm_oracle(sc, zeta, gamma):
    def family(beta):
        ph = 2 * np.pi * np.arange(sc.N) / sc.N
        return [(np.sqrt(sc.omega(beta)) * np.exp(1j * p), np.sqrt(sc.I_l) * np.exp(1j * p)) for p in ph]

    return gram_span_fidelity(family(zeta), family(gamma), _coherent_ip)


def test_leak_epsilon():
    assert leak_epsilon(0.0) == 0.0
    assert leak_epsilon(1e-8) == pytest.approx(1e-8, rel=1e-8)
    vals = [leak_epsilon(I) for I in np.logspace(-10, 0, 30)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        leak_epsilon(-1)


def test_scenario_validation():
    with pytest.raises(ValueError):
        ThaScenario(-1e-8, 8, 0.5)
    with pytest.raises(ValueError):
        ThaScenario(1e-8, 1, 0.5)
    with pytest.raises(ValueError):
        PmScenario(1e-8, -1, 4, 0.5)


@pytest.mark.parametrize("I,N,beta,a", [(1e-3, 8, 0.5, "0Z"), (1e-4, 4, 0.3, "1X"), (0.05, 6, 0.9, "0X"), (1e-6, 3, 0.1, "1Z")])
def test_photon_statistics_against_fock(I, N, beta, a):
    sc = ThaScenario(I, N, 0.5)
    om = sc.omega(beta)
    ref = [np.linalg.norm(tha_class_state(beta, om, a, n, N, CUT)) ** 2 for n in range(N)]
    np.testing.assert_allclose(tha_photon_statistics(sc, beta, a).probs, ref, atol=1e-12)


def test_photon_statistics_limits():
    np.testing.assert_array_equal(tha_photon_statistics(ThaScenario(0.0, 8, 0.5), 0.3, "0Z").probs, discrete_pmf(0.3, 8).probs)
    np.testing.assert_allclose(tha_photon_statistics(ThaScenario(1e-12, 8, 0.5), 0.3, "0Z").probs, discrete_pmf(0.3, 8).probs, atol=1e-9)


@pytest.mark.parametrize("I,N,zeta,gamma,a,n", [(1e-4, 8, 0.5, 0.1, "0Z", 1), (1e-2, 4, 0.8, 0.2, "1X", 2), (1e-3, 5, 0.4, 0.0, "0X", 0), (0.1, 3, 1.0, 0.3, "1Z", 2)])
def test_overlaps_against_fock(I, N, zeta, gamma, a, n):
    sc = ThaScenario(I, N, zeta if zeta > 0 else 0.5)
    u = tha_class_state(zeta, sc.omega(zeta), a, n, N, CUT)
    v = tha_class_state(gamma, sc.omega(gamma), a, n, N, CUT)
    if np.linalg.norm(v) == 0:
        pytest.skip("class empty at zero intensity")
    ref = abs(np.vdot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v))
    assert tha_overlaps(sc, zeta, gamma, a, n) == pytest.approx(ref, abs=1e-12)


def test_overlap_identity_and_range():
    sc = ThaScenario(1e-3, 8, 0.5)
    assert tha_overlaps(sc, 0.5, 0.5, "0Z", 3) == 1.0
    for n in range(8):
        assert 0 <= tha_overlaps(sc, 0.5, 0.05, "0Z", n) <= 1


@pytest.mark.parametrize("I,N,beta,n", [(1e-3, 8, 0.5, 1), (1e-2, 4, 0.4, 1), (0.05, 6, 0.7, 2), (1e-4, 8, 0.2, 0)])
def test_coin_fidelity_against_fock(I, N, beta, n):
    sc = ThaScenario(I, N, beta)
    om = sc.omega(beta)

    def st(a):
        v = tha_class_state(beta, om, a, n, N, CUT)
        return v / np.linalg.norm(v)

    ref = abs(coin_overlap([st("0X"), st("1X")], [st("0Z"), st("1Z")])) ** 2
    assert tha_coin_fidelity(sc, beta, n) == pytest.approx(ref, abs=1e-12)


def test_coin_fidelity_without_leak_is_ideal():
    for N in (4, 8):
        sc = ThaScenario(0.0, N, 0.5)
        assert tha_coin_fidelity(sc, 0.5, 1) == pytest.approx(ideal_coin_overlap(1, 0.5, discrete(N)) ** 2, abs=1e-14)
    assert tha_coin_fidelity(ThaScenario(0.0, 64, 0.5), 0.5, 1) == pytest.approx(1.0, abs=1e-12)


def test_series_agrees_with_phase_grid_projection_for_strong_classes():
    sc = ThaScenario(1e-2, 4, 0.5)
    G = class_gram(sc, 0.5, "0Z", 0.2, "0Z")
    g11 = class_gram(sc, 0.5, "0Z", 0.5, "0Z")
    g22 = class_gram(sc, 0.2, "0Z", 0.2, "0Z")
    for n in range(2):
        direct = G[n, n] / np.sqrt(g11[n, n].real * g22[n, n].real)
        assert class_overlap(sc, 0.5, "0Z", 0.2, "0Z", n) == pytest.approx(direct, abs=1e-10)


def test_gram_is_hermitian_psd_unit_diagonal():
    G, labels = tha_gram(ThaScenario(1e-3, 4, 0.5), (0.5, 0.1))
    assert len(labels) == G.shape[0] == 2 * 4 * 4
    np.testing.assert_allclose(G, G.conj().T, atol=1e-15)
    np.testing.assert_allclose(np.diag(G).real, 1.0, atol=1e-15)
    assert np.linalg.eigvalsh(G)[0] >= -1e-12


def test_pm_trivial_cases():
    sc = PmScenario(0.0, 0.0, 4, 0.5)
    assert pm_leak_fidelity(sc, 0.5, 0.1) == 1.0
    assert pm_coin_fidelity(sc, 0.5, 1) == pytest.approx(1.0, abs=1e-15)
    sc = PmScenario(1e-5, 1e-6, 4, 0.5)
    assert pm_leak_fidelity(sc, 0.3, 0.3) == 1.0
    np.testing.assert_array_equal(pm_photon_statistics(0.4, 5).probs, poisson_pmf(0.4, 5).probs)


@pytest.mark.parametrize(
    "I,I_l,N,zeta,gamma",
    [(1e-6, 1e-6, 4, 0.5, 0.1), (1e-4, 0.0, 4, 0.5, 0.05), (1e-3, 1e-2, 3, 0.8, 0.2), (1e-5, 1e-7, 8, 0.6, 0.0)],
)
def test_pm_leak_fidelity_from_below(I, I_l, N, zeta, gamma):
    sc = PmScenario(I, I_l, N, 0.5)
    ref = _pm_oracle(sc, zeta, gamma)
    val = pm_leak_fidelity(sc, zeta, gamma)
    assert val <= ref + 1e-12
    assert ref - val <= 1e-8
    assert pm_leak_fidelity_exact(sc, zeta, gamma) == pytest.approx(ref, abs=1e-9)


def test_pm_leak_fidelity_monotone_in_separation():
    sc = PmScenario(1e-3, 1e-3, 4, 0.5)
    vals = [pm_leak_fidelity(sc, 0.5, g) for g in np.linspace(0.5, 0.0, 11)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("I,I_l,N,n", [(1e-5, 1e-6, 4, 1), (1e-2, 1e-2, 3, 0), (5e-2, 0.0, 2, 1)])
def test_pm_coin_exhaustive_search(I, I_l, N, n):
    sc = PmScenario(I, I_l, N, 0.5)
    ref = pm_coin_bruteforce(sc.omega(0.5), I_l, N, n)
    assert pm_coin_fidelity(sc, 0.5, n) == pytest.approx(ref, abs=1e-12)
