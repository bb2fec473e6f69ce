"""Characterized side channels: a coherent Trojan-horse back-reflection against
active phase randomization, and the extra phase-modulator countermeasure."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import factorial, pi, sqrt

import numpy as np
from scipy import stats as _st

from .phase_error import bures_distance, fidelity_from_bures
from .source import ENCODINGS, PhaseDistribution, PhotonStatistics, class_amplitudes, discrete, discrete_pmf, poisson_pmf

ENCODING_PHASE = {"0Z": 0.0, "1Z": pi, "0X": pi / 2, "1X": 3 * pi / 2}

# <jX|iZ> on the qubit ancilla, indexed [j][i]
_ANCILLA_XZ = np.array([[1.0, 1.0], [1.0, -1.0]]) / sqrt(2)


def leak_epsilon(I: float) -> float:
    """Leakage parameter implied by a back-reflection of at most I photons."""
    if I < 0:
        raise ValueError("I must be nonnegative")
    return -np.expm1(-I)


@dataclass(frozen=True)
class ThaScenario:
    """Back-reflected coherent light of intensity Omega_beta = beta * I / mu."""

    I: float
    N: int
    mu: float

    def __post_init__(self):
        if self.I < 0 or self.mu <= 0:
            raise ValueError("need I >= 0 and mu > 0")
        discrete(self.N)

    def omega(self, beta: float) -> float:
        return beta * self.I / self.mu

    @property
    def dist(self) -> PhaseDistribution:
        return discrete(self.N)


def bob_amplitudes(a: str, alpha: complex) -> tuple[complex, complex]:
    if a == "0Z":
        return alpha, 0.0
    if a == "1Z":
        return 0.0, alpha
    s = -1.0 if a == "1X" else 1.0
    return alpha / sqrt(2), s * alpha / sqrt(2)


def coherent_gram(U: np.ndarray, V: np.ndarray | None = None) -> np.ndarray:
    """Inner products <u_i|v_j> of multimode coherent states given by amplitude rows."""
    V = U if V is None else V
    nu = np.sum(np.abs(U) ** 2, axis=1)
    nv = np.sum(np.abs(V) ** 2, axis=1)
    return np.exp(-0.5 * nu[:, None] - 0.5 * nv[None, :] + U.conj() @ V.T)


def tha_amplitudes(scenario: ThaScenario, beta: float, a: str) -> np.ndarray:
    """Rows (B1, B2, E) for the N phase-shifted product states of one setting."""
    th = scenario.dist.phases()
    rows = []
    for t in th:
        b1, b2 = bob_amplitudes(a, sqrt(beta) * np.exp(1j * t))
        e = sqrt(scenario.omega(beta)) * np.exp(1j * (t + ENCODING_PHASE[a]))
        rows.append((b1, b2, e))
    return np.array(rows, dtype=complex)


def tha_gram(scenario: ThaScenario, intensities) -> tuple[np.ndarray, list[tuple[float, str, int]]]:
    """Gram matrix of the product states for every (intensity, encoding, phase)."""
    labels = []
    rows = []
    for beta in intensities:
        for a in ENCODINGS:
            amp = tha_amplitudes(scenario, beta, a)
            rows.append(amp)
            labels.extend((beta, a, l) for l in range(scenario.N))
    U = np.vstack(rows)
    return coherent_gram(U), labels


def _dft(N: int) -> np.ndarray:
    l = np.arange(N)
    return np.exp(-2j * pi * np.outer(l, l) / N) / N


def class_gram(scenario: ThaScenario, beta1: float, a1: str, beta2: float, a2: str) -> np.ndarray:
    """Unnormalized inner products <nbar_1|mbar_2> indexed [n, m]."""
    W = _dft(scenario.N)
    G = coherent_gram(tha_amplitudes(scenario, beta1, a1), tha_amplitudes(scenario, beta2, a2))
    return W.conj().T @ G @ W


def mode_overlap(scenario: ThaScenario, a1: str, a2: str) -> complex:
    """<u_a1|u_a2> for the normalized joint (B1, B2, E) mode of each encoding."""
    r = scenario.I / scenario.mu
    u1 = np.array([*bob_amplitudes(a1, 1.0), sqrt(r) * np.exp(1j * ENCODING_PHASE[a1])], dtype=complex)
    u2 = np.array([*bob_amplitudes(a2, 1.0), sqrt(r) * np.exp(1j * ENCODING_PHASE[a2])], dtype=complex)
    return complex(np.vdot(u1, u2) / (1 + r))


def class_overlap(scenario: ThaScenario, beta1: float, a1: str, beta2: float, a2: str, n: int) -> complex:
    """Normalized <n_beta1,a1|n_beta2,a2>, summed over Fock terms m = n mod N.

    Each product state is a coherent state of one joint mode, so the class
    states are series in that mode; this avoids the cancellation of the
    direct phase-grid projection for weak classes.
    """
    s = 1 + scenario.I / scenario.mu
    m1, w1 = class_amplitudes(beta1 * s, n, scenario.N)
    m2, w2 = class_amplitudes(beta2 * s, n, scenario.N)
    k = min(len(m1), len(m2))
    t = mode_overlap(scenario, a1, a2)
    return complex(np.sum(w1[:k] * w2[:k] * t ** m1[:k].astype(float)))


def tha_photon_statistics(scenario: ThaScenario, beta: float, a: str) -> PhotonStatistics:
    """Class probabilities; the encoding phase does not change them."""
    return discrete_pmf(beta * (1 + scenario.I / scenario.mu), scenario.N)


def tha_overlaps(scenario: ThaScenario, zeta: float, gamma: float, a: str, n: int) -> float:
    """|<n_zeta|n_gamma>| for the leaky n-photon-class states of one encoding."""
    if zeta == gamma:
        return 1.0
    return min(abs(class_overlap(scenario, zeta, a, gamma, a, n)), 1.0)


def tha_coin_fidelity(scenario: ThaScenario, beta: float, n: int) -> float:
    """|<Psi_Z|Psi_X>|^2 for the leaky n-photon entangled states.

    Class probabilities do not depend on the encoding, so q = 1/2 exactly.
    """
    if beta <= 0:
        raise ValueError("coin fidelity needs beta > 0")
    ov = 0.0j
    for j in range(2):
        for i in range(2):
            ov += 0.5 * _ANCILLA_XZ[j, i] * class_overlap(scenario, beta, f"{j}X", beta, f"{i}Z", n)
    return min(abs(ov) ** 2, 1.0)


# extra phase modulator


@dataclass(frozen=True)
class PmScenario:
    """Leak of the encoder and intensity modulator (I) and of an extra PM (I_l)."""

    I: float
    I_l: float
    N: int
    mu: float
    tail_tol: float = 1e-18

    def __post_init__(self):
        if self.I < 0 or self.I_l < 0 or self.mu <= 0 or self.N < 1:
            raise ValueError("need I, I_l >= 0, mu > 0 and N >= 1")

    def omega(self, beta: float) -> float:
        return beta * self.I / self.mu

    def phases(self) -> np.ndarray:
        return 2 * pi * np.arange(self.N) / self.N

    def cutoff(self, beta: float) -> int:
        """Smallest total photon number M whose projection keeps all but tail_tol."""
        lam = self.omega(beta) + self.I_l
        if lam == 0:
            return 0
        M = 0
        while _st.poisson.sf(M, lam) > self.tail_tol:
            M += 1
        return M


def _leak_amplitudes(scenario: PmScenario, beta: float, a: str) -> np.ndarray:
    ph = scenario.phases()
    e1 = sqrt(scenario.omega(beta)) * np.exp(1j * (ph + ENCODING_PHASE[a]))
    e2 = sqrt(scenario.I_l) * np.exp(1j * ph)
    return np.column_stack([e1, e2])


def _fock_vectors(amps: np.ndarray, M: int) -> np.ndarray:
    """Two-mode coherent states projected onto total photon number <= M (columns)."""
    idx = [(n1, n2) for n1 in range(M + 1) for n2 in range(M + 1 - n1)]
    out = np.empty((len(idx), len(amps)), dtype=complex)
    norm = np.exp(-0.5 * np.sum(np.abs(amps) ** 2, axis=1))
    for r, (n1, n2) in enumerate(idx):
        out[r] = norm * amps[:, 0] ** n1 * amps[:, 1] ** n2 / sqrt(factorial(n1) * factorial(n2))
    return out


def nuclear_fidelity(cross: np.ndarray) -> float:
    """F(AA^H, BB^H) from the cross matrix A^H B."""
    s = np.linalg.svd(cross, compute_uv=False)
    return float(min(s.sum() ** 2, 1.0))


def pm_leak_fidelity(scenario: PmScenario, zeta: float, gamma: float, a: str = "0Z") -> float:
    """Lower bound on the fidelity of the leak states at two intensities."""
    if zeta == gamma:
        return 1.0
    M = max(scenario.cutoff(zeta), scenario.cutoff(gamma))
    N = scenario.N
    A = _fock_vectors(_leak_amplitudes(scenario, zeta, a), M) / sqrt(N)
    B = _fock_vectors(_leak_amplitudes(scenario, gamma, a), M) / sqrt(N)
    tz = float(np.sum(np.abs(A) ** 2))
    tg = float(np.sum(np.abs(B) ** 2))
    try:
        fm = nuclear_fidelity(A.conj().T @ B) / (tz * tg)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"fidelity of projected leak states failed (M={M}, dim={A.shape[0]})") from exc
    legs = []
    for beta in (zeta, gamma):
        tail = float(_st.poisson.sf(M, scenario.omega(beta) + scenario.I_l))
        # d_B for retained mass t = 1 - tail, written to avoid cancellation
        legs.append(sqrt(2 * tail / (1 + sqrt(1 - tail))))
    d = legs[0] + bures_distance(min(fm, 1.0)) + legs[1]
    return fidelity_from_bures(d)


def pm_leak_fidelity_exact(scenario: PmScenario, zeta: float, gamma: float, a: str = "0Z") -> float:
    """Untruncated fidelity from the cross Gram of the defining coherent states."""
    N = scenario.N
    cross = coherent_gram(_leak_amplitudes(scenario, zeta, a), _leak_amplitudes(scenario, gamma, a)) / N
    return nuclear_fidelity(cross)


def pm_leak_products(scenario: PmScenario, beta: float, deltas: dict[str, float]) -> dict[tuple[str, str], complex]:
    """<Psi_leak_a'|Psi_leak_a> for the chosen purification offsets."""
    om = scenario.omega(beta)
    lam = scenario.I_l
    out = {}
    for ap in ENCODINGS:
        for a in ENCODINGS:
            d1 = ENCODING_PHASE[a] - ENCODING_PHASE[ap] + deltas[a] - deltas[ap]
            d2 = deltas[a] - deltas[ap]
            out[(ap, a)] = np.exp(-om * (1 - np.exp(1j * d1)) - lam * (1 - np.exp(1j * d2)))
    return out


def pm_coin_value(n: int, products: dict[tuple[str, str], complex]) -> float:
    s = products[("0X", "0Z")] + products[("1X", "0Z")] + products[("0X", "1Z")] - (-1) ** n * products[("1X", "1Z")]
    return float(min(abs(s / (2 * sqrt(2.0 ** (n + 1)))) ** 2, 1.0))


def pm_coin_fidelity(scenario: PmScenario, beta: float, n: int) -> float:
    """Coin fidelity maximized over purification offsets on the N-phase grid."""
    N = scenario.N
    grid = scenario.phases()
    om = scenario.omega(beta)
    lam = scenario.I_l
    # vectorized over all N^4 assignments (d0Z, d1Z, d0X, d1X)
    D = np.array(list(product(range(N), repeat=4)))
    dz0, dz1, dx0, dx1 = (grid[D[:, k]] for k in range(4))

    def L(phx, dx, phz, dz):
        d1 = phz - phx + dz - dx
        d2 = dz - dx
        return np.exp(-om * (1 - np.exp(1j * d1)) - lam * (1 - np.exp(1j * d2)))

    P = ENCODING_PHASE
    s = (
        L(P["0X"], dx0, P["0Z"], dz0)
        + L(P["1X"], dx1, P["0Z"], dz0)
        + L(P["0X"], dx0, P["1Z"], dz1)
        - (-1) ** n * L(P["1X"], dx1, P["1Z"], dz1)
    )
    vals = np.abs(s / (2 * sqrt(2.0 ** (n + 1)))) ** 2
    return float(min(vals.max(), 1.0))


def pm_photon_statistics(beta: float, n_cut: int = 10) -> PhotonStatistics:
    """Bob's statistics factor out of the leak and stay Poisson."""
    return poisson_pmf(beta, n_cut)
