"""Transmitter model: phase distributions, photon-number statistics and ideal
n-photon state overlaps for the dual-mode BB84 encoding."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, lgamma, log, sqrt

import numpy as np
from scipy import stats as _st

ENCODINGS = ("0Z", "1Z", "0X", "1X")

# relative size below which an l-sum term is dropped
_SERIES_RTOL = 1e-18


@dataclass(frozen=True)
class PhaseDistribution:
    """Global-phase distribution of the laser pulses.

    ``kind`` is ``"uniform"`` for continuous randomization or ``"discrete"``
    for ``N`` evenly spaced phases 2*pi*k/N.
    """

    kind: str = "uniform"
    N: int | None = None

    def __post_init__(self):
        if self.kind == "uniform":
            if self.N is not None:
                raise ValueError("uniform phase distribution takes no N")
        elif self.kind == "discrete":
            if self.N is None or int(self.N) != self.N or self.N < 2:
                raise ValueError(f"discrete phase distribution needs integer N >= 2, got {self.N!r}")
        else:
            raise ValueError(f"unknown phase distribution kind {self.kind!r}")

    @property
    def is_discrete(self) -> bool:
        return self.kind == "discrete"

    def phases(self) -> np.ndarray:
        if not self.is_discrete:
            raise ValueError("continuous distribution has no phase grid")
        return 2 * np.pi * np.arange(self.N) / self.N


UNIFORM = PhaseDistribution()


def discrete(N: int) -> PhaseDistribution:
    return PhaseDistribution("discrete", N)


@dataclass(frozen=True)
class IntensitySet:
    mu: float
    nu: float
    omega: float = 0.0
    p_beta: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if not (self.mu > self.nu > self.omega >= 0):
            raise ValueError(f"need mu > nu > omega >= 0, got {self.mu}, {self.nu}, {self.omega}")
        if any(p < 0 for p in self.p_beta) or abs(sum(self.p_beta) - 1) > 1e-12:
            raise ValueError("intensity probabilities must be nonnegative and sum to 1")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.mu, self.nu, self.omega)


@dataclass(frozen=True)
class EncodingLabel:
    value: str
    p_a: float = 0.25

    def __post_init__(self):
        if self.value not in ENCODINGS:
            raise ValueError(f"unknown encoding {self.value!r}")

    @property
    def bit(self) -> int:
        return int(self.value[0])

    @property
    def basis(self) -> str:
        return self.value[1]


@dataclass(frozen=True)
class PhotonStatistics:
    beta: float
    dist: PhaseDistribution
    n_cut: int
    probs: np.ndarray = field(repr=False)
    tail: float

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        if p.shape != (self.n_cut + 1,):
            raise ValueError("probs must have length n_cut + 1")
        if np.any(p < 0) or self.tail < 0:
            raise ValueError("negative probability")
        if abs(p.sum() + self.tail - 1) > 1e-12:
            raise ValueError("photon statistics are not normalized")


def _check_beta(beta: float) -> None:
    if not beta >= 0:
        raise ValueError(f"intensity must be nonnegative, got {beta}")


def poisson_pmf(beta: float, n_cut: int) -> PhotonStatistics:
    """Poisson photon-number statistics of a uniformly phase-randomized pulse."""
    _check_beta(beta)
    if n_cut < 0:
        raise ValueError("n_cut must be nonnegative")
    n = np.arange(n_cut + 1)
    if beta == 0:
        probs = (n == 0).astype(float)
        tail = 0.0
    else:
        probs = _st.poisson.pmf(n, beta)
        tail = float(_st.poisson.sf(n_cut, beta))
    return PhotonStatistics(beta, UNIFORM, n_cut, probs, tail)


def fock_cutoff(beta: float) -> int:
    """Fock cutoff leaving a coherent-state tail far below 1e-15."""
    return int(beta + 20 * sqrt(beta) + 30)


def _series_terms(beta: float, n: int, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices m = lN + n and log(beta^m / m!) up to the series cutoff."""
    ms = []
    logs = []
    m = n
    peak = -np.inf
    while True:
        lt = m * log(beta) - lgamma(m + 1) if beta > 0 else (0.0 if m == 0 else -np.inf)
        ms.append(m)
        logs.append(lt)
        peak = max(peak, lt)
        if m > beta and lt - peak < log(_SERIES_RTOL):
            break
        if beta == 0:
            break
        m += N
    return np.array(ms), np.array(logs)


def discrete_pmf(beta: float, N: int) -> PhotonStatistics:
    """Statistics of the N-phase randomized pulse, one entry per residue class."""
    _check_beta(beta)
    dist = discrete(N)
    probs = np.zeros(N)
    for n in range(N):
        _, logs = _series_terms(beta, n, N)
        probs[n] = np.exp(logs - beta).sum()
    probs /= probs.sum()
    return PhotonStatistics(beta, dist, N - 1, probs, 0.0)


def photon_statistics(beta: float, dist: PhaseDistribution, n_cut: int = 10) -> PhotonStatistics:
    if dist.is_discrete:
        return discrete_pmf(beta, dist.N)
    return poisson_pmf(beta, n_cut)


def class_amplitudes(beta: float, n: int, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Fock indices and normalized real amplitudes of the ideal n-class state.

    For ``beta = 0`` the state is the limit ``|n>``.
    """
    if beta == 0:
        return np.array([n]), np.array([1.0])
    ms, logs = _series_terms(beta, n, N)
    w = np.exp(0.5 * (logs - logs.max()))
    return ms, w / np.linalg.norm(w)


def ideal_intensity_overlap(n: int, zeta: float, gamma: float, dist: PhaseDistribution) -> float:
    """Overlap of the ideal n-photon states emitted at two intensities."""
    _check_beta(zeta)
    _check_beta(gamma)
    if n < 0:
        raise ValueError("photon number must be nonnegative")
    if not dist.is_discrete or zeta == gamma:
        return 1.0
    N = dist.N
    m1, a1 = class_amplitudes(zeta, n, N)
    m2, a2 = class_amplitudes(gamma, n, N)
    k = min(len(m1), len(m2))
    val = float(np.dot(a1[:k], a2[:k]))
    return min(max(val, 0.0), 1.0)


def encoding_fock_overlap(a: str, a2: str, m: int) -> float:
    """Inner product of the m-photon dual-mode states for two encodings."""
    if a not in ENCODINGS or a2 not in ENCODINGS:
        raise ValueError("unknown encoding")
    if m < 0:
        raise ValueError("photon number must be nonnegative")
    if a == a2 or m == 0:
        return 1.0
    pair = frozenset((a, a2))
    if pair in (frozenset(("0Z", "1Z")), frozenset(("0X", "1X"))):
        return 0.0
    amp = 2.0 ** (-m / 2)
    if pair == frozenset(("1Z", "1X")):
        return (-1) ** m * amp
    return amp


def x_amplitude(m: int, k: int, bit: int) -> float:
    """Coefficient of |m-k, k> in the m-photon X-basis state."""
    return (-1) ** (k * bit) * sqrt(comb(m, k) / 2.0**m)


# <jX|iZ> on the qubit ancilla, indexed [j][i]
_ANCILLA_XZ = np.array([[1.0, 1.0], [1.0, -1.0]]) / sqrt(2)


def coin_overlap_from_products(products: np.ndarray) -> complex:
    """<Psi_X|Psi_Z> for equal priors given photonic products[j, i] = <n_jX|n_iZ>."""
    return 0.5 * complex(np.sum(_ANCILLA_XZ * products))


def ideal_coin_overlap(n: int, beta: float, dist: PhaseDistribution) -> float:
    """Overlap of the ideal Z- and X-basis entangled n-photon states."""
    _check_beta(beta)
    if n < 0:
        raise ValueError("photon number must be nonnegative")
    prod = np.empty((2, 2))
    if dist.is_discrete:
        ms, amps = class_amplitudes(beta, n, dist.N)
        w = amps**2
        for j in range(2):
            for i in range(2):
                prod[j, i] = sum(wk * encoding_fock_overlap(f"{j}X", f"{i}Z", int(m)) for m, wk in zip(ms, w))
    else:
        # closed form keeps n = 1 exactly at 1
        return (3 - (-1) ** n) / (2 * sqrt(2.0 ** (n + 1)))
    return min(abs(coin_overlap_from_products(prod)), 1.0)
