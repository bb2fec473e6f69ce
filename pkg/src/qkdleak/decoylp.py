"""Decoy-state linear programs for n-photon yields (minimized) and error
probabilities (maximized), with dual-certified optimal values."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
from scipy.optimize import linprog

from .csbounds import tangent_lines
from .gramsdp import UncertifiedError

MODES = ("general", "discrete", "exact")
_FEAS_TOL = 1e-9


class InfeasibleError(RuntimeError):
    """The observations are inconsistent with the source model."""


@dataclass(frozen=True)
class DecoyInputs:
    """Observables and model bounds for one encoding class.

    Arrays are indexed by intensity (mu, nu, omega) and photon number.
    ``z[n, i, j]`` is the squared-overlap lower bound between intensities i, j.
    """

    gains: np.ndarray
    error_gains: np.ndarray
    p_lower: np.ndarray
    p_upper: np.ndarray
    z: np.ndarray
    mode: str = "general"

    def __post_init__(self):
        for name in ("gains", "error_gains", "p_lower", "p_upper", "z"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        k, n1 = self.p_lower.shape
        if self.gains.shape != (k,) or self.error_gains.shape != (k,) or self.p_upper.shape != (k, n1):
            raise ValueError("inconsistent array shapes")
        if self.z.shape != (n1, k, k):
            raise ValueError("overlap catalog must have shape (n_cut+1, k, k)")
        if np.any((self.gains < 0) | (self.gains > 1)) or np.any(self.error_gains > self.gains + 1e-15):
            raise ValueError("need 0 <= EQ <= Q <= 1")
        if np.any((self.z < 0) | (self.z > 1)):
            raise ValueError("overlaps must lie in [0, 1]")

    @property
    def n_cut(self) -> int:
        return self.p_lower.shape[1] - 1

    @property
    def n_intensities(self) -> int:
        return self.p_lower.shape[0]

    def trivial_overlaps(self) -> bool:
        """True when every overlap is 0 or 1, making references irrelevant."""
        return bool(np.all((self.z == 0) | (self.z == 1)))


@dataclass(frozen=True)
class LpResult:
    value: float
    solution: np.ndarray = field(repr=False)
    primal_value: float


def _var(inputs: DecoyInputs, b: int, n: int) -> int:
    return b * (inputs.n_cut + 1) + n


def build_lp(inputs: DecoyInputs, observed: np.ndarray, refs: np.ndarray):
    """Constraint matrices shared by the yield and error programs."""
    k = inputs.n_intensities
    n1 = inputs.n_cut + 1
    nv = k * n1
    rows, rhs = [], []
    for zi, gi in permutations(range(k), 2):
        for n in range(n1):
            zz = float(inputs.z[n, zi, gi])
            if zz == 0.0:
                continue
            (sm, cm), (sp, cp) = tangent_lines(float(refs[n, zi]), zz)
            iz, ig = _var(inputs, zi, n), _var(inputs, gi, n)
            if cm > 0 or sm != 0:
                r = np.zeros(nv)
                r[iz] += sm
                r[ig] -= 1
                rows.append(r)
                rhs.append(-cm)
            if cp < 1 or sp != 0:
                r = np.zeros(nv)
                r[ig] += 1
                r[iz] -= sp
                rows.append(r)
                rhs.append(cp)
    eq_rows, eq_rhs = [], []
    for b in range(k):
        sl = slice(b * n1, (b + 1) * n1)
        obs = float(observed[b])
        if inputs.mode == "exact":
            r = np.zeros(nv)
            r[sl] = inputs.p_lower[b]
            eq_rows.append(r)
            eq_rhs.append(obs)
            continue
        pl = inputs.p_lower[b]
        r = np.zeros(nv)
        r[sl] = pl
        rows.append(r)
        rhs.append(obs)
        r = np.zeros(nv)
        r[sl] = -pl
        rows.append(r)
        rhs.append(1 - pl.sum() - obs)
        if inputs.mode == "discrete":
            r = np.zeros(nv)
            r[sl] = -inputs.p_upper[b]
            rows.append(r)
            rhs.append(-obs)
    A_ub = np.array(rows) if rows else np.zeros((0, nv))
    A_eq = np.array(eq_rows) if eq_rows else None
    return A_ub, np.array(rhs), A_eq, (np.array(eq_rhs) if eq_rows else None)


def _dual_bound(c, A_ub, b_ub, A_eq, b_eq, res) -> float:
    """Weak-duality bound from the solver multipliers with box [0, 1] slack."""
    lam = -res.ineqlin.marginals if A_ub.shape[0] else np.zeros(0)
    lam = np.maximum(lam, 0.0)
    r = c + A_ub.T @ lam
    val = -lam @ b_ub
    if A_eq is not None:
        nu = -res.eqlin.marginals
        r = r + A_eq.T @ nu
        val -= nu @ b_eq
    return float(val + np.minimum(r, 0.0).sum())


def _equilibrate(A, b):
    if A is None or A.shape[0] == 0:
        return A, b
    s = np.abs(A).max(axis=1)
    s[s == 0] = 1.0
    return A / s[:, None], b / s


def _solve(c, A_ub, b_ub, A_eq, b_eq) -> tuple[float, np.ndarray, float]:
    """Solve, check primal feasibility to _FEAS_TOL and return the dual bound.

    Attempts go from row-equilibrated to raw data and then to the interior
    point method; every attempt solves an equivalent system, so the weak
    duality bound computed on it is valid for the original program.
    """
    last = None
    scaled = (*_equilibrate(A_ub, b_ub), *_equilibrate(A_eq, b_eq))
    attempts = ((scaled, "highs-ds"), ((A_ub, b_ub, A_eq, b_eq), "highs-ds"), (scaled, "highs-ipm"))
    for (Au, bu, Ae, be), method in attempts:
        res = linprog(
            c,
            A_ub=Au if Au.shape[0] else None,
            b_ub=bu if Au.shape[0] else None,
            A_eq=Ae,
            b_eq=be,
            bounds=(0.0, 1.0),
            method=method,
            # 1e-10 is the tightest tolerance HiGHS accepts
            options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
        )
        if res.status == 2:
            raise InfeasibleError(res.message)
        if res.status != 0:
            last = res.message
            continue
        x = res.x
        viol = 0.0
        if A_ub.shape[0]:
            viol = max(viol, float(np.max(A_ub @ x - b_ub)))
        if A_eq is not None:
            viol = max(viol, float(np.max(np.abs(A_eq @ x - b_eq))))
        if viol <= _FEAS_TOL:
            return _dual_bound(c, Au, bu, Ae, be, res), x, float(res.fun)
        last = f"primal violation {viol:.2e}"
    raise UncertifiedError(f"linear program not certified: {last}")


def _target_index(inputs: DecoyInputs, target: tuple[int, int]) -> int:
    n, b = target
    if not (0 <= n <= inputs.n_cut and 0 <= b < inputs.n_intensities):
        raise ValueError(f"target {target} out of range")
    return _var(inputs, b, n)


def _check_refs(inputs: DecoyInputs, refs) -> np.ndarray:
    refs = np.asarray(refs, dtype=float)
    if refs.shape != (inputs.n_cut + 1, inputs.n_intensities):
        raise ValueError("references must have shape (n_cut+1, n_intensities)")
    return np.clip(refs, 0.0, 1.0)


def _unpack(inputs: DecoyInputs, x: np.ndarray) -> np.ndarray:
    return x.reshape(inputs.n_intensities, inputs.n_cut + 1).T.copy()


def solve_yield_lp(inputs: DecoyInputs, target: tuple[int, int], refs) -> LpResult:
    """Certified lower bound on Y^n at intensity index b for target (n, b)."""
    refs = _check_refs(inputs, refs)
    A_ub, b_ub, A_eq, b_eq = build_lp(inputs, inputs.gains, refs)
    c = np.zeros(A_ub.shape[1])
    c[_target_index(inputs, target)] = 1.0
    val, x, fun = _solve(c, A_ub, b_ub, A_eq, b_eq)
    return LpResult(min(max(val, 0.0), 1.0), _unpack(inputs, x), fun)


def solve_error_lp(inputs: DecoyInputs, target: tuple[int, int], refs) -> LpResult:
    """Certified upper bound on the n-photon error probability xi^n."""
    refs = _check_refs(inputs, refs)
    A_ub, b_ub, A_eq, b_eq = build_lp(inputs, inputs.error_gains, refs)
    c = np.zeros(A_ub.shape[1])
    c[_target_index(inputs, target)] = -1.0
    val, x, fun = _solve(c, A_ub, b_ub, A_eq, b_eq)
    return LpResult(min(max(-val, 0.0), 1.0), _unpack(inputs, x), -fun)


@dataclass(frozen=True)
class BoundSet:
    yield_lower: float
    xi_upper: float
    e_bit_upper: float


def combine_bounds(yields, xis=None) -> BoundSet:
    """Minimum over bit values for yields, maximum for errors, and their ratio."""
    y = float(min(yields))
    if xis is None:
        return BoundSet(y, float("nan"), float("nan"))
    xi = float(max(xis))
    e = 1.0 if y <= 0 else min(1.0, xi / y)
    return BoundSet(y, xi, e)


def reference_strategy(previous, shape, K: int = 50, rng: np.random.Generator | None = None) -> list[np.ndarray]:
    """References for the next solve: the previous optimum, else K random draws."""
    if previous is not None:
        return [np.clip(np.asarray(previous, dtype=float), 0.0, 1.0)]
    if K < 1:
        raise ValueError("need at least one reference")
    rng = rng if rng is not None else np.random.default_rng(0)
    return [rng.uniform(0.0, 1.0, size=shape) for _ in range(K)]


def best_over_references(solve, inputs: DecoyInputs, target, refs_list, maximize: bool) -> LpResult:
    """Tightest certified value over a list of references.

    ``maximize`` selects the largest value (yield lower bounds) or the smallest
    (error upper bounds).
    """
    if inputs.trivial_overlaps():
        refs_list = refs_list[:1]
    best = None
    for refs in refs_list:
        r = solve(inputs, target, refs)
        if best is None or (r.value > best.value if maximize else r.value < best.value):
            best = r
    return best


def polish_result(solve, inputs: DecoyInputs, target, result: LpResult, maximize: bool, rounds: int = 5) -> LpResult:
    """Re-solve with the current optimum as reference while the bound improves."""
    best = result
    for _ in range(rounds):
        r = solve(inputs, target, best.solution)
        if not ((r.value > best.value) if maximize else (r.value < best.value)):
            break
        best = r
    return best
