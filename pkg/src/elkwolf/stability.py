"""Local stability (characteristic polynomial, Routh-Hurwitz, eigenvalues),
the closed-form coexistence stability conditions, and the Lyapunov
certificate for global stability."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .equilibria import Equilibrium, EquilibriumKind, coexistence_equilibrium
from .model import ParameterSet, jacobian, random_parameters


class Classification(enum.Enum):
    STABLE_NODE = "StableNode"
    STABLE_FOCUS = "StableFocus"
    UNSTABLE = "Unstable"
    MARGINAL = "Marginal"

    @property
    def is_stable(self) -> bool:
        return self in (Classification.STABLE_NODE, Classification.STABLE_FOCUS)


@dataclass(frozen=True)
class CharPoly:
    """Coefficients of lambda^3 + b1 lambda^2 + b2 lambda + b3."""

    b1: float
    b2: float
    b3: float

    @property
    def hurwitz_margin(self) -> float:
        return self.b1 * self.b2 - self.b3

    def __call__(self, lam):
        return ((lam + self.b1) * lam + self.b2) * lam + self.b3


@dataclass(frozen=True)
class StabilityReport:
    eigenvalues: tuple[complex, complex, complex]
    classification: Classification
    routh_hurwitz_holds: bool | None
    margins: tuple[float, float, float] | None
    # X1 only: closed condition alpha - q psi < beta gamma / xi, and whether it
    # agrees with the eigenvalue classification
    closed_condition: bool | None = None
    closed_condition_agrees: bool | None = None


class NonexistentEquilibriumError(ValueError):
    pass


def _require_exists(eq: Equilibrium) -> None:
    if not eq.exists:
        raise NonexistentEquilibriumError(f"{eq.kind.value} equilibrium does not exist")


def charpoly_at_coexistence(params: ParameterSet, xstar: Equilibrium) -> CharPoly:
    _require_exists(xstar)
    p = params
    E, N, P = xstar.point
    b1 = p.alpha * E / p.K - p.beta + p.xi * P
    b2 = (-p.alpha * p.beta * E / p.K + p.theta1 * p.gamma ** 2 * E * P
          + p.theta2 * p.xi ** 2 * N * P + p.alpha * p.xi * E * P / p.K)
    b3 = E * P * (p.theta1 * p.gamma ** 2 * (-p.beta + p.xi * P)
                  + p.theta2 * p.gamma * p.mu * p.xi
                  + p.theta2 * p.alpha * p.xi ** 2 * N / p.K)
    return CharPoly(b1, b2, b3)


def charpoly_from_matrix(J: np.ndarray) -> CharPoly:
    """Invariants of a 3x3 matrix: b1 = -tr, b2 = sum of principal minors, b3 = -det."""
    minors = (J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
              + J[0, 0] * J[2, 2] - J[0, 2] * J[2, 0]
              + J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
    return CharPoly(-float(np.trace(J)), float(minors), -float(np.linalg.det(J)))


def routh_hurwitz(cp: CharPoly) -> tuple[bool, tuple[float, float, float]]:
    margins = (cp.b1, cp.b3, cp.hurwitz_margin)
    return all(m > 0 for m in margins), margins


def _polish(cp: CharPoly, lam: complex) -> complex:
    for _ in range(3):
        d = (3.0 * lam + 2.0 * cp.b1) * lam + cp.b2
        if d == 0:
            break
        step = cp(lam) / d
        lam -= step
        if abs(step) <= 1e-16 * (1.0 + abs(lam)):
            break
    return lam


def cubic_roots(cp: CharPoly) -> tuple[complex, complex, complex]:
    """Roots of the monic cubic, ordered by descending real part then ascending
    imaginary part.

    Uses the depressed-cubic closed form (trigonometric branch for three real
    roots, Cardano otherwise) followed by Newton polishing of each root.
    """
    a, b, c = cp.b1, cp.b2, cp.b3
    shift = -a / 3.0
    p = b - a * a / 3.0
    q = 2.0 * a ** 3 / 27.0 - a * b / 3.0 + c
    if abs(p) <= 1e-15 * max(1.0, a * a) and abs(q) <= 1e-15 * max(1.0, abs(a) ** 3):
        roots = [complex(shift)] * 3
    else:
        disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
        if disc < 0:
            r = 2.0 * math.sqrt(-p / 3.0)
            phi = math.acos(max(-1.0, min(1.0, 3.0 * q / (p * r))))
            roots = [complex(r * math.cos((phi - 2.0 * math.pi * k) / 3.0) + shift) for k in range(3)]
        else:
            sq = math.sqrt(disc)
            # choose the larger-magnitude branch to avoid cancellation
            w = -q / 2.0 - sq if q > 0 else -q / 2.0 + sq
            u = math.copysign(abs(w) ** (1.0 / 3.0), w)
            v = -p / (3.0 * u) if u != 0 else 0.0
            real = u + v
            re = -real / 2.0
            im = math.sqrt(3.0) / 2.0 * (u - v)
            roots = [complex(real + shift), complex(re + shift, im), complex(re + shift, -im)]
        roots = [_polish(cp, r) for r in roots]
        # keep an exact conjugate pair for real coefficients
        if abs(roots[1].imag) > 0:
            roots[2] = roots[1].conjugate()
    return tuple(sorted(roots, key=lambda z: (-z.real, z.imag)))


def _marginal_band(eigs) -> float:
    return 1e-9 * (1.0 + max(abs(z) for z in eigs))


def classify_eigenvalues(eigs) -> Classification:
    tol = _marginal_band(eigs)
    re = [z.real for z in eigs]
    if any(r > tol for r in re):
        return Classification.UNSTABLE
    if all(r < -tol for r in re):
        if any(abs(z.imag) > tol for z in eigs):
            return Classification.STABLE_FOCUS
        return Classification.STABLE_NODE
    return Classification.MARGINAL


def classify_charpoly(cp: CharPoly) -> Classification:
    """Stable / Unstable / Marginal from Routh-Hurwitz margins.

    The Hurwitz margin is compared against a band of 1e-9 relative to the
    size of its terms so that near-Hopf cells are reported as Marginal.
    """
    band = 1e-9 * (1.0 + abs(cp.b1 * cp.b2) + abs(cp.b3))
    if cp.b1 > 0 and cp.b3 > 0 and cp.hurwitz_margin > band:
        return Classification.STABLE_FOCUS
    if abs(cp.hurwitz_margin) <= band or abs(cp.b3) <= 1e-9 * (1.0 + abs(cp.b3)):
        return Classification.MARGINAL
    return Classification.UNSTABLE


def classify_equilibrium(params: ParameterSet, eq: Equilibrium) -> StabilityReport:
    _require_exists(eq)
    J = jacobian(params, eq.point)
    eigs = tuple(sorted((complex(z) for z in np.linalg.eigvals(J)), key=lambda z: (-z.real, z.imag)))
    cls = classify_eigenvalues(eigs)
    rh = margins = closed = agrees = None
    if eq.kind is EquilibriumKind.COEXISTENCE:
        rh, margins = routh_hurwitz(charpoly_at_coexistence(params, eq))
    elif eq.kind is EquilibriumKind.NO_BANFF_ELK:
        p = params
        closed = p.alpha - p.q * p.psi < p.beta * p.gamma / p.xi
        agrees = closed == cls.is_stable
    return StabilityReport(eigs, cls, rh, margins, closed, agrees)


@dataclass(frozen=True)
class Table2Conditions:
    n1: float | None
    n2: float
    f_of_nstar: float
    a_coeffs: tuple[float, ...]
    A_coeffs: tuple[float, float, float, float]
    satisfied: bool | None


def table2_coefficients(params: ParameterSet) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """a1..a9 and A11..A44 evaluated verbatim (including q*gamma inside a7)."""
    p = params
    al, K, g, q, psi, be, mu, xi, t1, t2, eta = (
        p.alpha, p.K, p.gamma, p.q, p.psi, p.beta, p.mu, p.xi, p.theta1, p.theta2, p.eta)
    r = al - q * psi
    a1 = -al * t2 * xi ** 2
    a2 = al * eta * xi + t1 * g * K * (be * g - xi * r)
    a3 = al ** 2 * t2 ** 2 * xi ** 2 * (xi - g) - al * t1 * t2 ** 2 * g * xi ** 3 * K
    a4 = (al * t1 * t2 * g * eta * xi ** 2 * K
          - t1 ** 2 * t2 * g ** 2 * xi ** 2 * K ** 2 * r
          - t1 * t2 * al * g * xi * K * (be * g - xi * r)
          - 2 * t2 * al ** 2 * xi * eta * (xi - g))
    a5 = al ** 2 * eta ** 2 * (xi - g) + t1 * g * K * al * eta * (be * g - xi * r)
    a6 = t2 ** 3 * xi ** 3 * al ** 2
    a7 = al * K * t2 ** 2 * xi ** 2 * (t1 * g * (al - q * g) - t2 * mu * xi) - 3 * eta * al ** 2 * t2 ** 2 * xi ** 2
    a8 = (3 * t2 ** 2 * al ** 2 * xi * eta ** 2 + t1 * t2 ** 2 * xi ** 2 * mu * g * K ** 2 * r
          - 2 * t2 * xi * al * K * eta * (t1 * g * r - t2 * mu * xi))
    a9 = (-al ** 3 * eta ** 3 + al * K * eta ** 2 * (t1 * g * r - t2 * mu * xi)
          - t1 * t2 * xi * mu * eta * g * K ** 2 * r)
    w = t1 * g ** 3 * K
    A11 = a1 * a3 + w * a6
    A22 = a1 * a4 + a2 * a3 + w * a7
    A33 = a1 * a5 + a2 * a4 + w * a8
    A44 = a2 * a5 + w * a9
    return (a1, a2, a3, a4, a5, a6, a7, a8, a9), (A11, A22, A33, A44)


def table2_conditions(params: ParameterSet, xstar: Equilibrium) -> Table2Conditions:
    """Thresholds N1, N2 and the cubic F(N*) for the coexistence point.

    ``n1`` is None when gamma == xi (pole of the N1 formula); the
    ``satisfied`` flag is then None as well.
    """
    _require_exists(xstar)
    p = params
    r = p.alpha - p.q * p.psi
    bracket = p.xi * r - p.beta * p.gamma
    n_high = p.eta / (p.theta2 * p.xi)
    if p.xi == p.gamma:
        n1 = None
    else:
        n1 = n_high - p.theta1 * p.gamma * p.K / (p.alpha * (p.xi - p.gamma) * p.theta2 * p.xi) * bracket
    n2 = (p.eta / (2 * p.theta2 * p.xi) - p.mu * p.gamma * p.K / (2 * p.alpha * p.xi)
          - p.theta1 * p.gamma * p.K / (2 * p.alpha * p.theta2 * p.xi) * bracket)
    a, A = table2_coefficients(p)
    n = xstar.point.N
    f = ((A[0] * n + A[1]) * n + A[2]) * n + A[3]
    satisfied = None if n1 is None else bool(n > max(n1, n2) and f > 0)
    return Table2Conditions(n1, n2, f, a, A, satisfied)


@dataclass(frozen=True)
class CrosscheckRow:
    index: int
    params: ParameterSet
    table2: bool
    routh_hurwitz: bool


@dataclass(frozen=True)
class CrosscheckTable:
    draws: int
    evaluated: int      # draws with an existing X* and defined N1
    agree: int
    disagree: int
    first_disagreements: list[CrosscheckRow]

    @property
    def agreement_fraction(self) -> float | None:
        return self.agree / self.evaluated if self.evaluated else None


def _crosscheck_one(args):
    index, seed = args
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
    p = random_parameters(rng)
    xs = coexistence_equilibrium(p)
    if not xs.exists:
        return None
    t2 = table2_conditions(p, xs)
    if t2.satisfied is None:
        return None
    rh, _ = routh_hurwitz(charpoly_at_coexistence(p, xs))
    return CrosscheckRow(index, p, t2.satisfied, rh)


def crosscheck_conditions(sample_count: int, seed: int, workers: int = 1) -> CrosscheckTable:
    """Compare the closed-form Table-2 stability test against Routh-Hurwitz
    over random parameter draws (one independent RNG substream per draw)."""
    jobs = [(i, seed) for i in range(sample_count)]
    if workers > 1 and sample_count:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_crosscheck_one, jobs, chunksize=64))
    else:
        rows = [_crosscheck_one(j) for j in jobs]
    rows = [r for r in rows if r is not None]
    bad = [r for r in rows if r.table2 != r.routh_hurwitz]
    return CrosscheckTable(
        draws=sample_count,
        evaluated=len(rows),
        agree=len(rows) - len(bad),
        disagree=len(bad),
        first_disagreements=bad[:10],
    )


@dataclass(frozen=True)
class LyapunovCertificate:
    delta1: float
    delta2: float | None
    delta3: float
    n_min: float
    feasible: bool
    interval: tuple[float, float]
    margins: tuple[float, float, float] | None


def lyapunov_certificate(params: ParameterSet, xstar: Equilibrium, n_min: float) -> LyapunovCertificate:
    """Search weights (d1, d2, d3) with d3 = 1 satisfying

        d1 > theta1 d3,  d2 n_min > theta2 d3,  4 alpha d1 E* > mu d2 K N*.

    ``n_min`` is a caller-supplied lower bound on N(t) along trajectories.
    The check covers only these sufficient inequalities.
    """
    _require_exists(xstar)
    if not n_min > 0:
        raise ValueError(f"n_min must be > 0, got {n_min!r}")
    p = params
    E, N, _ = xstar.point
    d3 = 1.0
    d1 = max(2.0 * p.theta1, 1.0)
    lo = p.theta2 * d3 / n_min
    hi = 4.0 * p.alpha * d1 * E / (p.mu * p.K * N)
    if not lo < hi:
        return LyapunovCertificate(d1, None, d3, n_min, False, (lo, hi), None)
    d2 = 0.5 * (lo + hi)
    margins = (
        d1 - p.theta1 * d3,
        d2 * n_min - p.theta2 * d3,
        4.0 * p.alpha * d1 * E - p.mu * d2 * p.K * N,
    )
    feasible = all(m > 0 for m in margins)
    return LyapunovCertificate(d1, d2 if feasible else None, d3, n_min, feasible, (lo, hi), margins)
