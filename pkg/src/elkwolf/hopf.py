"""Hopf point location in beta, transversality, and the normal-form
coefficients (first Lyapunov coefficient and the S1, S2, S3 indicators)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .equilibria import Equilibrium, coexistence_equilibrium
from .model import ParameterSet, hessians, jacobian, rhs
from .stability import CharPoly, charpoly_at_coexistence, cubic_roots


class HopfError(ValueError):
    pass


def _charpoly(params: ParameterSet, beta: float) -> tuple[CharPoly, Equilibrium] | None:
    p = params.replace(beta=beta)
    xs = coexistence_equilibrium(p)
    if not xs.exists:
        return None
    return charpoly_at_coexistence(p, xs), xs


def hurwitz_function(params: ParameterSet, beta: float) -> float | None:
    """h(beta) = b1 b2 - b3 at X*(beta); None where X* does not exist."""
    res = _charpoly(params, beta)
    return None if res is None else res[0].hurwitz_margin


@dataclass(frozen=True)
class HopfPoint:
    beta_sharp: float
    psi0: float
    charpoly: CharPoly
    transversality_raw: float
    phi1_prime: float
    bi_positive: tuple[bool, bool, bool]
    multiple_roots: bool
    # intermediate diagnostics of the eigenvalue-derivative derivation
    P1: float
    P2: float
    R1: float
    R2: float


def _derivative(f, x: float, step: float) -> float:
    return (f(x + step) - f(x - step)) / (2.0 * step)


def _coefficient_derivatives(params: ParameterSet, beta: float, fd_step: float):
    step = fd_step * max(1.0, abs(beta))
    lo, hi = _charpoly(params, beta - step), _charpoly(params, beta + step)
    if lo is None or hi is None:
        raise HopfError(f"coexistence equilibrium does not exist at beta={beta}+-{step}")
    (a, _), (b, _) = lo, hi
    return tuple((getattr(b, k) - getattr(a, k)) / (2.0 * step) for k in ("b1", "b2", "b3"))


def transversality(params: ParameterSet, beta_sharp: float, fd_step: float = 1e-5) -> tuple[float, float]:
    """d/dbeta {b3 - b1 b2} at ``beta_sharp`` (central difference with X*
    recomputed at each beta) and the implied real-part speed
    phi1' = derivative / (2 (b1^2 + b2))."""
    step = fd_step * max(1.0, abs(beta_sharp))

    def g(beta):
        v = hurwitz_function(params, beta)
        if v is None:
            raise HopfError(f"coexistence equilibrium does not exist at beta={beta}")
        return -v

    raw = _derivative(g, beta_sharp, step)
    cp, _ = _charpoly(params, beta_sharp)
    return raw, raw / (2.0 * (cp.b1 ** 2 + cp.b2))


def hopf_locate(params: ParameterSet, beta_min: float, beta_max: float, tol: float = 1e-8,
                grid: int = 400, fd_step: float = 1e-5) -> HopfPoint | None:
    """Locate beta# where b1 b2 - b3 changes sign with b1, b2, b3 > 0.

    The interval is sampled on ``grid`` subintervals (points without an
    existing X* are skipped), and the first admissible sign change is refined
    by bisection to width ``tol``. Returns None if there is none.
    """
    if not beta_min < beta_max:
        raise HopfError(f"invalid interval [{beta_min}, {beta_max}]")
    betas = np.linspace(beta_min, beta_max, grid + 1)
    vals = [hurwitz_function(params, float(b)) for b in betas]
    brackets = []
    for i in range(grid):
        v0, v1 = vals[i], vals[i + 1]
        if v0 is None or v1 is None or v0 * v1 > 0 or (v0 == 0 and v1 == 0):
            continue
        brackets.append((float(betas[i]), float(betas[i + 1]), v0))
    roots = []
    for lo, hi, vlo in brackets:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            vm = hurwitz_function(params, mid)
            if vm is None:
                break
            if vm == 0:
                lo = hi = mid
                break
            if (vm > 0) == (vlo > 0):
                lo, vlo = mid, vm
            else:
                hi = mid
        root = 0.5 * (lo + hi)
        cp, _ = _charpoly(params, root)
        if cp.b1 > 0 and cp.b2 > 0 and cp.b3 > 0:
            roots.append(root)
    if not roots:
        return None
    beta = roots[0]
    cp, _ = _charpoly(params, beta)
    raw, phi1 = transversality(params, beta, fd_step)
    d1, d2, d3 = _coefficient_derivatives(params, beta, fd_step)
    sq = math.sqrt(cp.b2)
    return HopfPoint(
        beta_sharp=beta,
        psi0=sq,
        charpoly=cp,
        transversality_raw=raw,
        phi1_prime=phi1,
        bi_positive=(cp.b1 > 0, cp.b2 > 0, cp.b3 > 0),
        multiple_roots=len(roots) > 1,
        P1=-2.0 * cp.b2,
        P2=2.0 * cp.b1 * sq,
        R1=-d1 * cp.b2 + d3,
        R2=d2 * sq,
    )


@dataclass(frozen=True)
class Transformation:
    B: dict[str, float]
    c: np.ndarray               # 3x3 matrix C with columns Re U, Im U, V
    detC: float
    orientation_flipped: bool
    psi0: float
    b1: float
    xstar: Equilibrium
    transformed_jacobian: np.ndarray


def jacobian_entries(params: ParameterSet, xstar: Equilibrium) -> dict[str, float]:
    """The seven structurally nonzero Jacobian entries at X*."""
    J = jacobian(params, xstar.point)
    return {
        "B11": J[0, 0], "B13": J[0, 2], "B21": J[1, 0], "B22": J[1, 1],
        "B23": J[1, 2], "B31": J[2, 0], "B32": J[2, 1],
    }


def build_transformation(params: ParameterSet, beta_sharp: float) -> Transformation:
    """Eigenbasis change of variables X = X* + C (x, y, z) at the Hopf point.

    C's first two columns are the real and imaginary parts of the eigenvector
    for +i Psi0 (first component normalized to 1), the third the eigenvector
    for -b1. The second column is negated if needed so that the transformed
    linear part has dM2/dx = -dM1/dy = Psi0.
    """
    p = params.replace(beta=beta_sharp)
    xs = coexistence_equilibrium(p)
    if not xs.exists:
        raise HopfError("coexistence equilibrium does not exist at beta#")
    cp = charpoly_at_coexistence(p, xs)
    if not cp.b2 > 0:
        raise HopfError("b2 must be positive at a Hopf point")
    B = jacobian_entries(p, xs)
    psi0 = math.sqrt(cp.b2)
    b1 = cp.b1
    B11, B13, B31, B32 = B["B11"], B["B13"], B["B31"], B["B32"]
    den = B13 * B32
    if den == 0:
        raise HopfError("B13*B32 = 0: transformation undefined")
    c21 = -(B13 * B31 + psi0 ** 2) / den
    c22 = -B11 * psi0 / den
    c23 = (b1 * (B11 + b1) - B13 * B31) / den
    c31 = -B11 / B13
    c32 = psi0 / B13
    c33 = -(B11 + b1) / B13
    C = np.array([[1.0, 0.0, 1.0], [c21, c22, c23], [c31, c32, c33]])
    J = jacobian(p, xs.point)
    L = np.linalg.solve(C, J @ C)
    flipped = False
    if L[1, 0] < 0:
        C[:, 1] *= -1.0
        L = np.linalg.solve(C, J @ C)
        flipped = True
    det = C[1, 1] * (C[2, 2] - C[2, 0]) + C[2, 1] * (C[1, 0] - C[1, 2])
    pattern = np.array([[0.0, -psi0, 0.0], [psi0, 0.0, 0.0], [0.0, 0.0, L[2, 2]]])
    if np.max(np.abs(L - pattern)) > 1e-6 * psi0:
        raise HopfError("transformed Jacobian lacks the Hopf block pattern")
    return Transformation(B, C, det, flipped, psi0, b1, xs, L)


def transformed_field(params: ParameterSet, tr: Transformation, u) -> np.ndarray:
    """(M1, M2, M3) at transformed coordinates u = (x, y, z)."""
    X = np.asarray(tr.xstar.point) + tr.c @ np.asarray(u, dtype=float)
    return np.linalg.solve(tr.c, np.array(rhs(params, X)))


def transformed_hessians(params: ParameterSet, tr: Transformation) -> np.ndarray:
    """Second derivatives of M1, M2, M3 (constant: the field is quadratic).

    M(u) = C^-1 f(X* + C u), so d^2 M_k = sum_i (C^-1)_{ki} C^T H_i C.
    """
    H = hessians(params)
    Ci = np.linalg.inv(tr.c)
    HC = np.einsum("ai,nab,bj->nij", tr.c, H, tr.c)
    return np.einsum("kn,nij->kij", Ci, HC)


@dataclass(frozen=True)
class NormalFormReport:
    beta_sharp: float
    psi0: float
    B: dict[str, float]
    c: np.ndarray
    detC: float
    orientation_flipped: bool
    D1: float
    g20: complex
    g11: complex
    g02: complex
    g21: complex
    G21: complex
    G110: complex
    G101: complex
    h11: complex
    h20: complex
    w11: complex
    w20_detc: complex | None
    w20_standard: complex
    l1: complex
    S1: float
    S2: float
    S3: float
    p_prime0: float
    q_prime0: float
    # variants kept for comparison: g11 with the mixed-index layout, and the
    # resulting l1 with the |C|-based resolvent for w20
    g11_mixed: complex
    l1_mixed: complex | None
    side_condition_residual: float


def critical_pair(params: ParameterSet, beta: float) -> complex:
    res = _charpoly(params, beta)
    if res is None:
        raise HopfError(f"coexistence equilibrium does not exist at beta={beta}")
    roots = cubic_roots(res[0])
    pair = [z for z in roots if z.imag > 0]
    if not pair:
        raise HopfError(f"no complex eigenvalue pair at beta={beta}")
    return max(pair, key=lambda z: z.real)


def normal_form(params: ParameterSet, beta_sharp: float, fd_step: float = 1e-5) -> NormalFormReport:
    p = params.replace(beta=beta_sharp)
    tr = build_transformation(params, beta_sharp)
    M = transformed_hessians(p, tr)
    M1, M2, M3 = M
    X, Y, Z = 0, 1, 2
    psi0 = tr.psi0
    D1 = tr.transformed_jacobian[2, 2]
    if D1 == 0:
        raise HopfError("D1 = 0")

    g20 = 0.25 * complex(M1[X, X] - M1[Y, Y] + 2 * M2[X, Y], M2[X, X] - M2[Y, Y] - 2 * M1[X, Y])
    g11 = 0.25 * complex(M1[X, X] + M1[Y, Y], M2[X, X] + M2[Y, Y])
    g11_mixed = 0.25 * complex(M1[X, X] + M2[Y, Y], M2[X, X] + M1[Y, Y])
    g02 = 0.25 * complex(M1[X, X] - M1[Y, Y] - 2 * M2[X, Y], M2[X, X] - M2[Y, Y] + 2 * M1[X, Y])
    G21 = 0j    # third partials of a quadratic field vanish
    G110 = 0.5 * complex(M1[X, Z] + M2[Y, Z], M2[X, Z] - M1[Y, Z])
    G101 = 0.5 * complex(M1[X, Z] - M2[Y, Z], M2[X, Z] + M1[Y, Z])
    h11 = complex(0.25 * (M3[X, X] + M3[Y, Y]))
    h20 = 0.25 * complex(M3[X, X] - M3[Y, Y], -2 * M3[X, Y])
    w11 = -h11 / D1
    w20_standard = -h20 / (D1 - 2j * psi0)
    detc_den = tr.detC - 2j * psi0
    w20_detc = -h20 / detc_den if detc_den != 0 else None

    def lyapunov(g11_, w20_):
        g21 = G21 + 2 * G110 * w11 + G101 * w20_
        return (1j / (2 * psi0)) * (g20 * g11_ - 2 * abs(g11_) ** 2 - abs(g02) ** 2 / 3) + g21 / 2, g21

    l1, g21 = lyapunov(g11, w20_standard)
    l1_mixed = lyapunov(g11_mixed, w20_detc)[0] if w20_detc is not None else None

    step = fd_step * max(1.0, abs(beta_sharp))
    lam_hi = critical_pair(params, beta_sharp + step)
    lam_lo = critical_pair(params, beta_sharp - step)
    p_prime = (lam_hi.real - lam_lo.real) / (2 * step)
    q_prime = (lam_hi.imag - lam_lo.imag) / (2 * step)
    S1 = -l1.real / p_prime
    S2 = 2 * l1.real
    S3 = -(l1.imag + S1 * q_prime) / psi0

    B = tr.B
    side = (B["B11"] * B["B13"] * B["B31"] + B["B13"] * B["B21"] * B["B32"]
            + B["B22"] * B["B23"] * B["B32"] - B["B11"] * B["B22"] * (B["B11"] + B["B22"]))
    return NormalFormReport(
        beta_sharp=beta_sharp, psi0=psi0, B=B, c=tr.c, detC=tr.detC,
        orientation_flipped=tr.orientation_flipped, D1=D1,
        g20=g20, g11=g11, g02=g02, g21=g21, G21=G21, G110=G110, G101=G101,
        h11=h11, h20=h20, w11=w11, w20_detc=w20_detc, w20_standard=w20_standard,
        l1=l1, S1=S1, S2=S2, S3=S3, p_prime0=p_prime, q_prime0=q_prime,
        g11_mixed=g11_mixed, l1_mixed=l1_mixed, side_condition_residual=side,
    )


@dataclass(frozen=True)
class OrthogonalityReport:
    residual_1: float
    residual_2: float
    re_u_dot_v: float
    im_u_dot_v: float


def orthogonality_residuals(B: dict[str, float], psi0: float, b1: float) -> tuple[float, float]:
    B11, B13, B31, B32 = B["B11"], B["B13"], B["B31"], B["B32"]
    r1 = (psi0 ** 2 + B13 * B31) * (B13 * B31 - b1 * (B11 + b1)) + B11 * B32 ** 2 * (B11 + b1)
    r2 = B11 * (b1 * (B11 + b1) - B13 * B31) + B32 ** 2 * (B11 + b1)
    return r1, r2


def orthogonality_check(params: ParameterSet, beta_sharp: float) -> OrthogonalityReport:
    """Evaluate both stated orthogonality conditions together with the
    direct inner products of Re U and Im U with V (unflipped orientation)."""
    tr = build_transformation(params, beta_sharp)
    r1, r2 = orthogonality_residuals(tr.B, tr.psi0, tr.b1)
    C = tr.c.copy()
    if tr.orientation_flipped:
        C[:, 1] *= -1.0
    return OrthogonalityReport(r1, r2, float(C[:, 0] @ C[:, 2]), float(C[:, 1] @ C[:, 2]))
