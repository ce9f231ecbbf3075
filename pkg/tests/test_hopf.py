import math

import numpy as np
import pytest
import sympy as sp

from elkwolf.equilibria import coexistence_equilibrium
from elkwolf.hopf import (HopfError, build_transformation, critical_pair, hopf_locate,
                          hurwitz_function, normal_form, orthogonality_check,
                          orthogonality_residuals, transformed_field, transformed_hessians,
                          transversality)
from elkwolf.model import jacobian
from elkwolf.stability import charpoly_at_coexistence


@pytest.fixture(scope="module")
def hp():
    from elkwolf.model import default_parameters
    p = default_parameters().replace(gamma=0.11, xi=0.10)
    return p, hopf_locate(p, 0.05, 0.2)


def test_locates_beta_sharp(hp):
    p, h = hp
    assert h.beta_sharp == pytest.approx(0.1437, abs=1e-3)
    assert h.beta_sharp == pytest.approx(0.1437164602, abs=1e-8)
    assert all(h.bi_positive) and not h.multiple_roots
    assert abs(hurwitz_function(p, h.beta_sharp)) < 1e-9
    assert h.psi0 == pytest.approx(math.sqrt(h.charpoly.b2), rel=1e-15)


def test_no_hopf_on_baseline(base):
    assert hopf_locate(base, 0.01, 0.24) is None


def test_degenerate_interval(hopf_params):
    with pytest.raises(HopfError):
        hopf_locate(hopf_params, 0.1, 0.1)


def _symbolic_transversality(p, beta0):
    """d/dbeta (b3 - b1 b2) via sympy: invariants of the symbolic Jacobian and
    implicit differentiation of X*(beta)."""
    E, N, P, be = sp.symbols("E N P beta")
    vals = {k: sp.Float(v, 30) for k, v in p.as_dict().items() if k != "beta"}
    f = sp.Matrix([
        vals["alpha"] * E * (1 - E / vals["K"]) - vals["gamma"] * E * P - vals["q"] * vals["psi"] * E,
        be * N + vals["mu"] * E - vals["xi"] * N * P,
        vals["theta1"] * vals["gamma"] * E * P + vals["theta2"] * vals["xi"] * N * P - vals["eta"] * P,
    ])
    X = sp.Matrix([E, N, P])
    J = f.jacobian(X)
    lam = sp.Symbol("lam")
    poly = sp.Poly((lam * sp.eye(3) - J).det(), lam)
    _, b1, b2, b3 = poly.all_coeffs()
    g = b3 - b1 * b2
    pt = p.replace(beta=beta0)
    xs = coexistence_equilibrium(pt)
    subs = {E: xs.point.E, N: xs.point.N, P: xs.point.P, be: beta0}
    Jn = np.array(J.subs(subs).evalf(), dtype=float)
    dX = -np.linalg.solve(Jn, np.array(f.diff(be).subs(subs).evalf(), dtype=float).ravel())
    grad = [float(g.diff(v).subs(subs)) for v in (E, N, P)]
    return float(g.diff(be).subs(subs)) + float(np.dot(grad, dX))


def test_transversality_against_symbolic_oracle(hp):
    p, h = hp
    exact = _symbolic_transversality(p, h.beta_sharp)
    assert h.transversality_raw == pytest.approx(exact, rel=1e-6)
    assert exact == pytest.approx(0.005549, rel=1e-3)


def test_transversality_richardson(hp):
    p, h = hp
    exact = _symbolic_transversality(p, h.beta_sharp)
    e1 = transversality(p, h.beta_sharp, 2e-2)[0] - exact
    e2 = transversality(p, h.beta_sharp, 1e-2)[0] - exact
    assert e1 / e2 == pytest.approx(4.0, rel=0.05)


def test_phi1_prime_matches_real_part_speed(hp):
    p, h = hp
    assert math.copysign(1, h.phi1_prime) == math.copysign(1, h.transversality_raw)
    step = 1e-5
    fd = (critical_pair(p, h.beta_sharp + step).real
          - critical_pair(p, h.beta_sharp - step).real) / (2 * step)
    assert h.phi1_prime == pytest.approx(fd, rel=0.05)


def test_spectrum_at_hopf(hp):
    p, h = hp
    ph = p.replace(beta=h.beta_sharp)
    eigs = np.linalg.eigvals(jacobian(ph, coexistence_equilibrium(ph).point))
    pair = [z for z in eigs if abs(z.imag) > 0]
    real = [z for z in eigs if z.imag == 0]
    assert len(pair) == 2 and len(real) == 1
    assert max(abs(z.real) for z in pair) < 1e-8
    assert all(abs(abs(z.imag) - h.psi0) < 1e-8 * h.psi0 for z in pair)
    assert real[0].real == pytest.approx(-h.charpoly.b1, rel=1e-8)


def test_transformation_structure(hp):
    p, h = hp
    tr = build_transformation(p, h.beta_sharp)
    assert (tr.c[0, 0], tr.c[0, 1], tr.c[0, 2]) == (1.0, 0.0, 1.0)
    B = tr.B
    assert tr.psi0 ** 2 == pytest.approx(B["B11"] * B["B22"] - B["B13"] * B["B31"] - B["B23"] * B["B32"],
                                         rel=1e-8)
    L = tr.transformed_jacobian
    assert L[1, 0] == pytest.approx(tr.psi0, rel=1e-8)
    assert L[0, 1] == pytest.approx(-tr.psi0, rel=1e-8)
    assert L[2, 2] == pytest.approx(-tr.b1, rel=1e-8)
    assert tr.detC == pytest.approx(np.linalg.det(tr.c), rel=1e-10)
    assert tr.orientation_flipped


def test_origin_fixed_in_new_coordinates(hp):
    p, h = hp
    ph = p.replace(beta=h.beta_sharp)
    tr = build_transformation(p, h.beta_sharp)
    assert np.all(np.abs(transformed_field(ph, tr, (0, 0, 0))) < 1e-9 * (1 + np.abs(tr.xstar.point).max()))


def test_hessians_against_finite_differences(hp):
    from elkwolf.acceptance import hessian_fd_error
    p, h = hp
    tr = build_transformation(p, h.beta_sharp)
    ph = p.replace(beta=h.beta_sharp)
    assert hessian_fd_error(ph, tr, 1e-5) < 1e-5
    H = transformed_hessians(ph, tr)
    assert np.allclose(H, np.transpose(H, (0, 2, 1)))


def test_normal_form_signs(hp):
    p, h = hp
    nf = normal_form(p, h.beta_sharp)
    assert nf.G21 == 0
    assert nf.D1 == pytest.approx(-h.charpoly.b1, rel=1e-8)
    assert nf.S1 > 0 and nf.S2 < 0
    assert nf.l1.real < 0
    assert nf.p_prime0 == pytest.approx(h.phi1_prime, rel=1e-3)
    assert nf.side_condition_residual < 1e-9
    # orientation changes Im l1 only
    assert nf.l1_mixed is not None and nf.w20_detc is not None


def test_g_coefficients_from_hessians(hp):
    p, h = hp
    nf = normal_form(p, h.beta_sharp)
    ph = p.replace(beta=h.beta_sharp)
    H = transformed_hessians(ph, build_transformation(p, h.beta_sharp))
    M1, M2 = H[0], H[1]
    g11 = 0.25 * complex(M1[0, 0] + M1[1, 1], M2[0, 0] + M2[1, 1])
    g20 = 0.25 * complex(M1[0, 0] - M1[1, 1] + 2 * M2[0, 1], M2[0, 0] - M2[1, 1] - 2 * M1[0, 1])
    assert nf.g11 == pytest.approx(g11, rel=1e-10)
    assert nf.g20 == pytest.approx(g20, rel=1e-10)
    assert nf.g02 == pytest.approx(0.25 * complex(M1[0, 0] - M1[1, 1] - 2 * M2[0, 1],
                                                  M2[0, 0] - M2[1, 1] + 2 * M1[0, 1]), rel=1e-10)


def test_orthogonality_reported(hp):
    p, h = hp
    rep = orthogonality_check(p, h.beta_sharp)
    assert all(math.isfinite(v) for v in (rep.residual_1, rep.residual_2))
    tr = build_transformation(p, h.beta_sharp)
    C = tr.c.copy()
    C[:, 1] *= -1
    assert rep.re_u_dot_v == pytest.approx(float(np.dot(C[:, 0], C[:, 2])), rel=1e-12)
    assert rep.im_u_dot_v == pytest.approx(float(np.dot(C[:, 1], C[:, 2])), rel=1e-12)


def test_orthogonality_residuals_vanish_on_degenerate_input():
    b1, B11 = 0.2, 0.1
    B = {"B11": B11, "B13": 1.0, "B31": b1 * (B11 + b1), "B32": 0.0}
    assert orthogonality_residuals(B, 0.3, b1) == (0.0, 0.0)


def test_charpoly_consistency_at_hopf(hp):
    p, h = hp
    ph = p.replace(beta=h.beta_sharp)
    cp = charpoly_at_coexistence(ph, coexistence_equilibrium(ph))
    assert cp.b1 * cp.b2 == pytest.approx(cp.b3, rel=1e-7)


def test_amplitude_grows_like_square_root(hp):
    from elkwolf.acceptance import limit_cycle_amplitudes, linear_fit_r2
    p, h = hp
    offsets = np.array([0.001, 0.002, 0.003, 0.004, 0.005])
    amps = limit_cycle_amplitudes(p, h.beta_sharp, offsets)
    slope, r2 = linear_fit_r2(offsets, amps ** 2)
    assert slope > 0 and r2 > 0.9
