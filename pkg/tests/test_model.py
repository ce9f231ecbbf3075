import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elkwolf.model import (PARAMETER_NAMES, ParameterSet, State, boundedness_check,
                           default_parameters, hessians, jacobian, random_parameters, rhs)


def test_defaults_match_table():
    p = default_parameters()
    assert p.as_dict() == dict(alpha=0.25, K=1000.0, gamma=0.05, q=0.02, psi=0.01, beta=0.16,
                               mu=0.1, xi=0.1, theta1=0.001, theta2=0.01, eta=0.3)
    assert tuple(p.as_dict()) == PARAMETER_NAMES


@pytest.mark.parametrize("field,value", [("gamma", 0.0), ("eta", -1.0), ("K", 0.5),
                                         ("theta1", 1.5), ("theta2", 2.0), ("alpha", math.nan)])
def test_invalid_parameters_rejected(field, value):
    with pytest.raises(ValueError):
        default_parameters().replace(**{field: value})


def test_array_round_trip():
    p = default_parameters()
    assert ParameterSet.from_array(p.as_array()) == p


def test_rhs_at_origin_is_zero(base):
    assert rhs(base, (0, 0, 0)) == (0.0, 0.0, 0.0)


def test_rhs_hand_value(base):
    # E' = 0.25*100*0.9 - 0.05*100*2 - 0.0002*100; N' = 0.16*200 + 10 - 0.1*200*2;
    # P' = 0.001*0.05*100*2 + 0.01*0.1*200*2 - 0.3*2
    dE, dN, dP = rhs(base, State(100.0, 200.0, 2.0))
    assert dE == pytest.approx(22.5 - 10.0 - 0.02)
    assert dN == pytest.approx(32.0 + 10.0 - 40.0)
    assert dP == pytest.approx(0.01 + 0.4 - 0.6)


def _fd_jacobian(p, x, h=0.5):
    # rhs is quadratic, so central differences are exact up to rounding
    J = np.empty((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        J[:, j] = (np.array(rhs(p, x + e)) - np.array(rhs(p, x - e))) / (2 * h)
    return J


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.tuples(*[st.floats(0.1, 1500)] * 3))
def test_jacobian_matches_finite_differences(seed, x):
    p = random_parameters(np.random.default_rng(seed))
    x = np.array(x)
    J = jacobian(p, x)
    assert np.allclose(J, _fd_jacobian(p, x), rtol=1e-9, atol=1e-12 * np.abs(J).max())


def test_jacobian_second_row_has_beta_term(base):
    J = jacobian(base, (10.0, 20.0, 3.0))
    assert J[1, 1] == pytest.approx(base.beta - base.xi * 3.0)


def test_hessians_match_jacobian_differences(base):
    H = hessians(base)
    x = np.array([300.0, 250.0, 4.0])
    for k in range(3):
        e = np.zeros(3)
        e[k] = 1.0
        # rhs is quadratic, so the Jacobian is affine and differences are exact
        assert np.allclose(jacobian(base, x + e) - jacobian(base, x), H[:, :, k], atol=1e-12)
        assert np.allclose(H[:, k, :], H[:, :, k])


def test_boundedness_table_values(base):
    rep = boundedness_check(base)
    assert rep.condition_holds
    assert rep.window_margin == pytest.approx(0.25 - 0.16)
    assert rep.n_sharp == pytest.approx(250.0)
    assert rep.aux_A == pytest.approx(1.0)
    assert rep.bound_P == pytest.approx(1 / 0.09)
    assert rep.bound_E == base.K


def test_boundedness_fails_when_beta_too_large(base):
    rep = boundedness_check(base.replace(beta=0.26))
    assert not rep.condition_holds
    assert rep.bound_N is None and rep.bound_P is None


def test_random_parameters_valid_and_seeded():
    a = random_parameters(np.random.default_rng(3))
    b = random_parameters(np.random.default_rng(3))
    assert a == b
    for _ in range(200):
        p = random_parameters(np.random.default_rng(_))
        assert p.theta1 <= 1 and p.K >= 1
