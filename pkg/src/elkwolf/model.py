"""Elk-wolf refuge model: parameters, state, vector field and Jacobian."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from typing import NamedTuple

import numpy as np

PARAMETER_NAMES = (
    "alpha", "K", "gamma", "q", "psi", "beta",
    "mu", "xi", "theta1", "theta2", "eta",
)


@dataclass(frozen=True)
class ParameterSet:
    """The eleven model parameters.

    alpha, beta, q, mu and eta are rates (1/time); gamma and xi are capture
    rates (1/(individuals*time)); K is the Banff carrying capacity; psi is a
    dimensionless relocation effort and theta1, theta2 are conversion
    efficiencies.
    """

    alpha: float = 0.25
    K: float = 1000.0
    gamma: float = 0.05
    q: float = 0.02
    psi: float = 0.01
    beta: float = 0.16
    mu: float = 0.10
    xi: float = 0.10
    theta1: float = 0.001
    theta2: float = 0.01
    eta: float = 0.30

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise TypeError(f"parameter {f.name} must be a real number, got {value!r}")
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"parameter {f.name} must be finite and > 0, got {value!r}")
            object.__setattr__(self, f.name, float(value))
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K!r}")
        if self.theta1 > 1 or self.theta2 > 1:
            raise ValueError("conversion efficiencies theta1, theta2 must be <= 1")

    def replace(self, **changes) -> "ParameterSet":
        return replace(self, **changes)

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAMETER_NAMES])

    @classmethod
    def from_array(cls, values) -> "ParameterSet":
        return cls(**dict(zip(PARAMETER_NAMES, (float(v) for v in values))))


def default_parameters() -> ParameterSet:
    """Baseline parameter values used throughout the analysis."""
    return ParameterSet()


class State(NamedTuple):
    """Population densities (E, N, P): Banff elk, Bow Valley elk, wolves."""

    E: float
    N: float
    P: float


def rhs(params: ParameterSet, s) -> tuple[float, float, float]:
    """Right-hand side of the elk-wolf system at state ``s``."""
    E, N, P = s
    p = params
    dE = p.alpha * E * (1.0 - E / p.K) - p.gamma * E * P - p.q * p.psi * E
    dN = p.beta * N + p.mu * E - p.xi * N * P
    dP = p.theta1 * p.gamma * E * P + p.theta2 * p.xi * N * P - p.eta * P
    return dE, dN, dP


def jacobian(params: ParameterSet, s) -> np.ndarray:
    """3x3 matrix of partial derivatives of :func:`rhs` at ``s``."""
    E, N, P = s
    p = params
    return np.array([
        [p.alpha - 2.0 * p.alpha * E / p.K - p.gamma * P - p.q * p.psi, 0.0, -p.gamma * E],
        [p.mu, p.beta - p.xi * P, -p.xi * N],
        [p.theta1 * p.gamma * P, p.theta2 * p.xi * P,
         p.theta1 * p.gamma * E + p.theta2 * p.xi * N - p.eta],
    ])


def hessians(params: ParameterSet) -> np.ndarray:
    """Constant second-derivative tensor H[i] = d^2 f_i / dX^2 of the quadratic field."""
    p = params
    H = np.zeros((3, 3, 3))
    H[0, 0, 0] = -2.0 * p.alpha / p.K
    H[0, 0, 2] = H[0, 2, 0] = -p.gamma
    H[1, 1, 2] = H[1, 2, 1] = -p.xi
    H[2, 0, 2] = H[2, 2, 0] = p.theta1 * p.gamma
    H[2, 1, 2] = H[2, 2, 1] = p.theta2 * p.xi
    return H


@dataclass(frozen=True)
class BoundednessReport:
    condition_holds: bool
    beta_margin: float          # beta itself; must be > 0
    window_margin: float        # (eta - theta1*gamma*K) - beta; must be > 0
    n_sharp: float | None
    bound_E: float
    bound_N: float | None
    bound_P: float | None
    aux_A: float
    aux_B: float


def boundedness_check(params: ParameterSet) -> BoundednessReport:
    """Evaluate the sufficient condition 0 < beta < eta - theta1*gamma*K.

    Bounds on N and P (and the threshold N#) are ``None`` whenever they are
    not defined by the inequality.
    """
    p = params
    excess = p.eta - p.theta1 * p.gamma * p.K
    aux_A = p.theta2 * p.mu * p.K
    aux_B = excess - p.beta
    holds = 0.0 < p.beta < excess
    n_sharp = excess / (p.theta2 * p.xi) if excess > 0 else None
    bound_N = p.mu * p.K / aux_B if holds else None
    bound_P = aux_A / aux_B if holds else None
    return BoundednessReport(
        condition_holds=holds,
        beta_margin=p.beta,
        window_margin=aux_B,
        n_sharp=n_sharp,
        bound_E=p.K,
        bound_N=bound_N,
        bound_P=bound_P,
        aux_A=aux_A,
        aux_B=aux_B,
    )


def random_parameters(rng: np.random.Generator, spread: float = 3.0,
                      baseline: ParameterSet | None = None) -> ParameterSet:
    """Draw a parameter set log-uniformly within a factor ``spread`` of ``baseline``.

    Conversion efficiencies are capped at 1 and K at >= 1 so the draw is
    always a valid :class:`ParameterSet`.
    """
    base = (baseline or default_parameters()).as_array()
    factors = np.exp(rng.uniform(-math.log(spread), math.log(spread), size=base.size))
    values = dict(zip(PARAMETER_NAMES, base * factors))
    values["theta1"] = min(values["theta1"], 1.0)
    values["theta2"] = min(values["theta2"], 1.0)
    values["K"] = max(values["K"], 1.0)
    return ParameterSet(**values)
