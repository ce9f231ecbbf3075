"""Closed-form equilibria X0, X1 and the coexistence equilibrium X*."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .model import ParameterSet, State


class EquilibriumKind(enum.Enum):
    EXTINCTION = "Extinction"
    NO_BANFF_ELK = "NoBanffElk"
    COEXISTENCE = "Coexistence"


@dataclass(frozen=True)
class CoexistenceAux:
    m1: float
    m2: float
    n_low: float
    n_high: float


@dataclass(frozen=True)
class Equilibrium:
    kind: EquilibriumKind
    point: State
    exists: bool
    # (N* - n_low, n_high - N*); both positive iff the coexistence point exists
    existence_margin: tuple[float, float] | None = None
    aux: CoexistenceAux | None = None


def extinction_equilibrium(params: ParameterSet) -> Equilibrium:
    return Equilibrium(EquilibriumKind.EXTINCTION, State(0.0, 0.0, 0.0), True)


def boundary_equilibrium_x1(params: ParameterSet) -> Equilibrium:
    """Equilibrium without Banff townsite elk, (0, eta/(theta2 xi), beta/xi)."""
    p = params
    point = State(0.0, p.eta / (p.theta2 * p.xi), p.beta / p.xi)
    return Equilibrium(EquilibriumKind.NO_BANFF_ELK, point, True)


def coexistence_aux(params: ParameterSet) -> CoexistenceAux:
    p = params
    r = p.alpha - p.q * p.psi
    denom = p.alpha * p.theta2 * p.xi ** 2
    m1 = (p.alpha * p.eta * p.xi
          + p.theta1 * p.gamma * p.K * (p.beta * p.gamma + p.xi * p.q * p.psi - p.alpha * p.xi)
          - p.theta2 * p.gamma * p.K * p.mu * p.xi) / denom
    m2 = p.K * p.mu * p.eta * p.gamma / denom
    n_high = p.eta / (p.theta2 * p.xi)
    n_low = n_high - p.K * p.theta1 * p.gamma * r / (p.alpha * p.theta2 * p.xi)
    return CoexistenceAux(m1=m1, m2=m2, n_low=n_low, n_high=n_high)


def positive_root(m1: float, m2: float) -> float:
    """Positive root of N^2 - m1 N - m2 = 0 (m2 > 0), free of cancellation."""
    disc = math.sqrt(m1 * m1 + 4.0 * m2)
    if m1 >= 0:
        return 0.5 * (m1 + disc)
    return 2.0 * m2 / (disc - m1)


def coexistence_equilibrium(params: ParameterSet) -> Equilibrium:
    """Coexistence equilibrium with its existence window.

    Non-existence is reported through ``exists=False``; the point is still
    returned so callers can inspect the signs of E* and P*.
    """
    p = params
    aux = coexistence_aux(p)
    n = positive_root(aux.m1, aux.m2)
    deficit = p.eta - p.theta2 * p.xi * n
    e = deficit / (p.theta1 * p.gamma)
    prey = (p.theta1 * p.gamma * p.K * (p.alpha - p.q * p.psi) - p.alpha * deficit) / (
        p.theta1 * p.gamma ** 2 * p.K)
    margin = (n - aux.n_low, aux.n_high - n)
    exists = margin[0] > 0 and margin[1] > 0
    return Equilibrium(EquilibriumKind.COEXISTENCE, State(e, n, prey), exists, margin, aux)


def enumerate_equilibria(params: ParameterSet) -> list[Equilibrium]:
    return [
        extinction_equilibrium(params),
        boundary_equilibrium_x1(params),
        coexistence_equilibrium(params),
    ]
