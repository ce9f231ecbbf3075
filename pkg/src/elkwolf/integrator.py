"""Dormand-Prince 5(4) integration with dense output and attractor features."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .model import ParameterSet, State

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# difference between 5th- and 4th-order weights
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40
# continuous extension (Hairer-Wanner dense output)
D1, D3, D4, D5, D6, D7 = (
    -12715105075 / 11282082432, 87487479700 / 32700410799, -10690763975 / 1880347072,
    701980252875 / 199316789632, -1453857185 / 822651844, 69997945 / 29380423,
)

SAFETY = 0.9
MIN_FACTOR, MAX_FACTOR = 0.2, 5.0
# proportional-integral step control exponents for an order-4 error estimate
K_I, K_P = 0.7 / 5, 0.4 / 5


class IntegrationError(RuntimeError):
    """Raised on step-size underflow or a positivity violation."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t={time!r}")
        self.time = time


@dataclass(frozen=True)
class SolverStats:
    steps: int
    rejected: int
    rhs_evals: int
    rel_tol: float
    abs_tol: float


@dataclass(frozen=True)
class Orbit:
    times: np.ndarray
    states: np.ndarray          # shape (len(times), dim)
    solver_stats: SolverStats = field(repr=False)

    def __len__(self):
        return len(self.times)

    def state(self, i: int) -> State:
        return State(*(float(v) for v in self.states[i]))

    @property
    def final(self) -> State:
        return self.state(-1)


def solve(fun: Callable[[float, Sequence[float]], Sequence[float]], y0: Sequence[float],
          t_eval: Sequence[float], rel_tol: float = 1e-8, abs_tol: float = 1e-10,
          min_value: float | None = None, first_step: float | None = None,
          max_steps: int = 10_000_000) -> tuple[np.ndarray, SolverStats]:
    """Integrate ``y' = fun(t, y)`` from ``t_eval[0]`` to ``t_eval[-1]``.

    Returns the dense-output states at every instant in ``t_eval`` (the first
    row is ``y0`` exactly). If ``min_value`` is given, any accepted step with a
    component below it raises :class:`IntegrationError`.
    """
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.ndim != 1 or len(t_eval) < 1 or np.any(np.diff(t_eval) <= 0):
        raise ValueError("t_eval must be a strictly increasing 1-d sequence")
    n = len(y0)
    out = np.empty((len(t_eval), n))
    y = [float(v) for v in y0]
    out[0] = y
    t = float(t_eval[0])
    t_end = float(t_eval[-1])
    k1 = list(fun(t, y))
    evals = 1
    steps = rejected = 0
    if len(t_eval) == 1:
        return out, SolverStats(0, 0, evals, rel_tol, abs_tol)

    if first_step is None:
        # Hairer's starting step heuristic, simplified
        d0 = max(abs(v) / (abs_tol + rel_tol * abs(v)) for v in y)
        d1 = max(abs(k) / (abs_tol + rel_tol * abs(v)) for k, v in zip(k1, y))
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h = min(h, t_end - t)
    else:
        h = first_step
    err_prev = 1e-4
    nxt = 1
    while nxt < len(t_eval):
        if steps + rejected >= max_steps:
            raise IntegrationError("maximum number of steps exceeded", t)
        if h < 1e-14 * max(1.0, abs(t)):
            raise IntegrationError("step size underflow", t)
        if t + h > t_end:
            h = t_end - t
        k2 = fun(t + C2 * h, [yi + h * A21 * a for yi, a in zip(y, k1)])
        k3 = fun(t + C3 * h, [yi + h * (A31 * a + A32 * b) for yi, a, b in zip(y, k1, k2)])
        k4 = fun(t + C4 * h, [yi + h * (A41 * a + A42 * b + A43 * c)
                              for yi, a, b, c in zip(y, k1, k2, k3)])
        k5 = fun(t + C5 * h, [yi + h * (A51 * a + A52 * b + A53 * c + A54 * d)
                              for yi, a, b, c, d in zip(y, k1, k2, k3, k4)])
        k6 = fun(t + h, [yi + h * (A61 * a + A62 * b + A63 * c + A64 * d + A65 * e)
                         for yi, a, b, c, d, e in zip(y, k1, k2, k3, k4, k5)])
        y_new = [yi + h * (A71 * a + A73 * c + A74 * d + A75 * e + A76 * f)
                 for yi, a, c, d, e, f in zip(y, k1, k3, k4, k5, k6)]
        k7 = fun(t + h, y_new)
        evals += 6
        err = 0.0
        for yi, yn, a, c, d, e, f, g in zip(y, y_new, k1, k3, k4, k5, k6, k7):
            local = h * (E1 * a + E3 * c + E4 * d + E5 * e + E6 * f + E7 * g)
            scale = abs_tol + rel_tol * max(abs(yi), abs(yn))
            err = max(err, abs(local) / scale)
        if not math.isfinite(err):
            rejected += 1
            h *= MIN_FACTOR
            continue
        if err > 1.0:
            rejected += 1
            h *= max(MIN_FACTOR, SAFETY * err ** -0.2)
            continue

        t_new = t + h
        if t_new >= t_end or t_end - t_new <= 1e-13 * max(1.0, abs(t_end)):
            t_new = t_end
        if min_value is not None and min(y_new) < min_value:
            raise IntegrationError(
                f"positivity violation (component {min(y_new)!r} < {min_value!r})", t_new)
        # dense output on [t, t_new]
        while nxt < len(t_eval) and t_eval[nxt] <= t_new:
            theta = (t_eval[nxt] - t) / h
            th1 = 1.0 - theta
            for i, (yi, yn, a, c, d, e, f, g) in enumerate(zip(y, y_new, k1, k3, k4, k5, k6, k7)):
                r2 = yn - yi
                r3 = h * a - r2
                r4 = r2 - h * g - r3
                r5 = h * (D1 * a + D3 * c + D4 * d + D5 * e + D6 * f + D7 * g)
                out[nxt, i] = yi + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5)))
            if t_eval[nxt] == t_new:
                out[nxt] = y_new
            nxt += 1
        steps += 1
        t, y, k1 = t_new, y_new, list(k7)
        factor = SAFETY * max(err, 1e-10) ** -K_I * err_prev ** K_P
        h *= min(MAX_FACTOR, max(MIN_FACTOR, factor))
        err_prev = max(err, 1e-4)
    if min_value is not None and out.min() < min_value:
        i = int(np.argmin(out.min(axis=1)))
        raise IntegrationError("positivity violation in dense output", float(t_eval[i]))
    return out, SolverStats(steps, rejected, evals, rel_tol, abs_tol)


def integrate(params: ParameterSet, init, t_end: float, sample_count: int,
              rel_tol: float = 1e-8, abs_tol: float = 1e-10) -> Orbit:
    """Integrate the elk-wolf system from ``init`` and sample it at
    ``sample_count`` equally spaced instants on [0, t_end]."""
    if not t_end > 0:
        raise ValueError(f"t_end must be > 0, got {t_end!r}")
    if sample_count < 2:
        raise ValueError("sample_count must be >= 2")
    for tol in (rel_tol, abs_tol):
        if not 0 < tol <= 1e-2:
            raise ValueError(f"tolerances must lie in (0, 1e-2], got {tol!r}")
    if min(init) < 0:
        raise ValueError(f"initial state must be nonnegative, got {tuple(init)!r}")
    p = params
    # bind scalars once; the field is evaluated ~6 times per step
    al, K, g, qpsi, be, mu, xi = p.alpha, p.K, p.gamma, p.q * p.psi, p.beta, p.mu, p.xi
    t1g, t2xi, eta = p.theta1 * p.gamma, p.theta2 * p.xi, p.eta

    def fun(t, s):
        E, N, P = s
        return (al * E * (1.0 - E / K) - g * E * P - qpsi * E,
                be * N + mu * E - xi * N * P,
                t1g * E * P + t2xi * N * P - eta * P)

    times = np.linspace(0.0, t_end, sample_count)
    states, stats = solve(fun, [float(v) for v in init], times, rel_tol, abs_tol,
                          min_value=-10.0 * abs_tol)
    return Orbit(times, states, stats)


@dataclass(frozen=True)
class Extrema:
    minima: np.ndarray
    maxima: np.ndarray
    terminal: float


def attractor_extrema(orbit: Orbit, transient_fraction: float = 0.7,
                      flat_tol: float = 1e-9) -> dict[str, Extrema]:
    """Local minima and maxima of each variable after discarding a transient.

    Extrema are strict three-point extrema of the sampled series. A variable
    whose retained span is below ``flat_tol * (1 + |terminal|)`` is treated as
    settled on an equilibrium and yields empty sets.
    """
    if not 0 <= transient_fraction < 1:
        raise ValueError("transient_fraction must lie in [0, 1)")
    start = int(math.floor(transient_fraction * len(orbit)))
    kept = orbit.states[start:]
    if len(kept) < 3:
        raise ValueError("need at least 3 retained samples")
    result = {}
    for j, name in enumerate(("E", "N", "P")):
        x = kept[:, j]
        terminal = float(x[-1])
        if x.max() - x.min() <= flat_tol * (1.0 + abs(terminal)):
            empty = np.empty(0)
            result[name] = Extrema(empty, empty, terminal)
            continue
        mid, left, right = x[1:-1], x[:-2], x[2:]
        result[name] = Extrema(
            minima=mid[(mid < left) & (mid < right)].copy(),
            maxima=mid[(mid > left) & (mid > right)].copy(),
            terminal=terminal,
        )
    return result


def converged_to(orbit: Orbit, target, rel_tol: float = 1e-2) -> bool:
    """True iff every sample in the final 10% is within ``rel_tol`` of
    ``target``, componentwise and relative to each target component."""
    n = len(orbit)
    tail = orbit.states[n - max(1, int(math.ceil(0.1 * n))):]
    target = np.asarray(target, dtype=float)
    scale = np.maximum(np.abs(target), 1e-300)
    return bool(np.all(np.abs(tail - target) <= rel_tol * scale))


def first_integral_lv(params: ParameterSet, N, P):
    """Conserved quantity of the E = 0 (Lotka-Volterra) subsystem."""
    p = params
    return p.xi * P + p.theta2 * p.xi * N - p.beta * np.log(P) - p.eta * np.log(N)
