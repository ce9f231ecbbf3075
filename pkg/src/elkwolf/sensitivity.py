"""Latin hypercube sampling and partial rank correlation (PRCC) sensitivity."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .integrator import IntegrationError, integrate
from .model import PARAMETER_NAMES, ParameterSet, State, boundedness_check, default_parameters

OUTPUTS = ("E", "N", "P")


def lhs_sample(ranges, n: int, seed: int) -> np.ndarray:
    """Latin hypercube sample of shape (n, k) over per-parameter [lo, hi] ranges.

    Each column places exactly one value, uniformly, in each of n equal
    strata; columns use independent permutations.
    """
    ranges = np.asarray(ranges, dtype=float)
    if ranges.ndim != 2 or ranges.shape[1] != 2:
        raise ValueError("ranges must be a sequence of (lo, hi) pairs")
    if np.any(~(ranges[:, 0] < ranges[:, 1])):
        raise ValueError("every range needs lo < hi")
    if n < 2:
        raise ValueError("n must be >= 2")
    k = len(ranges)
    children = np.random.SeedSequence(seed).spawn(k)
    out = np.empty((n, k))
    for j, ss in enumerate(children):
        rng = np.random.default_rng(ss)
        u = (rng.permutation(n) + rng.random(n)) / n
        lo, hi = ranges[j]
        out[:, j] = lo + (hi - lo) * u
    return out


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, 10_000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, dof: float) -> float:
    """Two-sided p-value of Student's t with ``dof`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    return betainc_regularized(dof / 2.0, 0.5, dof / (dof + t * t))


def rank_transform(x: np.ndarray) -> np.ndarray:
    """Average ranks (ties share the mean rank), column-wise for 2-d input."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return rankdata(x)
    return np.column_stack([rankdata(col) for col in x.T])


@dataclass(frozen=True)
class PrccResult:
    prcc: np.ndarray
    t: np.ndarray
    p: np.ndarray
    dof: int


def _residualize(design: np.ndarray, target: np.ndarray) -> np.ndarray:
    coef, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < design.shape[1]:
        raise np.linalg.LinAlgError("singular regression: collinear ranks")
    return target - design @ coef


def prcc(samples: np.ndarray, output: np.ndarray) -> PrccResult:
    """Partial rank correlation of each sample column with ``output``.

    For column j, the ranks of x_j and of the output are each regressed on
    the ranks of the other columns (with intercept) and the residuals are
    correlated.
    """
    samples = np.asarray(samples, dtype=float)
    output = np.asarray(output, dtype=float)
    n, k = samples.shape
    if output.shape != (n,):
        raise ValueError("output length must match the number of samples")
    if n <= k + 2:
        raise ValueError(f"need n > k + 2 samples (n={n}, k={k})")
    ry = rank_transform(output)
    if np.ptp(ry) == 0:
        raise ValueError("output is constant: correlation undefined")
    R = rank_transform(samples)
    dof = n - 2 - (k - 1)
    r = np.empty(k)
    for j in range(k):
        design = np.column_stack([np.ones(n), np.delete(R, j, axis=1)])
        ex = _residualize(design, R[:, j])
        ey = _residualize(design, ry)
        denom = math.sqrt(float(ex @ ex) * float(ey @ ey))
        r[j] = 0.0 if denom == 0 else float(np.clip(ex @ ey / denom, -1.0, 1.0))
    with np.errstate(divide="ignore"):
        t = np.where(np.abs(r) < 1.0, r * np.sqrt(dof / np.maximum(1.0 - r * r, 0.0)),
                     np.copysign(np.inf, r))
    p = np.array([t_two_sided_p(float(tv), dof) for tv in t])
    return PrccResult(r, t, p, dof)


@dataclass(frozen=True)
class PrccExperiment:
    baseline: ParameterSet = field(default_factory=default_parameters)
    varied_names: tuple[str, ...] = PARAMETER_NAMES
    variation: float = 1.0
    # "width": range width equals variation*baseline, centred on it
    # "halfwidth": [b(1 - variation), b(1 + variation)]
    interpretation: str = "width"
    n_samples: int = 200
    time_points: int = 400
    horizon: float = 400.0
    seed: int = 11
    outputs: tuple[str, ...] = OUTPUTS
    initial_state: State = State(340.0, 380.0, 4.0)
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10

    def __post_init__(self):
        k = len(self.varied_names)
        unknown = set(self.varied_names) - set(PARAMETER_NAMES)
        if unknown:
            raise ValueError(f"unknown parameter names: {sorted(unknown)}")
        if not self.n_samples > k + 2:
            raise ValueError(f"n_samples must exceed {k + 2} (t-statistic degrees of freedom)")
        if not 0 < self.variation <= 1:
            raise ValueError("variation must lie in (0, 1]")
        if self.time_points < 1:
            raise ValueError("time_points must be >= 1")
        if self.interpretation not in ("width", "halfwidth"):
            raise ValueError("interpretation must be 'width' or 'halfwidth'")
        if set(self.outputs) - set(OUTPUTS):
            raise ValueError(f"outputs must be drawn from {OUTPUTS}")

    def ranges(self) -> np.ndarray:
        base = np.array([getattr(self.baseline, n) for n in self.varied_names])
        half = self.variation / 2 if self.interpretation == "width" else self.variation
        lo = np.maximum(base * (1.0 - half), 1e-12)
        hi = base * (1.0 + half)
        for j, name in enumerate(self.varied_names):
            if name == "K":
                lo[j] = max(lo[j], 1.0)
        return np.column_stack([lo, hi])

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.time_points + 1)[1:]


@dataclass(frozen=True)
class PrccTable:
    parameters: tuple[str, ...]
    outputs: tuple[str, ...]
    times: np.ndarray
    prcc: np.ndarray            # shape (n_params, n_outputs, n_times)
    t: np.ndarray
    p: np.ndarray
    dof: int
    dropped: int
    unbounded_samples: np.ndarray   # per retained sample: boundedness condition fails

    def final(self, parameter: str, output: str) -> tuple[float, float]:
        i, j = self.parameters.index(parameter), self.outputs.index(output)
        return float(self.prcc[i, j, -1]), float(self.p[i, j, -1])

    def significant(self, parameter: str, output: str, level: float = 0.05) -> bool:
        return self.final(parameter, output)[1] < level

    def significant_parameters(self, level: float = 0.05) -> set[str]:
        """Parameters significant for at least one output at the final time."""
        final_p = self.p[:, :, -1]
        return {n for n, row in zip(self.parameters, final_p) if np.any(row < level)}

    def rows(self):
        """(parameter, output, time, prcc, t, p) ordered by parameter, output, time."""
        for i, par in enumerate(self.parameters):
            for j, out in enumerate(self.outputs):
                for k, tm in enumerate(self.times):
                    yield (par, out, float(tm), float(self.prcc[i, j, k]),
                           float(self.t[i, j, k]), float(self.p[i, j, k]))


def _simulate_sample(args):
    exp, values = args
    params = exp.baseline.replace(**dict(zip(exp.varied_names, (float(v) for v in values))))
    try:
        orbit = integrate(params, exp.initial_state, exp.horizon, exp.time_points + 1,
                          exp.rel_tol, exp.abs_tol)
    except IntegrationError:
        return None, False
    idx = [OUTPUTS.index(o) for o in exp.outputs]
    return orbit.states[1:, idx], not boundedness_check(params).condition_holds


def run_prcc_experiment(exp: PrccExperiment, workers: int = 1) -> PrccTable:
    """Sample parameters by LHS, simulate each, and compute PRCC at every
    output time. Results are independent of ``workers``."""
    X = lhs_sample(exp.ranges(), exp.n_samples, exp.seed)
    jobs = [(exp, row) for row in X]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_simulate_sample, jobs, chunksize=8))
    else:
        results = [_simulate_sample(j) for j in jobs]
    keep = [i for i, (y, _) in enumerate(results) if y is not None]
    dropped = len(results) - len(keep)
    k = len(exp.varied_names)
    if len(keep) <= k + 2:
        raise ValueError(f"only {len(keep)} successful samples; need more than {k + 2}")
    Xk = X[keep]
    Y = np.stack([results[i][0] for i in keep])      # (n, times, outputs)
    unbounded = np.array([results[i][1] for i in keep])
    nt, no = Y.shape[1], Y.shape[2]
    r = np.empty((k, no, nt))
    t = np.empty_like(r)
    p = np.empty_like(r)
    dof = 0
    for j in range(no):
        for s in range(nt):
            res = prcc(Xk, Y[:, s, j])
            r[:, j, s], t[:, j, s], p[:, j, s], dof = res.prcc, res.t, res.p, res.dof
    return PrccTable(tuple(exp.varied_names), tuple(exp.outputs), exp.times(), r, t, p, dof,
                     dropped, unbounded)
