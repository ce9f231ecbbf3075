"""Regression battery of reproducibility criteria for the elk-wolf analysis.

Each criterion runs at its fixed tolerance and runtime budget and returns a
:class:`CriterionResult`; ``run_all`` drives them for the ``selftest``
subcommand and the test-suite.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .equilibria import boundary_equilibrium_x1, coexistence_equilibrium
from .hopf import build_transformation, hopf_locate, normal_form, transformed_field, transformed_hessians
from .integrator import attractor_extrema, converged_to, first_integral_lv, integrate
from .model import boundedness_check, default_parameters, jacobian, random_parameters, rhs
from .scan import CellClass, biparametric_scan, default_axis
from .sensitivity import PrccExperiment, lhs_sample, prcc, run_prcc_experiment
from .stability import (charpoly_at_coexistence, classify_eigenvalues, lyapunov_certificate,
                        routh_hurwitz)

TARGET_XSTAR = (396.31, 280.18, 3.01)
TARGET_BETA_SHARP = 0.1437
TARGET_TRANSVERSALITY = 0.03
HOPF_GAMMA = 0.11


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    runtime: float
    budget: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.number:2d}. {self.name}: {self.detail} "
                f"({self.runtime:.3g} s / budget {self.budget:g} s)")


def _median_runtime(fn, repeats: int = 25) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def _existing_draws(count: int, seed: int):
    rng = np.random.default_rng(seed)
    while count:
        p = random_parameters(rng)
        xs = coexistence_equilibrium(p)
        if xs.exists:
            count -= 1
            yield p, xs


def hopf_parameters():
    return default_parameters().replace(gamma=HOPF_GAMMA, xi=0.10)


def c01_coexistence():
    p = default_parameters()
    xs = coexistence_equilibrium(p)
    err = max(abs(a - b) for a, b in zip(xs.point, TARGET_XSTAR))
    rt = _median_runtime(lambda: coexistence_equilibrium(p))
    ok = xs.exists and err <= 0.5 and rt < 1e-3
    return ok, f"X*={tuple(round(v, 4) for v in xs.point)}, max |dev|={err:.3g}", rt


def c02_boundary():
    p = default_parameters()
    x1 = boundary_equilibrium_x1(p)
    err = max(abs(a - b) for a, b in zip(x1.point, (0.0, 300.0, 1.6)))
    rt = _median_runtime(lambda: boundary_equilibrium_x1(p))
    return err <= 1e-12 and rt < 1e-3, f"X1={tuple(x1.point)}, max |dev|={err:.3g}", rt


def c03_residuals():
    worst = 0.0
    for p, xs in _existing_draws(10_000, seed=3):
        r = max(abs(v) for v in rhs(p, xs.point)) / (1.0 + math.hypot(*xs.point))
        worst = max(worst, r)
    return worst < 1e-9, f"worst scaled residual {worst:.3g} over 10000 draws", None


def c04_hopf_location():
    hp = hopf_locate(hopf_parameters(), 0.05, 0.2)
    if hp is None:
        return False, "no Hopf point found", None
    ok_b = abs(hp.beta_sharp - TARGET_BETA_SHARP) <= 1e-3
    ok_t = abs(hp.transversality_raw - TARGET_TRANSVERSALITY) <= 0.01
    return ok_b and ok_t, (f"beta#={hp.beta_sharp:.6f} ({'ok' if ok_b else 'off'}), "
                           f"d/dbeta(b3-b1b2)={hp.transversality_raw:.5f} "
                           f"({'ok' if ok_t else 'outside 0.03+-0.01'})"), None


def c05_spectrum():
    p = hopf_parameters()
    hp = hopf_locate(p, 0.05, 0.2)
    ph = p.replace(beta=hp.beta_sharp)
    eigs = sorted(np.linalg.eigvals(jacobian(ph, coexistence_equilibrium(ph).point)),
                  key=lambda z: -z.imag)
    pair, real = [eigs[0], eigs[2]], eigs[1]
    re_err = max(abs(z.real) for z in pair)
    psi0 = math.sqrt(hp.charpoly.b2)
    im_err = max(abs(abs(z.imag) - psi0) for z in pair) / psi0
    real_err = abs(real.real + hp.charpoly.b1) / hp.charpoly.b1
    ok = re_err < 1e-8 and im_err < 1e-8 and real_err < 1e-8 and abs(real.imag) < 1e-12
    return ok, f"|Re pair|={re_err:.2g}, rel |Im|-sqrt(b2)={im_err:.2g}, rel lambda3+b1={real_err:.2g}", None


def hessian_fd_error(p, tr, step_rel: float = 1e-5) -> float:
    """Max entrywise deviation (relative to the largest entry) between the
    analytic transformed Hessians and central second differences."""
    H = transformed_hessians(p, tr)
    h = step_rel * max(abs(v) for v in tr.xstar.point)
    fd = np.empty_like(H)
    eye = np.eye(3)
    for i in range(3):
        for j in range(3):
            ei, ej = eye[i] * h, eye[j] * h
            fd[:, i, j] = (transformed_field(p, tr, ei + ej) - transformed_field(p, tr, ei - ej)
                           - transformed_field(p, tr, -ei + ej) + transformed_field(p, tr, -ei - ej)) / (4 * h * h)
    return float(np.max(np.abs(fd - H)) / np.max(np.abs(H)))


def c06_transformed_jacobian():
    p = hopf_parameters()
    hp = hopf_locate(p, 0.05, 0.2)
    tr = build_transformation(p, hp.beta_sharp)
    L = tr.transformed_jacobian
    pattern = np.array([[0, -tr.psi0, 0], [tr.psi0, 0, 0], [0, 0, L[2, 2]]])
    off = float(np.max(np.abs(L - pattern)))
    nf = normal_form(p, hp.beta_sharp)
    d1_err = abs(nf.D1 + tr.b1) / tr.b1
    fd_err = hessian_fd_error(p.replace(beta=hp.beta_sharp), tr)
    ok = off < 1e-6 * tr.psi0 and d1_err < 1e-8 and nf.G21 == 0 and fd_err < 1e-5
    return ok, (f"off-pattern={off:.2g}, |D1+b1|/b1={d1_err:.2g}, G21={nf.G21}, "
                f"Hessian FD rel err={fd_err:.2g}"), None


def limit_cycle_amplitudes(p, beta_sharp, offsets, horizon=30000.0, transient=0.8):
    amps = []
    for d in offsets:
        orbit = integrate(p.replace(beta=beta_sharp + d), (360, 400, 15), horizon,
                          int(horizon) + 1, 1e-9, 1e-11)
        P = orbit.states[int(transient * len(orbit)):, 2]
        amps.append(float(P.max() - P.min()))
    return np.array(amps)


def linear_fit_r2(x, y):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return slope, 1.0 - float(resid @ resid) / float(((y - y.mean()) ** 2).sum())


def c07_supercritical():
    p = hopf_parameters()
    hp = hopf_locate(p, 0.05, 0.2)
    nf = normal_form(p, hp.beta_sharp)
    offsets = np.array([0.001, 0.002, 0.003, 0.004, 0.005])
    amps = limit_cycle_amplitudes(p, hp.beta_sharp, offsets)
    slope, r2 = linear_fit_r2(offsets, amps ** 2)
    ok = nf.S2 < 0 and nf.S1 > 0 and slope > 0 and r2 > 0.9
    return ok, f"S1={nf.S1:.3g}, S2={nf.S2:.3g}, amp^2 slope={slope:.4g}, R^2={r2:.4f}", None


def c08_convergence():
    p = default_parameters()
    orbit = integrate(p, (340, 380, 4), 5000, 5001)
    xs = coexistence_equilibrium(p)
    ok = converged_to(orbit, xs.point, 1e-2)
    return ok, f"final state {tuple(round(v, 3) for v in orbit.final)}", None


def c09_limit_cycle():
    p = default_parameters().replace(gamma=HOPF_GAMMA)
    cyc = integrate(p.replace(beta=0.15), (360, 400, 15), 7000, 35001)
    P = cyc.states[int(0.7 * len(cyc)):, 2]
    ratio = (P.max() - P.min()) / P.mean()
    ps = p.replace(beta=0.13)
    settle = integrate(ps, (360, 400, 15), 20000, 20001)
    conv = converged_to(settle, coexistence_equilibrium(ps).point, 1e-2)
    return ratio > 0.1 and conv, f"beta=0.15 P peak-to-peak/mean={ratio:.3g}; beta=0.13 converged={conv}", None


def c10_routh_hurwitz():
    checked = disagree = 0
    for p, xs in _existing_draws(10_000, seed=10):
        cp = charpoly_at_coexistence(p, xs)
        rh, margins = routh_hurwitz(cp)
        if min(abs(m) for m in margins) <= 1e-8:
            continue
        eigs = np.linalg.eigvals(jacobian(p, xs.point))
        cls = classify_eigenvalues(eigs)
        checked += 1
        disagree += rh != cls.is_stable
    return disagree == 0, f"{disagree} disagreements over {checked} draws", None


def c11_region():
    p = default_parameters()
    grid = biparametric_scan(p, default_axis("gamma", 100), default_axis("xi", 100))
    bad = total = 0
    for iy, xi in enumerate(grid.y):
        for ix, g in enumerate(grid.x):
            cls = grid.classes[iy, ix]
            if g < xi and cls is not CellClass.ABSENT:
                total += 1
                bad += cls is not CellClass.STABLE
    return bad == 0, f"{bad} non-stable of {total} existing cells with gamma<xi", None


def c12_prcc():
    table = run_prcc_experiment(PrccExperiment())
    sig = table.significant_parameters()
    expected_off = {"q", "psi", "theta1"}
    off = set(table.parameters) - sig
    return off == expected_off, f"non-significant at final time: {sorted(off)}", None


def c13_prcc_properties():
    hits = 0
    worst = 0.0
    for rep in range(20):
        X = lhs_sample([(0, 1)] * 4, 200, seed=1000 + rep)
        noise = np.random.default_rng(2000 + rep).normal(0, 0.1, 200)
        y = np.exp(X[:, 0]) + 2 * X[:, 1] - X[:, 2] ** 2 + noise
        res = prcc(X, y)
        worst = max(worst, abs(res.prcc[3]))
        hits += abs(res.prcc[3]) < 0.15 and res.p[3] > 0.05
    X = lhs_sample([(0, 1)] * 4, 200, seed=77)
    perfect = prcc(X, X[:, 1].copy()).prcc[1]
    y = X[:, 0] + X[:, 1] * X[:, 2]
    base = prcc(X, y)
    trans = prcc(X ** 3, np.exp(y))
    invariant = np.array_equal(base.prcc, trans.prcc)
    ok = hits >= 19 and perfect > 0.99 and invariant
    return ok, (f"dummy ok in {hits}/20 (max |r|={worst:.3f}), perfect r={perfect:.4f}, "
                f"transform-invariant={invariant}"), None


def c14_boundedness():
    p = default_parameters()
    rep = boundedness_check(p)
    limit = rep.aux_A / rep.aux_B if rep.condition_holds else float("nan")
    worst_e = worst_x = -math.inf
    for init in [(340, 380, 4), (360, 400, 15), (1500, 50, 20), (10, 2000, 0.5)]:
        orbit = integrate(p, init, 8000, 8001)
        E = orbit.states[:, 0]
        below = np.nonzero(E <= p.K)[0]
        after = E[below[0]:] if len(below) else E[-1:]
        worst_e = max(worst_e, float(after.max() / p.K))
        X = p.theta2 * orbit.states[:, 1] + orbit.states[:, 2]
        worst_x = max(worst_x, float(X[3 * len(X) // 4:].max() / limit))
    ok = rep.condition_holds and worst_e <= 1 + 1e-6 and worst_x <= 1 + 1e-3
    return ok, (f"condition {rep.condition_holds} (beta={p.beta} < {p.eta - p.theta1 * p.gamma * p.K:.3g}), "
                f"max E/K={worst_e:.6f}, max X/(A/B)={worst_x:.4f}"), None


def c15_lyapunov():
    p = default_parameters()
    xs = coexistence_equilibrium(p)
    cert = lyapunov_certificate(p, xs, 1.0)
    rt = _median_runtime(lambda: lyapunov_certificate(p, xs, 1.0))
    ok = cert.feasible and min(cert.margins) > 0 and rt < 1e-3
    return ok, f"deltas=({cert.delta1}, {cert.delta2}, {cert.delta3}), margins={cert.margins}", rt


def c16_first_integral():
    p = default_parameters()
    orbit = integrate(p, (0.0, 350.0, 2.0), 200.0, 2001, 1e-10, 1e-12)
    N, P = orbit.states[:, 1], orbit.states[:, 2]
    V = first_integral_lv(p, N, P)
    drift = float(np.max(np.abs(V - V[0])) / abs(V[0]))
    return drift < 1e-6, f"max relative drift {drift:.3g} over t in [0, 200] (>= 1 period)", None


CRITERIA: list[tuple[int, str, float, Callable]] = [
    (1, "coexistence equilibrium", 1e-3, c01_coexistence),
    (2, "boundary equilibrium X1", 1e-3, c02_boundary),
    (3, "equilibrium residuals", 5.0, c03_residuals),
    (4, "Hopf location and transversality", 1.0, c04_hopf_location),
    (5, "spectral structure at beta#", 1.0, c05_spectrum),
    (6, "transformed Jacobian pattern", 1.0, c06_transformed_jacobian),
    (7, "supercriticality consistency", 120.0, c07_supercritical),
    (8, "convergence scenario", 10.0, c08_convergence),
    (9, "limit-cycle scenario", 60.0, c09_limit_cycle),
    (10, "Routh-Hurwitz vs eigenvalues", 10.0, c10_routh_hurwitz),
    (11, "stable region for gamma < xi", 30.0, c11_region),
    (12, "PRCC significance set", 300.0, c12_prcc),
    (13, "PRCC properties", 120.0, c13_prcc_properties),
    (14, "boundedness", 30.0, c14_boundedness),
    (15, "Lyapunov certificate", 1e-3, c15_lyapunov),
    (16, "Lotka-Volterra first integral", 10.0, c16_first_integral),
]


def run_criterion(number: int) -> CriterionResult:
    for num, name, budget, fn in CRITERIA:
        if num == number:
            t0 = time.perf_counter()
            ok, detail, timed = fn()
            elapsed = time.perf_counter() - t0
            runtime = elapsed if timed is None else timed
            return CriterionResult(num, name, bool(ok) and runtime < budget, detail, runtime, budget)
    raise KeyError(f"no criterion {number}")


def run_all(numbers=None, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    results = []
    for num, *_ in CRITERIA:
        if numbers and num not in numbers:
            continue
        res = run_criterion(num)
        if echo:
            echo(res.line())
        results.append(res)
    return results
