"""Two-parameter existence/stability grids and one-parameter bifurcation diagrams."""

from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .equilibria import coexistence_equilibrium
from .hopf import hopf_locate
from .integrator import Extrema, IntegrationError, attractor_extrema, converged_to, integrate
from .model import PARAMETER_NAMES, ParameterSet, State
from .stability import Classification, charpoly_at_coexistence, classify_charpoly


class CellClass(enum.Enum):
    ABSENT = "Absent"
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    MARGINAL = "Marginal"


@dataclass(frozen=True)
class AxisSpec:
    name: str
    lo: float
    hi: float
    resolution: int

    def __post_init__(self):
        if self.name not in PARAMETER_NAMES:
            raise ValueError(f"unknown parameter {self.name!r}")
        if not self.lo < self.hi:
            raise ValueError(f"axis {self.name}: need lo < hi")
        if self.resolution < 2:
            raise ValueError(f"axis {self.name}: resolution must be >= 2")

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.resolution)


DEFAULT_AXES = {
    "gamma": (0.001, 0.20),
    "beta": (0.01, 0.30),
    "xi": (0.01, 0.30),
}


def default_axis(name: str, resolution: int = 200) -> AxisSpec:
    lo, hi = DEFAULT_AXES[name]
    return AxisSpec(name, lo, hi, resolution)


@dataclass(frozen=True)
class ScanGrid:
    x_axis: AxisSpec
    y_axis: AxisSpec
    x: np.ndarray
    y: np.ndarray
    classes: np.ndarray     # object array (ny, nx) of CellClass
    margins: np.ndarray     # (ny, nx, 3): b1, b3, b1 b2 - b3; NaN where absent

    def count(self, cls: CellClass) -> int:
        return int(sum(1 for c in self.classes.flat if c is cls))

    def rows(self):
        """(x, y, class, b1, b3, hurwitz_margin) in row-major order over y then x."""
        for iy, yv in enumerate(self.y):
            for ix, xv in enumerate(self.x):
                b1, b3, hm = self.margins[iy, ix]
                yield float(xv), float(yv), self.classes[iy, ix].value, float(b1), float(b3), float(hm)


def classify_cell(params: ParameterSet) -> tuple[CellClass, tuple[float, float, float] | None]:
    xs = coexistence_equilibrium(params)
    if not xs.exists:
        return CellClass.ABSENT, None
    cp = charpoly_at_coexistence(params, xs)
    cls = classify_charpoly(cp)
    margins = (cp.b1, cp.b3, cp.hurwitz_margin)
    if cls is Classification.MARGINAL:
        return CellClass.MARGINAL, margins
    return (CellClass.STABLE if cls.is_stable else CellClass.UNSTABLE), margins


def _scan_row(args):
    baseline, x_axis, y_name, yv = args
    row = []
    for xv in x_axis.values():
        row.append(classify_cell(baseline.replace(**{x_axis.name: float(xv), y_name: float(yv)})))
    return row


def biparametric_scan(baseline: ParameterSet, x_spec: AxisSpec, y_spec: AxisSpec,
                      workers: int = 1) -> ScanGrid:
    if x_spec.name == y_spec.name:
        raise ValueError("scan axes must be different parameters")
    jobs = [(baseline, x_spec, y_spec.name, float(yv)) for yv in y_spec.values()]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_scan_row, jobs))
    else:
        rows = [_scan_row(j) for j in jobs]
    ny, nx = y_spec.resolution, x_spec.resolution
    classes = np.empty((ny, nx), dtype=object)
    margins = np.full((ny, nx, 3), np.nan)
    for iy, row in enumerate(rows):
        for ix, (cls, m) in enumerate(row):
            classes[iy, ix] = cls
            if m is not None:
                margins[iy, ix] = m
    return ScanGrid(x_spec, y_spec, x_spec.values(), y_spec.values(), classes, margins)


@dataclass(frozen=True)
class OrbitConfig:
    initial_state: State = State(360.0, 400.0, 15.0)
    horizon: float = 7000.0
    sample_count: int = 35001
    transient_fraction: float = 0.7
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    converged_tol: float = 1e-2


@dataclass(frozen=True)
class DiagramEntry:
    value: float
    extrema: dict[str, Extrema] | None
    converged: bool
    error: str | None = None


@dataclass(frozen=True)
class BifurcationDiagram:
    parameter: str
    values: np.ndarray
    entries: list[DiagramEntry]
    hopf_marker: float | None = None

    def rows(self):
        """(param value, variable, kind, value) with kind in min/max/terminal."""
        for e in self.entries:
            if e.extrema is None:
                continue
            for var, ex in e.extrema.items():
                for v in ex.minima:
                    yield e.value, var, "min", float(v)
                for v in ex.maxima:
                    yield e.value, var, "max", float(v)
                yield e.value, var, "terminal", ex.terminal


def _diagram_entry(args) -> DiagramEntry:
    baseline, param, value, cfg = args
    p = baseline.replace(**{param: value})
    try:
        orbit = integrate(p, cfg.initial_state, cfg.horizon, cfg.sample_count, cfg.rel_tol, cfg.abs_tol)
    except IntegrationError as exc:
        return DiagramEntry(value, None, False, str(exc))
    extrema = attractor_extrema(orbit, cfg.transient_fraction)
    xs = coexistence_equilibrium(p)
    target = xs.point if xs.exists else orbit.final
    converged = converged_to(orbit, target, cfg.converged_tol)
    if converged:
        empty = np.empty(0)
        extrema = {k: Extrema(empty, empty, ex.terminal) for k, ex in extrema.items()}
    return DiagramEntry(value, extrema, converged)


def bifurcation_diagram(baseline: ParameterSet, param: str, lo: float, hi: float, steps: int,
                        orbit_config: OrbitConfig | None = None, workers: int = 1) -> BifurcationDiagram:
    """Post-transient extrema of E, N, P across a sweep of ``param``.

    Every sweep value starts from the same initial state. Values whose orbit
    has settled onto X* (or onto its own terminal state when X* does not
    exist) report empty extrema sets.
    """
    if param not in PARAMETER_NAMES:
        raise ValueError(f"unknown parameter {param!r}")
    if not lo < hi or steps < 2:
        raise ValueError("need lo < hi and steps >= 2")
    cfg = orbit_config or OrbitConfig()
    values = np.linspace(lo, hi, steps)
    jobs = [(baseline, param, float(v), cfg) for v in values]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            entries = list(pool.map(_diagram_entry, jobs))
    else:
        entries = [_diagram_entry(j) for j in jobs]
    marker = None
    if param == "beta":
        hp = hopf_locate(baseline, lo, hi)
        marker = hp.beta_sharp if hp is not None else None
    return BifurcationDiagram(param, values, entries, marker)
