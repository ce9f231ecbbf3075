"""Command-line front end: ``elkwolf <subcommand> [options]``.

Data goes to ``--out`` (or standard output), figures to ``--plot`` and all
log messages to standard error. Exit status is 0 on success, 1 for usage,
configuration or I/O errors and 2 for numerical failures.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .equilibria import EquilibriumKind, enumerate_equilibria
from .hopf import HopfError, hopf_locate, hurwitz_function, normal_form
from .integrator import IntegrationError, integrate
from .io import ConfigError, load_config, write_csv
from .model import PARAMETER_NAMES
from .scan import AxisSpec, OrbitConfig, biparametric_scan, bifurcation_diagram, default_axis
from .stability import NonexistentEquilibriumError, classify_equilibrium
from .sensitivity import PrccExperiment, run_prcc_experiment

log = logging.getLogger("elkwolf")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

HOPF_HEADER = ("beta_sharp", "psi0", "b1", "b2", "b3", "transversality",
               "S1", "S2", "S3", "l1_re", "l1_im")


class UsageError(Exception):
    pass


class NumericFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _common(p):
    p.add_argument("--config", help="key = value or JSON config file")
    p.add_argument("--set", action="append", default=[], metavar="NAME=VALUE",
                   help="override a config entry (repeatable)")
    p.add_argument("--out", default="-", help="CSV destination (default: stdout)")
    p.add_argument("--plot", help="also write an SVG figure here")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--workers", type=int, default=1, help="process fan-out for scans and PRCC")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="elkwolf", description="Elk-wolf refuge model analyses.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="integrate one orbit")
    _common(p)
    p.add_argument("--e0", type=float, default=340.0)
    p.add_argument("--n0", type=float, default=380.0)
    p.add_argument("--p0", type=float, default=4.0)
    p.add_argument("--t-end", type=float, help="horizon (default: config horizon or 5000)")
    p.add_argument("--samples", type=int, help="output samples (default: config or t_end + 1)")

    p = sub.add_parser("equilibria", help="list the three equilibria")
    _common(p)

    p = sub.add_parser("stability", help="eigenvalues and classification of each equilibrium")
    _common(p)

    for name, text in (("hopf", "locate the Hopf point in beta"),
                       ("normalform", "normal-form coefficients at the Hopf point")):
        p = sub.add_parser(name, help=text)
        _common(p)
        p.add_argument("--param", default="beta", help="bifurcation parameter (only beta)")
        p.add_argument("--min", type=float, default=0.05, dest="lo")
        p.add_argument("--max", type=float, default=0.2, dest="hi")

    p = sub.add_parser("prcc", help="LHS/PRCC sensitivity analysis")
    _common(p)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--variation", type=float, default=1.0)
    p.add_argument("--interpretation", choices=("width", "halfwidth"), default="width")
    p.add_argument("--horizon", type=float, default=400.0)
    p.add_argument("--time-points", type=int, default=400)

    p = sub.add_parser("scan", help="two-parameter stability grid")
    _common(p)
    p.add_argument("--x", default="gamma", choices=PARAMETER_NAMES)
    p.add_argument("--y", default="xi", choices=PARAMETER_NAMES)
    p.add_argument("--x-min", type=float)
    p.add_argument("--x-max", type=float)
    p.add_argument("--y-min", type=float)
    p.add_argument("--y-max", type=float)
    p.add_argument("--resolution", type=int, default=200)

    p = sub.add_parser("bifurcation", help="attractor extrema across a parameter sweep")
    _common(p)
    p.add_argument("--param", default="beta", choices=PARAMETER_NAMES)
    p.add_argument("--min", type=float, default=0.10, dest="lo")
    p.add_argument("--max", type=float, default=0.20, dest="hi")
    p.add_argument("--steps", type=int, default=51)

    p = sub.add_parser("selftest", help="run the reproducibility battery")
    p.add_argument("--only", type=int, action="append", metavar="N",
                   help="run only criterion N (repeatable)")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _config(args):
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return load_config(args.config, overrides)


def _check_out(args):
    # fail before any computation if the destination is unusable
    for path in (args.out, args.plot):
        if path and path != "-" and not Path(path).parent.resolve().is_dir():
            raise UsageError(f"cannot write {path}: directory does not exist")


def cmd_simulate(args, cfg):
    t_end = args.t_end if args.t_end is not None else (cfg.horizon or 5000.0)
    samples = args.samples or cfg.sample_count or int(round(t_end)) + 1
    orbit = integrate(cfg.parameters, (args.e0, args.n0, args.p0), t_end, samples,
                      cfg.rel_tol, cfg.abs_tol)
    log.info("integrated to t=%g in %d steps", t_end, orbit.solver_stats.steps)
    rows = ((t, *s) for t, s in zip(orbit.times, orbit.states))
    write_csv(("t", "E", "N", "P"), rows, args.out)
    if args.plot:
        from .plotting import plot_orbit
        plot_orbit(orbit.times, orbit.states, args.plot)


def cmd_equilibria(args, cfg):
    eqs = enumerate_equilibria(cfg.parameters)
    write_csv(("kind", "E", "N", "P", "exists"),
              ((e.kind.value, *e.point, e.exists) for e in eqs), args.out)
    if args.plot:
        from .plotting import plot_series
        plot_series({e.kind.value: ([e.point[1]], [e.point[2]]) for e in eqs if e.exists},
                    args.plot, xlabel="N", ylabel="P")


def cmd_stability(args, cfg):
    rows = []
    for eq in enumerate_equilibria(cfg.parameters):
        if not eq.exists:
            rows.append((eq.kind.value, "", *[""] * 6, ""))
            continue
        rep = classify_equilibrium(cfg.parameters, eq)
        lam = [v for z in rep.eigenvalues for v in (z.real, z.imag)]
        rh = rep.routh_hurwitz_holds if eq.kind is EquilibriumKind.COEXISTENCE else rep.closed_condition
        rows.append((eq.kind.value, rep.classification.value, *lam, rh))
    header = ("kind", "classification", "lambda1_re", "lambda1_im", "lambda2_re", "lambda2_im",
              "lambda3_re", "lambda3_im", "condition")
    write_csv(header, rows, args.out)


def _locate(args, cfg):
    if args.param != "beta":
        raise UsageError("Hopf continuation is only available in beta")
    hp = hopf_locate(cfg.parameters, args.lo, args.hi)
    if hp is None:
        raise NumericFailure(f"no Hopf point for beta in [{args.lo}, {args.hi}]")
    return hp


def cmd_hopf(args, cfg):
    hp = _locate(args, cfg)
    nf = normal_form(cfg.parameters, hp.beta_sharp)
    cp = hp.charpoly
    write_csv(HOPF_HEADER, [(hp.beta_sharp, hp.psi0, cp.b1, cp.b2, cp.b3, hp.transversality_raw,
                             nf.S1, nf.S2, nf.S3, nf.l1.real, nf.l1.imag)], args.out)
    if args.plot:
        from .plotting import plot_hopf
        betas = np.linspace(args.lo, args.hi, 301)
        margins = np.array([hurwitz_function(cfg.parameters, b) for b in betas], dtype=float)
        plot_hopf(betas, margins, -np.gradient(margins, betas), hp.beta_sharp, args.plot)


def cmd_normalform(args, cfg):
    hp = _locate(args, cfg)
    nf = normal_form(cfg.parameters, hp.beta_sharp)
    names = ("beta_sharp", "psi0", "detC", "D1", "g20", "g11", "g02", "g21", "G21", "G110",
             "G101", "h11", "h20", "w11", "w20_standard", "w20_detc", "l1", "S1", "S2", "S3",
             "p_prime0", "q_prime0", "g11_mixed", "l1_mixed", "side_condition_residual")
    rows = []
    for n in names:
        v = getattr(nf, n)
        if v is None:
            rows.append((n, "", ""))
        else:
            v = complex(v)
            rows.append((n, v.real, v.imag))
    write_csv(("quantity", "real", "imag"), rows, args.out)


def cmd_prcc(args, cfg):
    exp = PrccExperiment(baseline=cfg.parameters, n_samples=args.samples, variation=args.variation,
                         interpretation=args.interpretation, horizon=args.horizon,
                         time_points=args.time_points, seed=cfg.seed,
                         rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)
    table = run_prcc_experiment(exp, args.workers)
    if table.dropped:
        log.warning("%d samples failed to integrate and were dropped", table.dropped)
    log.info("non-significant at final time: %s",
             ", ".join(sorted(set(table.parameters) - table.significant_parameters())) or "none")
    write_csv(("parameter", "output", "time", "prcc", "t", "p"), table.rows(), args.out)
    if args.plot:
        from .plotting import plot_prcc
        plot_prcc(table, args.plot)


def _axis(name, lo, hi, resolution):
    base = default_axis(name, resolution)
    return AxisSpec(name, base.lo if lo is None else lo, base.hi if hi is None else hi, resolution)


def cmd_scan(args, cfg):
    if args.x == args.y:
        raise UsageError("--x and --y must differ")
    grid = biparametric_scan(cfg.parameters, _axis(args.x, args.x_min, args.x_max, args.resolution),
                             _axis(args.y, args.y_min, args.y_max, args.resolution), args.workers)
    write_csv(("x", "y", "class", "b1", "b3", "hurwitz_margin"), grid.rows(), args.out)
    if args.plot:
        from .plotting import plot_grid
        plot_grid(grid, args.plot)


def cmd_bifurcation(args, cfg):
    oc = OrbitConfig()
    if cfg.horizon is not None or cfg.sample_count is not None:
        horizon = cfg.horizon or oc.horizon
        oc = OrbitConfig(horizon=horizon, sample_count=cfg.sample_count or int(5 * horizon) + 1,
                         rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)
    diagram = bifurcation_diagram(cfg.parameters, args.param, args.lo, args.hi, args.steps,
                                  oc, args.workers)
    failed = [e.value for e in diagram.entries if e.error]
    if failed:
        log.warning("integration failed at %s=%s", args.param, failed)
    write_csv(("param", "variable", "kind", "value"), diagram.rows(), args.out)
    if args.plot:
        from .plotting import plot_bifurcation
        plot_bifurcation(diagram, args.plot)


def cmd_selftest(args):
    from .acceptance import run_all
    results = run_all(args.only, echo=lambda line: print(line, flush=True))
    failed = [r.number for r in results if not r.passed]
    if failed:
        log.error("failed criteria: %s", failed)
        return EXIT_NUMERIC
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate, "equilibria": cmd_equilibria, "stability": cmd_stability,
    "hopf": cmd_hopf, "normalform": cmd_normalform, "prcc": cmd_prcc, "scan": cmd_scan,
    "bifurcation": cmd_bifurcation,
}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)
    if args.command == "selftest":
        return cmd_selftest(args)
    try:
        _check_out(args)
        cfg = _config(args)
        COMMANDS[args.command](args, cfg)
    except (UsageError, ConfigError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_USAGE
    except (NumericFailure, IntegrationError, HopfError, NonexistentEquilibriumError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    return EXIT_OK


def main() -> None:
    sys.exit(run())
