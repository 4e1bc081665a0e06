"""Command line entry point: ``painleve <subcommand> [options]``.

Exit codes: 0 success, 2 configuration error, 3 domain error, 4 integration
failure.
"""
from __future__ import annotations

import argparse
import math
import sys
import warnings
from importlib import resources
from pathlib import Path

import numpy as np

from .. import iwc
from ..compliance import ComplianceParams
from ..contact_model import BodyParams, DomainError, RodCoefficients
from ..integrator import IntegrationError, Tolerances
from . import plotting
from .config import ConfigError, Scenario, SweepSpec
from .studies import (classify_full, convergence_study, kappa1_portrait, key_value_table,
                      phase_map, run_scenario, separatrix_bisect, sweep_e, theta_grid, two_rod)

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_INTEGRATION = 0, 2, 3, 4
BUNDLED = ("inconsistent", "freefall", "two_rod")


def bundled_scenario_path(name: str) -> Path:
    return Path(str(resources.files("painleve.scenarios") / f"{name}.toml"))


def load_scenario(ref: str | None, default: str | None = None) -> Scenario:
    ref = ref or default
    if ref is None:
        raise ConfigError("--config is required")
    path = Path(ref)
    if not path.exists() and ref in BUNDLED:
        path = bundled_scenario_path(ref)
    if not path.exists():
        raise ConfigError(f"no such config file or bundled scenario: {ref!r}")
    return Scenario.load(path)


def _with_tol(scn: Scenario, tol: float | None) -> Scenario:
    if tol is None:
        return scn
    d = scn.to_dict()
    d["tolerances"]["rtol"] = tol
    d["tolerances"]["atol"] = tol * 1e-2
    return Scenario.from_dict(d)


class _Out:
    """Output directory bookkeeping; CSV is always written since plots read it."""

    def __init__(self, args):
        self.dir = Path(args.out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.svg = args.format in ("svg", "both")
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        return self.dir / name

    def table(self, table, name: str) -> Path:
        p = table.to_csv(self.path(name))
        self.written.append(p)
        return p

    def plot(self, fn, *csvs, name: str, **kw):
        if self.svg:
            self.written.append(fn(*csvs, self.path(name), **kw))


def cmd_simulate(args, out: _Out) -> None:
    scn = _with_tol(load_scenario(args.config), args.tol)
    if scn.kind == "two_rod":
        return cmd_two_rod(args, out, scn)
    res = run_scenario(scn)
    if "trajectory" in scn.outputs:
        p = out.path(f"{scn.name}_trajectory.csv")
        res.trajectory.to_csv(p)
        out.written.append(p)
        out.plot(plotting.plot_trajectory, p, name=f"{scn.name}_trajectory.svg")
    if "events" in scn.outputs:
        p = out.path(f"{scn.name}_events.csv")
        res.trajectory.events_to_csv(p)
        out.written.append(p)
    if "summary" in scn.outputs:
        out.table(key_value_table(res.summary), f"{scn.name}_summary.csv")


def cmd_two_rod(args, out: _Out, scn: Scenario | None = None) -> None:
    scn = scn or _with_tol(load_scenario(args.config, "two_rod"), args.tol)
    if scn.kind != "two_rod":
        raise ConfigError(f"scenario {scn.name!r} is not a two-rod scenario")
    trs, summary = two_rod(scn)
    paths = []
    for name, tr in trs.items():
        p = out.path(f"{scn.name}_{name}_trajectory.csv")
        tr.to_csv(p)
        tr.events_to_csv(out.path(f"{scn.name}_{name}_events.csv"))
        out.written.extend([p, out.path(f"{scn.name}_{name}_events.csv")])
        paths.append(p)
    out.table(key_value_table(summary), f"{scn.name}_summary.csv")
    out.plot(plotting.plot_two_rod, *paths, name=f"{scn.name}.svg")


def cmd_sweep_e(args, out: _Out) -> None:
    if args.config:
        specs = [SweepSpec.from_toml(Path(args.config).read_text())]
    else:
        params = BodyParams(args.alpha, args.mu)
        if args.parameter == "theta0":
            grid = tuple(theta_grid(params, args.num, include_ends=False))
            specs = [SweepSpec("theta0", grid, delta=d, alpha=args.alpha, mu=args.mu)
                     for d in (args.delta or [0.0])]
        else:
            grid = tuple(np.linspace(args.start, args.stop, args.num))
            specs = [SweepSpec("delta", grid, theta0=t, alpha=args.alpha, mu=args.mu)
                     for t in (args.theta0 or [1.0, 1.2])]
    for spec in specs:
        fixed = f"delta_{spec.delta:g}" if spec.parameter == "theta0" else f"theta0_{spec.theta0:g}"
        name = f"sweep_e_{spec.parameter}_{fixed}"
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            table = sweep_e(spec)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        p = out.table(table, f"{name}.csv")
        out.plot(plotting.plot_sweep, p, name=f"{name}.svg", xlabel=spec.parameter)


def cmd_phase_map(args, out: _Out) -> None:
    params = BodyParams(args.alpha, args.mu)
    thetas = np.linspace(0.0, math.pi / 2, args.n_theta)
    phis = np.linspace(-args.phi_max, args.phi_max, args.n_phi)
    raster, overlays = phase_map(params, thetas, phis)
    pr = out.table(raster, "phase_map.csv")
    po = out.table(overlays, "phase_map_overlays.csv")
    out.plot(plotting.plot_phase_map, pr, po, name="phase_map.svg")


def cmd_kappa1(args, out: _Out) -> None:
    params = BodyParams(args.alpha, args.mu)
    co = RodCoefficients(params)
    w1 = args.w1
    if not w1:
        if co.b(args.theta0, args.phi0) > 0:
            ws = iwc.separatrix_w1star(args.theta0, args.phi0, co, args.delta)
            w1 = [ws * f for f in (0.25, 0.5, 0.9, 0.99, 1.01, 1.1, 1.5, 2.0)]
        else:
            w1 = [-0.25, -0.5, -1.0, -2.0]
    orbits, overlays = kappa1_portrait(params, args.theta0, args.phi0, args.delta, w1)
    po = out.table(orbits, "kappa1_orbits.csv")
    pv = out.table(overlays, "kappa1_overlays.csv")
    out.plot(plotting.plot_kappa1, po, pv, name="kappa1.svg")


def cmd_separatrix(args, out: _Out) -> None:
    co = RodCoefficients(BodyParams(args.alpha, args.mu))
    classify = None
    if args.method == "full":
        comp = ComplianceParams(args.epsilon, args.delta)
        classify = lambda w: classify_full(w, args.theta0, args.phi0, 1.0, co, comp)[0]
        eps = args.epsilon
    else:
        eps = 0.0 if args.epsilon is None else args.epsilon
    res = separatrix_bisect(args.theta0, args.phi0, co, args.delta, eps,
                            tol=1e-6 if args.method == "full" else 1e-10, classify=classify)
    res["method"] = args.method
    out.table(key_value_table(res), "separatrix.csv")


def cmd_converge(args, out: _Out) -> None:
    tol = Tolerances() if args.tol is None else Tolerances(rtol=args.tol, atol=args.tol * 1e-2)
    table, fit = convergence_study(args.theta0, args.phi0, args.v0, args.delta, args.eps,
                                   BodyParams(args.alpha, args.mu), args.w_scale, tol)
    p = out.table(table, "convergence.csv")
    out.table(key_value_table(fit), "convergence_fit.csv")
    out.plot(plotting.plot_convergence, p, name="convergence.svg")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario/sweep TOML or a bundled scenario name")
    common.add_argument("--out-dir", default=".", help="output directory")
    common.add_argument("--tol", type=float, default=None, help="relative integration tolerance")
    common.add_argument("--format", choices=("csv", "svg", "both"), default="both")

    parser = argparse.ArgumentParser(prog="painleve", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", parents=[common], help="run one scenario")

    p = sub.add_parser("sweep-e", parents=[common], help="restitution sweep with asymptotes")
    p.add_argument("--parameter", choices=("theta0", "delta"), default="delta")
    p.add_argument("--theta0", type=float, action="append")
    p.add_argument("--delta", type=float, action="append")
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--stop", type=float, default=10.0)
    p.add_argument("--num", type=int, default=81)
    p.add_argument("--alpha", type=float, default=3.0)
    p.add_argument("--mu", type=float, default=1.4)

    p = sub.add_parser("phase-map", parents=[common], help="regime map over (theta, phi)")
    p.add_argument("--alpha", type=float, default=3.0)
    p.add_argument("--mu", type=float, default=1.4)
    p.add_argument("--n-theta", type=int, default=181)
    p.add_argument("--n-phi", type=int, default=121)
    p.add_argument("--phi-max", type=float, default=3.0)

    for name, help_ in (("kappa1", "layer phase portrait in the zoomed chart"),
                        ("separatrix", "bisect the lift-off/IWC threshold")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--alpha", type=float, default=3.0)
        p.add_argument("--mu", type=float, default=3.0)
        p.add_argument("--theta0", type=float, default=0.9463)
        p.add_argument("--phi0", type=float, default=1.6654)
        p.add_argument("--delta", type=float, default=1.0)
        if name == "kappa1":
            p.add_argument("--w1", type=float, action="append")
        else:
            p.add_argument("--method", choices=("kappa1", "full"), default="kappa1")
            p.add_argument("--epsilon", type=float, default=None)

    p = sub.add_parser("converge", parents=[common], help="IWC convergence as eps -> 0")
    p.add_argument("--theta0", type=float, default=1.0)
    p.add_argument("--phi0", type=float, default=0.5)
    p.add_argument("--v0", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--eps", type=float, nargs="+", default=[1e-2, 1e-3, 1e-4])
    p.add_argument("--w-scale", type=float, default=0.0, help="initial w in units of eps")
    p.add_argument("--alpha", type=float, default=3.0)
    p.add_argument("--mu", type=float, default=1.4)

    sub.add_parser("two-rod", parents=[common], help="two rods on either side of the separatrix")
    return parser


COMMANDS = {
    "simulate": cmd_simulate, "sweep-e": cmd_sweep_e, "phase-map": cmd_phase_map,
    "kappa1": cmd_kappa1, "separatrix": cmd_separatrix, "converge": cmd_converge,
    "two-rod": cmd_two_rod,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    if args.command == "separatrix" and args.method == "full" and args.epsilon is None:
        args.epsilon = 1e-3
    try:
        out = _Out(args)
        COMMANDS[args.command](args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (IntegrationError, iwc.NoExitError) as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for p in out.written:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
