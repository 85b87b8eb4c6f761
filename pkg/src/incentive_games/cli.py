"""Command-line interface: ``incentive-games simulate|solve|verify|list|show``.

Exit codes: 0 success, 1 usage or input error, 2 simplex violation,
3 no converged equilibrium, 4 verification failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .catalog import builtin_catalog
from .dynamics import DRIFT_POLICIES, METHODS, IntegratorConfig, integrate, map_residual
from .errors import ConfigurationError, EvaluationError, GameError
from .game import Profile
from .io import (INCENTIVE_SPECS, RunManifest, dumps, format_profile, parse_incentive, parse_profile, reports_csv,
                 reports_json, resolve_game, save_game, trajectory_csv, trajectory_json)
from .search import (SearchConfig, enumerate_pure, equilibrium_residual, find_equilibria,
                     find_symmetric_equilibrium, nash_residual)

EXIT_OK, EXIT_USAGE, EXIT_SIMPLEX, EXIT_NO_CONVERGENCE, EXIT_VERIFY = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _common(p, fmt=True):
    p.add_argument("--game", required=True, help="builtin name or alias, game file path, or - for stdin")
    p.add_argument("--incentive", required=True, help="incentive spec, e.g. nash or logit:eta=0.5")
    if fmt:
        p.add_argument("--output", "-o", help="output file (default: standard output)")
        p.add_argument("--output-format", choices=("csv", "json"), default="csv")
        p.add_argument("--seed", type=_seed, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="incentive-games", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="integrate the incentive dynamics or iterate the revision map")
    _common(sim)
    sim.add_argument("--x0", default="barycenter", help="profile literal, 'barycenter' or 'random' (uses --seed)")
    sim.add_argument("--method", choices=METHODS, default="rk4")
    sim.add_argument("--dt", type=float, default=0.01)
    sim.add_argument("--t-max", type=float)
    sim.add_argument("--max-steps", type=int, default=100_000)
    sim.add_argument("--tol", type=float, default=1e-9)
    sim.add_argument("--drift-tol", type=float, default=1e-9)
    sim.add_argument("--drift-policy", choices=DRIFT_POLICIES, default="renormalize")
    sim.add_argument("--record-every", type=int, default=1)

    solve = sub.add_parser("solve", help="multistart search for incentive equilibria")
    _common(solve)
    solve.add_argument("--starts", type=int, default=SearchConfig.n_random, help="number of random starts")
    solve.add_argument("--max-iter", type=int, default=SearchConfig.max_iter)
    solve.add_argument("--tol", type=float, default=SearchConfig.tol)
    solve.add_argument("--dedup", type=float, default=SearchConfig.dedup)
    solve.add_argument("--no-vertices", action="store_true", help="do not start from pure profiles")
    solve.add_argument("--enumerate-pure", action="store_true",
                       help="scan every pure profile and add the interior equilibria found by the search")
    solve.add_argument("--symmetric", action="store_true", help="search inside the symmetric region")
    solve.add_argument("--include-unconverged", action="store_true")

    ver = sub.add_parser("verify", help="residuals of one profile")
    _common(ver, fmt=False)
    ver.add_argument("--profile", required=True, help="e.g. '0.5,0.5;0.5,0.5'")
    ver.add_argument("--tol", type=float, default=1e-9)

    sub.add_parser("list", help="builtin games and incentive specs")

    show = sub.add_parser("show", help="print a game in the game file format")
    show.add_argument("--game", required=True)
    return parser


def _emit(text: str, path: str | None, out):
    if path is None:
        out.write(text)
    else:
        Path(path).write_text(text)


def _start_profile(g, literal: str, seed: int) -> Profile:
    if literal == "barycenter":
        return Profile.barycenter(g.strategy_counts)
    if literal == "random":
        rng = np.random.default_rng(seed)
        return Profile([rng.dirichlet(np.ones(s)) for s in g.strategy_counts])
    return parse_profile(literal, g.strategy_counts)


def _write(args, csv_text, json_text, manifest, out):
    if args.output_format == "json":
        _emit(json_text, args.output, out)
        return
    _emit(csv_text, args.output, out)
    if args.output is not None:
        Path(args.output + ".manifest.json").write_text(manifest)


def cmd_simulate(args, stdin, out, err) -> int:
    g = resolve_game(args.game, stdin)
    phi = parse_incentive(args.incentive)
    cfg = IntegratorConfig(method=args.method, dt=args.dt, max_steps=args.max_steps, tol=args.tol,
                           drift_tol=args.drift_tol, drift_policy=args.drift_policy, t_max=args.t_max,
                           record_every=args.record_every)
    x0 = _start_profile(g, args.x0, args.seed)
    traj = integrate(g, phi, x0, cfg)
    config = dict(cfg.to_dict(), x0=args.x0)
    manifest = RunManifest(args.game, phi.label, "simulate", config, args.seed)
    _write(args, trajectory_csv(traj), trajectory_json(traj, manifest), dumps(manifest.to_dict()), out)
    err.write(f"status={traj.status} steps={traj.steps} residual={traj.residual!r}\n")
    if traj.status in ("simplex-violation", "denominator-violation"):
        if traj.message:
            err.write(traj.message + "\n")
        return EXIT_SIMPLEX
    return EXIT_OK


def cmd_solve(args, stdin, out, err) -> int:
    g = resolve_game(args.game, stdin)
    phi = parse_incentive(args.incentive)
    cfg = SearchConfig(n_random=args.starts, include_vertices=not args.no_vertices, seed=args.seed,
                       max_iter=args.max_iter, tol=args.tol, dedup=args.dedup,
                       keep_unconverged=args.include_unconverged)
    if args.symmetric:
        reports = [find_symmetric_equilibrium(g, phi, cfg=cfg)]
    else:
        reports = find_equilibria(g, phi, cfg)
    if args.enumerate_pure:
        interior = [r for r in reports if r.converged and r.is_interior]
        reports = enumerate_pure(g, phi, tol=args.tol) + interior
    if not args.include_unconverged:
        reports = [r for r in reports if r.converged]
    config = dict(cfg.to_dict(), enumerate_pure=args.enumerate_pure, symmetric=args.symmetric)
    manifest = RunManifest(args.game, phi.label, "solve", config, args.seed)
    _write(args, reports_csv(reports), reports_json(reports, manifest), dumps(manifest.to_dict()), out)
    n_conv = sum(r.converged for r in reports)
    err.write(f"{n_conv} converged of {len(reports)} reports\n")
    return EXIT_OK if n_conv else EXIT_NO_CONVERGENCE


def cmd_verify(args, stdin, out, err) -> int:
    g = resolve_game(args.game, stdin)
    phi = parse_incentive(args.incentive)
    x = parse_profile(args.profile, g.strategy_counts)
    res = equilibrium_residual(g, phi, x)
    mres = "n/a"
    if phi.drives_map(g):
        try:
            mres = repr(map_residual(g, phi, x))
        except EvaluationError:
            pass
    out.write(f"profile {format_profile(x)}\n")
    out.write(f"parallel-residual {res!r}\n")
    out.write(f"map-residual {mres}\n")
    out.write(f"nash-residual {nash_residual(g, x)!r}\n")
    ok = res <= args.tol
    out.write(f"equilibrium {'yes' if ok else 'no'} (tol {args.tol:g})\n")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_list(args, stdin, out, err) -> int:
    out.write("games:\n")
    for name, g in builtin_catalog().items():
        out.write(f"  {name}  {'x'.join(map(str, g.strategy_counts))}\n")
    out.write("incentives:\n")
    for spec in INCENTIVE_SPECS:
        out.write(f"  {spec}\n")
    return EXIT_OK


def cmd_show(args, stdin, out, err) -> int:
    out.write(save_game(resolve_game(args.game, stdin)))
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "solve": cmd_solve, "verify": cmd_verify, "list": cmd_list,
            "show": cmd_show}


def main(argv=None, stdin=None, stdout=None, stderr=None) -> int:
    stdin = stdin or sys.stdin
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, stdin, out, err)
    except UsageError as exc:
        err.write(f"incentive-games: error: {exc}\n")
    except (GameError, ConfigurationError, EvaluationError, OSError) as exc:
        err.write(f"incentive-games: error: {exc}\n")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
