"""Command line entry point.

Exit codes: 0 when every check passes, 1 when a check fails, 2 when the
configuration or input files are invalid.
"""

from __future__ import annotations

import argparse
import csv
import sys

import jsonschema
import numpy as np

from . import suite
from .grid import TorusGrid
from .paths import MetricPath
from .io import dumps, read_json, read_spgrid, write_json, write_spgrid

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    pass


def _emit(report: dict, path: str | None) -> None:
    if path:
        write_json(path, report)
    else:
        sys.stdout.write(dumps(report))


def _csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _scenario_config(args: argparse.Namespace) -> dict:
    """Config file first, then any flag given on the command line."""
    cfg: dict = {}
    if getattr(args, "config", None):
        cfg = dict(read_json(args.config))
    for key in ("scenario", "m", "s", "length", "nodes", "f", "lift", "tol", "path_file"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if getattr(args, "grid", None) is not None:
        g = _ints(args.grid)
        cfg["grid"] = g[0] if len(g) == 1 else g
    if "scenario" not in cfg:
        raise ConfigError("no scenario given")
    try:
        jsonschema.validate(cfg, suite.SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(exc.message) from exc
    return cfg


def cmd_verify_algebra(args) -> int:
    report = suite.algebra_report(args.nmax, args.seed)
    _emit(report, args.report)
    return EXIT_OK if report["pass"] else EXIT_FAIL


def cmd_identities(args) -> int:
    which = [w.strip() for w in args.which.split(",")]
    bad = [w for w in which if w not in suite.IDENTITIES]
    if bad:
        raise ConfigError(f"unknown identities {bad}; choose from {list(suite.IDENTITIES)}")
    report = suite.identities_report(which, _ints(args.grid), args.m, args.seed, args.metric, args.amplitude, args.tol)
    _emit(report, args.report)
    if args.csv:
        _csv(args.csv, ["identity", "grid", "residual_rel", "residual_abs"],
             [[r["identity"], r["grid"][0], r["residual_rel"], r["residual_abs"]] for r in report["rows"]])
    return EXIT_OK if report.get("pass", True) else EXIT_FAIL


def cmd_construct(args) -> int:
    cfg = _scenario_config(args)
    try:
        data = suite.build_scenario(cfg)
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    out = args.out or cfg.get("out") or f"{cfg['scenario']}.spgrid"
    write_spgrid(out, data.psi.values, data.grid.shape, "spinor", suite.construction_meta(data, cfg))
    sys.stdout.write(f"wrote {out}\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    src = args.infile or args.file
    if not src:
        raise ConfigError("verify needs an input file (positional or --in)")
    try:
        values, kind, meta = read_spgrid(src)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if kind != "spinor" or meta is None:
        raise ConfigError("verify needs a spinor SPGRID file with its JSON sidecar")
    data = suite.data_from_file(values, meta)
    tol = args.tol if args.tol is not None else meta["config"].get("tol", 1e-9)
    report = suite.verify_report(data, tol, consequences=not args.no_consequences, config=meta["config"])
    _emit(report, args.report)
    return EXIT_OK if report["pass"] else EXIT_FAIL


def cmd_holonomy(args) -> int:
    cfg = _scenario_config(args)
    if cfg["scenario"] not in ("rotating", "tumbling"):
        raise ConfigError("holonomy needs a closed loop scenario (rotating or tumbling)")
    report = suite.holonomy_report(cfg)
    _emit(report, args.report)
    return EXIT_OK if report["pass"] else EXIT_FAIL


def cmd_gauge_fix(args) -> int:
    if args.infile:
        try:
            path = suite.path_from_json(read_json(args.infile))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad path file: {exc}") from exc
        if path.grid is None:
            # constant slices: realise them on a grid of the requested size
            grid = TorusGrid((args.grid,) * path.m)
            lifted = path.samples.reshape((path.axis.size,) + (1,) * path.m + (path.m, path.m))
            samples = np.broadcast_to(lifted, (path.axis.size,) + grid.shape + (path.m, path.m))
            path = MetricPath(path.axis, samples.copy(), grid=grid, closed=path.closed)
        cfg = {"in": args.infile}
    else:
        cfg = {"m": args.m, "grid": args.grid, "s": args.s}
        path, _ = suite.polluted_path(cfg, args.seed)
    report, res = suite.gauge_report(path, args.iterations, args.tol)
    report["config"] = cfg
    _emit(report, args.report)
    if args.csv:
        _csv(args.csv, ["s", "divergence_before", "divergence_after"],
             [[s, b, a] for s, b, a in zip(path.nodes, report["divergence_before"], report["divergence_after"])])
    if args.out:
        write_json(args.out, suite.path_to_json(res.path))
    return EXIT_OK if report["pass"] else EXIT_FAIL


def cmd_list_checks(args) -> int:
    width = max(map(len, suite.CHECKS))
    for cid, (statement, command) in suite.CHECKS.items():
        sys.stdout.write(f"{cid:<{width}}  {command:<14}  {statement}\n")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = read_json(args.config) if args.config else dict(suite.DEFAULT_CONFIG)
    if args.seed is not None:
        cfg["seed"] = args.seed
    try:
        suite.validate_config(cfg)
    except jsonschema.ValidationError as exc:
        raise ConfigError(exc.message) from exc
    report = suite.run_suite(cfg)
    _emit(report, args.report)
    return EXIT_OK if report["pass"] else EXIT_FAIL


def _scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON scenario file; flags override its keys")
    p.add_argument("--scenario", choices=["minkowski", "cone", "generic", "rotating", "tumbling", "path-file"])
    p.add_argument("--m", type=int)
    p.add_argument("--grid", help="points per axis, one value or a comma list")
    p.add_argument("--s", help="open s-interval a:b:n")
    p.add_argument("--length", type=float, help="loop length")
    p.add_argument("--nodes", type=int, help="s-nodes on a loop")
    p.add_argument("--f", help="lapse term: a number or an expression in s")
    p.add_argument("--lift", type=int, choices=[1, -1])
    p.add_argument("--tol", type=float)
    p.add_argument("--path-file", dest="path_file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spincauchy", description="Spinorial initial data on flat tori: construction and checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-algebra", help="Clifford relations, embeddings, orientation maps, spin generators")
    p.add_argument("--nmax", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report")
    p.set_defaults(func=cmd_verify_algebra)

    p = sub.add_parser("identities", help="deformation identities for the Dirac operator under grid refinement")
    p.add_argument("--which", default=",".join(suite.IDENTITIES), help=f"comma list from {', '.join(suite.IDENTITIES)}")
    p.add_argument("--grid", default="16,32,64")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--metric", choices=["flat", "conformal"], default="flat")
    p.add_argument("--amplitude", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float)
    p.add_argument("--report")
    p.add_argument("--csv", help="write the residual-vs-grid table here")
    p.set_defaults(func=cmd_identities)

    p = sub.add_parser("construct", help="build Psi = F phi_s for a scenario and write it as SPGRID")
    _scenario_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="constraint equations and the type-I chain for a constructed file")
    p.add_argument("file", nargs="?")
    p.add_argument("--in", dest="infile", help="same as the positional file")
    p.add_argument("--tol", type=float)
    p.add_argument("--no-consequences", action="store_true")
    p.add_argument("--report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("holonomy", help="loop holonomy and the fitting condition")
    _scenario_flags(p)
    p.add_argument("--report")
    p.set_defaults(func=cmd_holonomy)

    p = sub.add_parser("gauge-fix", help="move a path of metrics to divergence-free gauge (default: a polluted flat path)")
    p.add_argument("--in", dest="infile", help="path JSON to gauge-fix instead of the built-in polluted path")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--grid", type=int, default=24)
    p.add_argument("--s", default="0:1:16")
    p.add_argument("--iterations", type=int, default=1)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report")
    p.add_argument("--csv")
    p.add_argument("--out", help="write the gauge-fixed path as JSON")
    p.set_defaults(func=cmd_gauge_fix)

    p = sub.add_parser("list-checks", help="print every check with the statement it verifies")
    p.set_defaults(func=cmd_list_checks)

    p = sub.add_parser("run", help="run the whole configured suite")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--report")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, jsonschema.ValidationError, FileNotFoundError) as exc:
        msg = exc.message if isinstance(exc, jsonschema.ValidationError) else str(exc)
        sys.stderr.write(f"invalid configuration: {msg}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
