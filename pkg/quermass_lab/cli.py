#!/usr/bin/env python3
"""
Command-line front end.

    python -m quermass_lab gen --family random_core --dim 3 --seed 7 -o body.json
    python -m quermass_lab quermass body.json --method mc --samples 200000
    python -m quermass_lab check body.json --all
    python -m quermass_lab kubota body.json --k 1 --j 0 --rotations 500
    python -m quermass_lab symbolic --n-max 32
    python -m quermass_lab campaign campaign.json
    python -m quermass_lab doctor

Exit codes: 0 every verdict holds or is an equality, 1 something was
violated (or a check failed), 2 usage, configuration or numeric error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd

from quermass_lab.bodies import circumradius, diameter, lambda_of, read_body_file, write_body_file, dump_body
from quermass_lab.campaign import load_campaign_config, run_campaign
from quermass_lab.errors import ConfigError, QuermassError
from quermass_lab.inequality_suite import (
    InequalityReport,
    Tolerance,
    bokowski_heil,
    evaluate_all,
    reverse_isodiametric,
    reverse_isoperimetric,
    reverse_triple,
    write_csv,
    write_jsonl,
)
from quermass_lab.integral_geometry import kubota_check
from quermass_lab.quermass_engine import mc_steiner_fit, quermass
from quermass_lab.sampling import BodySpec, generate, load_spec
from quermass_lab.settings import ToolkitSettings, configure_logging, load_settings
from quermass_lab.symbolic_poly import run_symbolic_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_ERROR = 2


def _int_triple(text: str) -> List[int]:
    try:
        parts = [int(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected i,j,k got {text!r}")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three indices, got {text!r}")
    return parts


def _float_list(text: str) -> List[float]:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quermass_lab", description="Quermassintegral inequality toolkit")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    parser.add_argument("--threads", type=int, help="Worker threads (overrides QMC_THREADS)")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="Generate a seeded random body")
    gen.add_argument("--spec", type=Path, help="BodySpec JSON file (other flags are ignored)")
    gen.add_argument("--family", choices=["random_core", "sausage", "ball", "flat_core"], default="random_core")
    gen.add_argument("--dim", type=int, default=3)
    gen.add_argument("--core-dim", type=int)
    gen.add_argument("--vertices", type=int, default=8, help="Core vertex count")
    gen.add_argument("--scale", type=float, default=1.0, help="Core box half-width")
    gen.add_argument("--radius", type=float, default=1.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("-o", "--output", type=Path, help="Write the body here instead of stdout")

    def add_route_flags(p):
        p.add_argument("--method", choices=["auto", "exact", "mc"], default="auto")
        p.add_argument("--samples", type=int, default=1_000_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--t-grid", type=_float_list, help="Comma-separated parallel distances for the MC fit")

    qm = sub.add_parser("quermass", help="Compute W_0..W_d of a body")
    qm.add_argument("body", type=Path)
    add_route_flags(qm)
    qm.add_argument("-o", "--output", type=Path)
    qm.add_argument("--plot-csv", type=Path, help="Steiner-fit plot data (MC route only)")

    check = sub.add_parser("check", help="Evaluate inequalities on a body")
    check.add_argument("body", type=Path)
    add_route_flags(check)
    which = check.add_mutually_exclusive_group()
    which.add_argument("--all", action="store_true", help="Every applicable inequality (default)")
    which.add_argument("--triple", type=_int_triple, metavar="I,J,K")
    which.add_argument("--isoperimetric", action="store_true")
    which.add_argument("--isodiametric", type=int, nargs="?", const=-1, metavar="I",
                       help="One index, or every index when omitted")
    which.add_argument("--bokowski-heil", type=_int_triple, metavar="I,J,K")
    check.add_argument("--jsonl", type=Path)
    check.add_argument("--csv", type=Path)

    kub = sub.add_parser("kubota", help="Monte-Carlo check of Kubota's formula")
    kub.add_argument("body", type=Path)
    kub.add_argument("--k", type=int, required=True)
    kub.add_argument("--j", type=int, default=0)
    kub.add_argument("--rotations", type=int, default=500)
    kub.add_argument("--seed", type=int, default=0)
    kub.add_argument("--samples", type=int, default=1_000_000, help="MC samples for the right-hand side")

    sym = sub.add_parser("symbolic", help="Exact polynomial identity suite")
    sym.add_argument("--n-max", type=int, default=64)

    camp = sub.add_parser("campaign", help="Run a randomized campaign from a config file")
    camp.add_argument("config", type=Path)
    camp.add_argument("--progress", action="store_true", help="Show a progress bar")

    sub.add_parser("doctor", help="Check dependencies and run a numeric smoke test")
    return parser


def _tolerance(settings: ToolkitSettings) -> Tolerance:
    return Tolerance(exact_tol=settings.exact_tol, sigma=settings.mc_sigma)


def _compute(args, body, settings: ToolkitSettings):
    return quermass(body, method=args.method, samples=args.samples, t_grid=args.t_grid, seed=args.seed,
                    chunk_size=settings.chunk_size, threads=settings.threads,
                    max_iter=settings.projection_max_iter)


def _emit(reports: Sequence[InequalityReport]) -> int:
    for report in reports:
        print(report.to_json())
    violated = sum(1 for r in reports if r.verdict == "violated")
    equal = sum(1 for r in reports if r.verdict == "equality")
    icon = "❌" if violated else "✅"
    print(f"{icon} {len(reports)} checks: {violated} violated, {equal} equality", file=sys.stderr)
    return EXIT_VIOLATED if violated else EXIT_OK


def cmd_gen(args, settings: ToolkitSettings) -> int:
    if args.spec is not None:
        spec = load_spec(args.spec.read_text())
    else:
        spec = load_spec(dict(dim=args.dim, family=args.family, core_dim=args.core_dim,
                              core_vertex_count=args.vertices, core_scale=args.scale,
                              radius=args.radius, seed=args.seed))
    body = generate(spec)
    if args.output:
        write_body_file(body, args.output)
    else:
        print(dump_body(body))
    return EXIT_OK


def cmd_quermass(args, settings: ToolkitSettings) -> int:
    body = read_body_file(args.body)
    if args.plot_csv is not None and args.method == "mc":
        fit = mc_steiner_fit(body, samples=args.samples, t_grid=args.t_grid, seed=args.seed,
                             chunk_size=settings.chunk_size, threads=settings.threads,
                             max_iter=settings.projection_max_iter)
        W = fit.quermass
        args.plot_csv.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame({"t": fit.t_grid, "volume": fit.volumes, "fitted": fit.fitted}).to_csv(args.plot_csv, index=False)
    else:
        W = _compute(args, body, settings)
    if args.output:
        args.output.parent.mkdir(parents=True, exist_ok=True)
        args.output.write_text(W.to_json() + "\n")
    else:
        print(W.to_json())
    return EXIT_OK


def cmd_check(args, settings: ToolkitSettings) -> int:
    body = read_body_file(args.body)
    W = _compute(args, body, settings)
    tol = _tolerance(settings)

    if args.triple is not None:
        reports = [reverse_triple(W, lambda_of(body), *args.triple, body=body, tolerance=tol)]
    elif args.isoperimetric:
        reports = [reverse_isoperimetric(W, lambda_of(body), body=body, tolerance=tol)]
    elif args.isodiametric is not None:
        lam, D = lambda_of(body), diameter(body)
        indices = range(body.dim) if args.isodiametric < 0 else [args.isodiametric]
        reports = [reverse_isodiametric(W, lam, D, i, body=body, tolerance=tol) for i in indices]
    elif args.bokowski_heil is not None:
        reports = [bokowski_heil(W, circumradius(body), *args.bokowski_heil, body=body, tolerance=tol)]
    else:
        reports = evaluate_all(W, body, tolerance=tol)

    if args.jsonl:
        write_jsonl(reports, args.jsonl)
    if args.csv:
        write_csv(reports, args.csv)
    return _emit(reports)


def cmd_kubota(args, settings: ToolkitSettings) -> int:
    body = read_body_file(args.body)
    result = kubota_check(body, args.k, args.j, rotations=args.rotations, seed=args.seed, rhs_samples=args.samples,
                          sigma=settings.mc_sigma, exact_tol=settings.exact_tol, threads=settings.threads)
    print(result.to_json())
    icon = "✅" if result.passed else "⚠️ "
    print(f"{icon} lhs={result.lhs:.6g} ± {result.stderr:.2g}, rhs={result.rhs:.6g} ± {result.rhs_stderr:.2g}",
          file=sys.stderr)
    return EXIT_OK if result.passed else EXIT_VIOLATED


def cmd_symbolic(args, settings: ToolkitSettings) -> int:
    result = run_symbolic_suite(n_max=args.n_max)
    for check in result.failures:
        print(f"❌ {check.name} {check.parameters}", file=sys.stderr)
    print(result.model_dump_json())
    icon = "✅" if result.passed else "❌"
    print(f"{icon} {len(result.checks)} identities, {len(result.failures)} failed", file=sys.stderr)
    return EXIT_OK if result.passed else EXIT_VIOLATED


def cmd_campaign(args, settings: ToolkitSettings) -> int:
    config = load_campaign_config(args.config)
    result = run_campaign(config, settings, progress=args.progress)
    icon = "❌" if result.violated else "✅"
    print(f"{icon} {result.bodies} bodies, {len(result.reports)} reports, {result.violated} violated", file=sys.stderr)
    if result.kubota:
        print(f"📐 Kubota: {len(result.kubota) - result.kubota_misses}/{len(result.kubota)} within band",
              file=sys.stderr)
    return result.exit_code


def cmd_doctor(args, settings: ToolkitSettings) -> int:
    from quermass_lab.health_check import run_health_check

    return run_health_check()


COMMANDS = {
    "gen": cmd_gen,
    "quermass": cmd_quermass,
    "check": cmd_check,
    "kubota": cmd_kubota,
    "symbolic": cmd_symbolic,
    "campaign": cmd_campaign,
    "doctor": cmd_doctor,
}


def cli_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, run one subcommand, return its exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_ERROR if e.code else EXIT_OK

    try:
        settings = load_settings()
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads must be at least 1")
            settings = settings.model_copy(update={"threads": args.threads})
        configure_logging("DEBUG" if args.verbose else settings.log_level)
        return COMMANDS[args.command](args, settings)
    except ConfigError as e:
        print(f"❌ configuration error: {e}", file=sys.stderr)
    except QuermassError as e:
        print(f"❌ {args.command}: {e}", file=sys.stderr)
    except OSError as e:
        print(f"❌ {args.command}: {e}", file=sys.stderr)
    return EXIT_ERROR


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
