"""Command-line entry point ``rabi-lab``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .analytics import a2_boundary_roots, critical_coupling_dimensionless
from .figures import FIGURES, WignerSpec, compute_wigner, figure_target, wigner_csv
from .sweep import ConfigError, SweepSpec, _atomic_write, cache_clear, cache_stats, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rabi-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--workers", type=int, default=None, help="parallel workers (default: cores)")
        p.add_argument("--no-cache", action="store_true", help="skip the result cache")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--tol", type=float, default=None, help="override the solver tolerance")

    p = sub.add_parser("sweep", help="run a sweep from a TOML config")
    p.add_argument("config")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    common(p)

    p = sub.add_parser("figure", help="write the data behind one figure")
    p.add_argument("name", help=", ".join(FIGURES))
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--quick", action="store_true", help="coarse grids for smoke runs")
    p.add_argument("--frame", choices=("lab", "squeezed"), default="lab",
                   help="frame of the Wigner figures")
    common(p)

    p = sub.add_parser("critical", help="critical coupling for given couplings")
    p.add_argument("--j-tilde", type=float, required=True)
    p.add_argument("--d-tilde", type=float, default=0.0)

    p = sub.add_parser("wigner", help="Wigner grid from a TOML config")
    p.add_argument("config")
    p.add_argument("--out", default=None, help="output CSV (default: stdout)")

    p = sub.add_parser("cache", help="inspect or clear the result cache")
    p.add_argument("action", choices=("stats", "clear"))
    return parser


def _critical(args) -> int:
    j, d = args.j_tilde, args.d_tilde
    if d == 0:
        try:
            print(f"g_tilde_c = {critical_coupling_dimensionless(j):.6f}")
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK
    if d < 0 or j <= 0:
        print("error: need j_tilde > 0 and d_tilde >= 0", file=sys.stderr)
        return EXIT_CONFIG
    roots = a2_boundary_roots(j, d)
    if not roots:
        print("no NP/SP boundary (no superradiant window)")
    for label, value in zip(("g_tilde_c_lower", "g_tilde_c_upper"), roots):
        print(f"{label} = {value:.6f}")
    return EXIT_OK


def _emit(text: str, out):
    if out is None:
        sys.stdout.write(text)
    else:
        _atomic_write(Path(out), text)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "critical":
            return _critical(args)
        if args.command == "cache":
            if args.action == "stats":
                print(json.dumps(cache_stats(), indent=1))
            else:
                print(f"removed {cache_clear()} entries")
            return EXIT_OK
        if args.command == "sweep":
            spec = SweepSpec.load(args.config)
            if args.tol is not None:
                spec = replace(spec, tol=args.tol)
            result = run_sweep(spec, workers=args.workers, use_cache=not args.no_cache)
            _emit(result.to_csv() if args.format == "csv" else result.to_json(), args.out)
            return EXIT_PARTIAL if result.failures else EXIT_OK
        if args.command == "wigner":
            spec = WignerSpec.load(args.config)
            data = compute_wigner(spec)
            _emit(wigner_csv(data["grid"]), args.out)
            print(json.dumps(data["meta"], sort_keys=True), file=sys.stderr)
            return EXIT_OK
        if args.command == "figure":
            if args.name not in FIGURES:
                print(f"error: unknown figure {args.name!r}; valid names are {', '.join(FIGURES)}",
                      file=sys.stderr)
                return EXIT_CONFIG
            out = figure_target(args.name, args.out, quick=args.quick, workers=args.workers,
                                use_cache=not args.no_cache, fmt=args.format, frame=args.frame)
            for path in out.files:
                print(path)
            failures = sum(getattr(s, "failures", 0) for s in out.data.values()
                           if hasattr(s, "failures"))
            return EXIT_PARTIAL if failures else EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
