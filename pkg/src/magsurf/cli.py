"""Command line front end.

Exit status: 0 when every requested verdict passes, 1 on a verification
failure (reports are still written), 2 on a configuration error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .pipeline import ConfigError, load_config, run_config

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="magsurf", description="Build, transform and verify plasma equilibria "
                                "with prescribed magnetic surfaces.")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out-dir", default="magsurf_out", help="directory for reports and exports")
    p.add_argument("--grid", type=int, help="override grid resolution per axis")
    p.add_argument("--tolerance", type=float, help="override residual tolerance")
    p.add_argument("--seed-check", action="store_true", help="run the built-in self-test and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.seed_check:
        from . import selfcheck

        results = selfcheck.run()
        for name, ok, detail in results:
            print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_FAIL
    if not args.config:
        print("error: --config is required (or use --seed-check)", file=sys.stderr)
        return EXIT_CONFIG
    if args.grid is not None and args.grid < 1:
        print("error: --grid must be positive", file=sys.stderr)
        return EXIT_CONFIG
    if args.tolerance is not None and not args.tolerance > 0:
        print("error: --tolerance must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        res = run_config(cfg, args.out_dir, grid_n=args.grid, tolerance=args.tolerance)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for label, info in res.summary["tasks"].items():
        print(f"{label}: {info.get('verdict', 'done') if isinstance(info, dict) else info}")
    print(f"status: {res.summary['status']} ({len(res.artifacts)} artifacts in {args.out_dir})")
    return res.status


if __name__ == "__main__":
    raise SystemExit(main())
