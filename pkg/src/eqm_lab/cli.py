"""Command-line front end.

Subcommands:
    run <config>      execute one scenario document
    suite             execute the bundled scenario corpus
    koopman <config>  execute only the classical diagnostics of a config

Exit codes: 0 all checks passed, 1 check or runtime failure, 2 config error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, parse_config, with_dt
from .runner import (
    ScenarioError,
    emit_bundled_suite,
    render_report,
    run_koopman,
    run_scenario,
    write_outputs,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eqm-lab",
        description="Nonlinear density-matrix flows, observable transport, and diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a single scenario config")
    run_p.add_argument("config", type=Path, help="path to a JSON scenario document")
    run_p.add_argument("--out-dir", type=Path, default=Path("out"))
    run_p.add_argument("--dt", type=float, default=None, help="override the integrator step")
    run_p.add_argument("--quiet", action="store_true")

    suite_p = sub.add_parser("suite", help="run the bundled scenario corpus")
    suite_p.add_argument("--out-dir", type=Path, default=Path("out"))
    suite_p.add_argument("--dt", type=float, default=None, help="override the integrator step")
    suite_p.add_argument("--quiet", action="store_true")

    koop_p = sub.add_parser("koopman", help="run the classical diagnostics of a config")
    koop_p.add_argument("config", type=Path, help="path to a JSON scenario document")
    koop_p.add_argument("--out-dir", type=Path, default=Path("out"))
    koop_p.add_argument("--quiet", action="store_true")
    return parser


def _load_config(path: Path):
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc}") from None
    return parse_config(text)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = _load_config(args.config)
            if args.dt is not None:
                cfg = with_dt(cfg, args.dt)
            tables, rows = run_scenario(cfg)
            write_outputs(args.out_dir, cfg.scenario_id, tables, rows)
            if not args.quiet:
                print(render_report(rows), end="")
            return 0 if all(r.passed for r in rows) else 1
        if args.command == "suite":
            return emit_bundled_suite(out_dir=args.out_dir, dt=args.dt, quiet=args.quiet)
        if args.command == "koopman":
            cfg = _load_config(args.config)
            rows = run_koopman(cfg)
            write_outputs(args.out_dir, cfg.scenario_id, [], rows)
            if not args.quiet:
                print(render_report(rows), end="")
            return 0 if all(r.passed for r in rows) else 1
        raise AssertionError(f"unhandled command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
