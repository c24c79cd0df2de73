"""Command-line scenario runner: one subcommand per scenario, CSV out.

Exit codes: 0 success, 2 schema/config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .scenarios import (
    SCENARIO_IDS,
    ConfigError,
    NumericalError,
    ScenarioConfig,
    emit_csv,
    run_scenario,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randwit",
        description="Reproduce witness error-suppression curves and sweeps as CSV.",
    )
    sub = parser.add_subparsers(dest="scenario", required=True)
    for scenario in SCENARIO_IDS:
        p = sub.add_parser(scenario, help=f"run the {scenario} scenario")
        p.add_argument("--config", help="JSON config file (strict schema)")
        p.add_argument("--out", help="output CSV path (default <scenario>.csv)")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--reproducible", action="store_true",
                       help="suppress the timestamp line for byte-identical reruns")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker processes for row-parallel scenarios")
    return parser


def _diagnostic(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "detail": message}), file=sys.stderr)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        raw = None
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                raw = json.load(fh)
            if not isinstance(raw, dict):
                raise ConfigError("config must be a JSON object")
        cfg = ScenarioConfig.build(
            args.scenario,
            raw=raw,
            seed=args.seed,
            out=args.out,
            reproducible=args.reproducible,
            jobs=args.jobs,
        )
    except (ConfigError, json.JSONDecodeError, OSError) as exc:
        _diagnostic("schema", str(exc))
        return 2
    try:
        table = run_scenario(cfg)
        path = emit_csv(table, cfg.output_path())
    except ConfigError as exc:
        _diagnostic("schema", str(exc))
        return 2
    except NumericalError as exc:
        _diagnostic("numerical", str(exc))
        return 3
    print(f"{cfg.scenario}: {len(table.rows)} rows -> {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
