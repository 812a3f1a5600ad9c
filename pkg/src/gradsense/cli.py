"""Command line entry point.

    gradsense <command> --config <path> [--out <path>] [--format json|csv]
              [--grid <spec>] [--seed <int>]

Exit codes: 0 success, 1 validation error (bad scenario, geometry, or
arguments), 2 computation failure.
"""

from __future__ import annotations

import argparse
import sys

from ._version import __version__
from .commands import COMMANDS, run_command
from .errors import ValidationError
from .report import emit_report
from .scenario import load_scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradsense",
        description="Regional gradient observability tests, Gramians, and "
                    "initial-gradient reconstruction for diffusion systems.")
    parser.add_argument("--version", action="version", version=f"gradsense {__version__}")
    parser.add_argument("command", choices=COMMANDS, help="what to compute")
    parser.add_argument("--config", required=True, help="scenario file path")
    parser.add_argument("--out", default=None, help="write the report here instead of stdout")
    parser.add_argument("--format", default="json", choices=("json", "csv"),
                        help="report format (default json)")
    parser.add_argument("--grid", default=None,
                        help="scan grid spec, e.g. 0.1:0.9:9 or 8x8")
    parser.add_argument("--seed", default=None, type=int,
                        help="override the scenario noise seed")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        scenario = load_scenario(args.config)
        report = run_command(scenario, args.command, seed=args.seed,
                             grid_spec=args.grid)
        text = emit_report(report, args.format, args.out)
    except ValidationError as exc:
        print(f"gradsense: validation error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - map anything else to exit 2
        print(f"gradsense: computation failed: {exc}", file=sys.stderr)
        return 2
    if args.out is None:
        sys.stdout.write(text)
    else:
        print(f"gradsense: {args.command} report written to {args.out} "
              f"({report.wall_time_seconds:.3f}s)", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
