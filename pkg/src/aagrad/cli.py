"""Command-line experiment runner.

Verbs:
    aagrad run CONFIG [--set section.key=value ...]
    aagrad sweep CONFIG --axis {eta,m,q} --values v1,v2,... [--set ...]
    aagrad summarize DIR [--json PATH]
"""

import argparse
import sys

from .diagnostics import format_summary, summary_to_json
from .errors import AagradError, ConfigError
from .experiments import load_config, run_experiment, summarize_directory, sweep


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="aagrad",
        description="Run window-accelerated gradient and proximal solvers on "
                    "benchmark problems and write per-iteration traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run every solver in a config")
    run_p.add_argument("config", help="path to an INI experiment config")
    run_p.add_argument(
        "--set", dest="overrides", action="append", default=[],
        metavar="SECTION.KEY=VALUE", help="override any config field",
    )

    sweep_p = sub.add_parser("sweep", help="repeat a config across one axis")
    sweep_p.add_argument("config")
    sweep_p.add_argument("--axis", required=True, choices=("eta", "m", "q"))
    sweep_p.add_argument(
        "--values", required=True,
        help="comma-separated axis values, e.g. 0.1,0.2,0.4",
    )
    sweep_p.add_argument(
        "--set", dest="overrides", action="append", default=[],
        metavar="SECTION.KEY=VALUE",
    )

    sum_p = sub.add_parser("summarize", help="tabulate the traces in a directory")
    sum_p.add_argument("directory")
    sum_p.add_argument("--json", dest="json_path", default=None,
                       help="also write the table as JSON to this path")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = load_config(args.config, args.overrides)
            result = run_experiment(config)
            print(f"wrote {len(result.trace_paths)} trace(s) to {result.output_dir}")
            print(format_summary(result.summary_rows))
        elif args.command == "sweep":
            config = load_config(args.config, args.overrides)
            try:
                values = [float(v) for v in args.values.split(",") if v.strip()]
            except ValueError:
                raise ConfigError(f"cannot parse sweep values {args.values!r}") from None
            results, aggregate = sweep(config, args.axis, values)
            print(f"wrote {len(results)} run(s); aggregate at {aggregate}")
        else:
            rows, table = summarize_directory(args.directory)
            print(table)
            if args.json_path:
                with open(args.json_path, "w") as fh:
                    fh.write(summary_to_json(rows) + "\n")
    except AagradError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
