"""Command-line interface.

    kkfields verify CONFIG [--seed S] [--out DIR] [--no-plots]
    kkfields scan   CONFIG [--seed S] [--out DIR] [--no-plots]
    kkfields flow   CONFIG [--seed S] [--out DIR] [--no-plots]
    kkfields report RUNDIR [--format json|csv|both]

verify runs the residual/identity cases, scan the parameter sweeps and
obstruction certificates, flow the torus gradient flows.  Each writes
report.json, report.csv, per-case artifact CSVs and figures into the
output directory.  report re-renders an existing run directory.  The exit
code is 0 exactly when every executed case matched its expected verdict.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .suite import ConfigError, emit, load_config, run_suite


def _run_modes(args, modes: tuple[str, ...]) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    report = run_suite(cfg, seed=args.seed, modes=modes)
    out_dir = Path(args.out or cfg.get("output_dir", "kkfields_run"))
    written = emit(report, out_dir)
    if not args.no_plots:
        from .plots import render_report_figures
        written += render_report_figures(report, out_dir)
    for case in report.cases:
        state = "ok " if case.passed else "FAIL"
        print(f"[{state}] {case.case_id}: {case.verdict} (expected {case.expected})")
    print(f"wrote {len(written)} files to {out_dir}")
    return 0 if report.all_passed else 1


def _cmd_report(args) -> int:
    run_dir = Path(args.rundir)
    report_json = run_dir / "report.json"
    if not report_json.exists():
        print(f"no report.json under {run_dir}", file=sys.stderr)
        return 2
    import json

    data = json.loads(report_json.read_text())
    fmt = args.format
    if fmt in ("csv", "both"):
        print((run_dir / "report.csv").read_text(), end="")
    if fmt in ("json", "both"):
        print(report_json.read_text(), end="")
    ok = all(c["passed"] for c in data["cases"])
    return 0 if ok else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="kkfields", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, modes in (("verify", ("verify",)), ("scan", ("scan",)),
                        ("flow", ("flow",)), ("all", ("verify", "scan", "flow"))):
        p = sub.add_parser(name, help=f"run {name} cases from a config")
        p.add_argument("config")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--no-plots", action="store_true",
                       help="skip figure rendering")
        p.set_defaults(func=lambda a, m=modes: _run_modes(a, m))

    p = sub.add_parser("report", help="re-emit an existing run directory")
    p.add_argument("rundir")
    p.add_argument("--format", choices=("json", "csv", "both"), default="both")
    p.set_defaults(func=_cmd_report)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
