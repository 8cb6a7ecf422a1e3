#!/usr/bin/env python3
"""Run every registered experiment at its default budget and collect reports.

Writes one report file per experiment (json-lines by default) into the
output directory and prints a one-line check summary per run. Exit status
is 0 only if every check of every run passed.

    python3 scripts/run_all_experiments.py --seed 7 --output-dir reports
"""

import argparse
import dataclasses
import sys
import time
from pathlib import Path

from gibbslines.cli import default_output_path, render_csv, render_json_lines, report_rows
from gibbslines.config import REGISTRY, emit_default_config, parse_config, run_experiment


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=None, help="override every config's seed")
    ap.add_argument("--output-dir", default="reports", help="where report files go")
    ap.add_argument("--format", choices=("json-lines", "csv"), default="json-lines")
    ap.add_argument(
        "--only", action="append", default=None, metavar="NAME",
        help="run just this experiment (repeatable)",
    )
    args = ap.parse_args(argv)

    names = args.only if args.only else sorted(REGISTRY)
    unknown = [n for n in names if n not in REGISTRY]
    if unknown:
        ap.error(f"unknown experiment(s): {', '.join(unknown)}; known: {', '.join(sorted(REGISTRY))}")

    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    all_ok = True
    for name in names:
        config = parse_config(emit_default_config(name))
        if args.seed is not None:
            config = dataclasses.replace(config, seed=args.seed)
        config = dataclasses.replace(config, output_format=args.format, output_path=None)

        t0 = time.perf_counter()
        report = run_experiment(config)
        elapsed = time.perf_counter() - t0

        rows = report_rows(report, config)
        text = render_json_lines(rows) if args.format == "json-lines" else render_csv(rows)
        path = out_dir / Path(default_output_path(config)).name
        path.write_text(text)

        n_ok = sum(1 for _, ok, _ in report.checks if ok)
        status = "ok" if report.passed else "FAIL"
        print(
            f"[{status}] {name}: {n_ok}/{len(report.checks)} checks, "
            f"{elapsed:.1f}s, report at {path}"
        )
        if not report.passed:
            all_ok = False
            for label, ok, detail in report.checks:
                if not ok:
                    print(f"    failed {label}: {detail}", file=sys.stderr)

    return 0 if all_ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
