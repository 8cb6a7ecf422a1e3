"""Batch runner: parse a config, run one experiment, write a structured report.

Reports are deterministic for a given (config, seed) at threads = 1: reals are
fixed to 17 significant digits, row order follows the experiment, and nothing
time-dependent goes into the file. Wall time and other diagnostics go to
standard error instead.

Exit codes: 0 all checks passed, 1 the run finished but a check failed,
2 configuration or execution error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time

from . import __version__
from .config import REGISTRY, RunConfig, emit_default_config, parse_config, run_experiment
from .errors import GibbsLinesError

OUTPUT_DIR_ENV = "GIBBSLINES_OUTPUT_DIR"
_FIELDS = ("kind", "label", "mean", "stderr", "n_samples", "seed", "passed", "detail")


def report_rows(report, config: RunConfig) -> list:
    """Flatten a report into ordered rows shared by both output formats."""
    entry = REGISTRY[config.experiment]
    rows = [
        {"kind": "meta", "label": "version", "detail": __version__},
        {"kind": "meta", "label": "experiment", "detail": config.experiment},
        {"kind": "meta", "label": "seed", "detail": str(config.seed)},
        {"kind": "meta", "label": "threads", "detail": str(config.threads)},
    ]
    for key, kind in entry.kinds.items():
        value = config.parameters[key]
        if kind == "int":
            text = str(int(value))
        elif kind == "real":
            text = f"{float(value):.17g}"
        else:
            text = ", ".join(f"{float(v):.17g}" for v in value)
        rows.append({"kind": "meta", "label": f"config.{key}", "detail": text})
    for label, est in report.estimates:
        rows.append(
            {
                "kind": "estimate",
                "label": label,
                "mean": f"{est.mean:.17g}",
                "stderr": f"{est.stderr:.17g}",
                "n_samples": str(est.n_samples),
                "seed": str(est.seed),
            }
        )
    for label, ok, detail in report.checks:
        rows.append(
            {"kind": "check", "label": label, "passed": "true" if ok else "false", "detail": detail}
        )
    return rows


def render_json_lines(rows: list) -> str:
    out = []
    for row in rows:
        line = {}
        for key in _FIELDS:
            if key not in row:
                continue
            if key in ("mean", "stderr"):
                line[key] = float(row[key])
            elif key in ("n_samples", "seed"):
                line[key] = int(row[key])
            elif key == "passed":
                line[key] = row[key] == "true"
            else:
                line[key] = row[key]
        # re-render reals at fixed precision: json.dumps would use repr
        parts = []
        for key, value in line.items():
            if key in ("mean", "stderr"):
                parts.append(f'"{key}": {value:.17g}')
            elif isinstance(value, bool):
                parts.append(f'"{key}": {"true" if value else "false"}')
            elif isinstance(value, int):
                parts.append(f'"{key}": {value}')
            else:
                parts.append(f'"{key}": {json.dumps(value)}')
        out.append("{" + ", ".join(parts) + "}")
    return "\n".join(out) + "\n"


def render_csv(rows: list) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=_FIELDS, restval="", lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def default_output_path(config: RunConfig) -> str:
    directory = os.environ.get(OUTPUT_DIR_ENV, ".")
    ext = "jsonl" if config.output_format == "json-lines" else "csv"
    return os.path.join(directory, f"{config.experiment}_seed{config.seed}.{ext}")


def _cmd_run(args) -> int:
    try:
        with open(args.config_file, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        print(f"error: cannot read config: {err}", file=sys.stderr)
        return 2
    try:
        config = parse_config(text)
        if args.seed is not None or args.threads is not None or args.output is not None:
            config = RunConfig(
                experiment=config.experiment,
                parameters=config.parameters,
                seed=config.seed if args.seed is None else args.seed,
                output_path=config.output_path if args.output is None else args.output,
                output_format=config.output_format,
                threads=config.threads if args.threads is None else args.threads,
            )
        started = time.perf_counter()
        report = run_experiment(config)
        elapsed = time.perf_counter() - started
    except GibbsLinesError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    path = config.output_path or default_output_path(config)
    rows = report_rows(report, config)
    text_out = render_json_lines(rows) if config.output_format == "json-lines" else render_csv(rows)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text_out)
    n_checks = len(report.checks)
    n_ok = sum(1 for _, ok, _ in report.checks if ok)
    print(
        f"{config.experiment}: {n_ok}/{n_checks} checks passed, "
        f"wall time {elapsed:.3f}s, report at {path}",
        file=sys.stderr,
    )
    return 0 if report.passed else 1


def _cmd_emit(args) -> int:
    try:
        sys.stdout.write(emit_default_config(args.experiment))
    except GibbsLinesError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0


def _cmd_list(_args) -> int:
    for name in sorted(REGISTRY):
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gibbslines",
        description="Monte Carlo experiments on ordered Brownian ensembles with soft exponential interaction",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one experiment from a config file")
    p_run.add_argument("config_file")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--threads", type=int, default=None, help="override the thread count")
    p_run.add_argument("--output", default=None, help="override the report path")
    p_run.set_defaults(func=_cmd_run)
    p_emit = sub.add_parser(
        "emit-default-config", help="print a default config for one experiment"
    )
    p_emit.add_argument("experiment")
    p_emit.set_defaults(func=_cmd_emit)
    p_list = sub.add_parser("list-experiments", help="list registered experiment names")
    p_list.set_defaults(func=_cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)
