"""Flat key=value run configs and the experiment registry.

A config file is one `key = value` pair per line with `#` comments. No
nesting: list-valued parameters are comma-separated scalars. Every experiment
registers its parameter names, types, and defaults here, so a config can be
fully validated before any sampling starts and `emit_default_config` output
round-trips through `parse_config`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .errors import ParseError, ValidationError
from .experiments import (
    SeparationConfig,
    run_excursion_experiment,
    run_fluctuation_experiment,
    run_ordering_experiment,
    run_separation_experiment,
    run_z_lowerbound_experiment,
)

OUTPUT_FORMATS = ("json-lines", "csv")


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    parameters: dict
    seed: int
    output_path: str | None
    output_format: str
    threads: int


@dataclass(frozen=True)
class _ExperimentEntry:
    # parameter name -> kind in {"int", "real", "real_list"}; order is the
    # emit order, defaults double as the documented example values
    kinds: dict
    defaults: dict
    dispatch: Callable
    precheck: Callable | None = None


def _separation_params(p: dict, seed: int) -> SeparationConfig:
    return SeparationConfig(
        k=p["k"], L=p["L"], t=p["t"], M=p["M"], n_samples=p["n_samples"], seed=seed
    )


def _separation_precheck(p: dict, seed: int) -> list:
    try:
        _separation_params(p, seed)
    except ValidationError as err:
        return err.problems
    return []


REGISTRY = {
    "separation": _ExperimentEntry(
        kinds={"k": "int", "L": "real", "t": "real", "M": "real", "n_samples": "int"},
        defaults={"k": 1, "L": 1.0, "t": 1000.0, "M": 1.0, "n_samples": 4000},
        dispatch=lambda p, seed, threads: run_separation_experiment(
            _separation_params(p, seed), threads=threads
        ),
        precheck=_separation_precheck,
    ),
    "z_lowerbound": _ExperimentEntry(
        kinds={"k": "int", "L": "real", "t": "real", "M": "real", "n_samples": "int"},
        defaults={"k": 2, "L": 1.0, "t": 100.0, "M": 1.0, "n_samples": 2000},
        dispatch=lambda p, seed, threads: run_z_lowerbound_experiment(
            _separation_params(p, seed), threads=threads
        ),
        precheck=_separation_precheck,
    ),
    "ordering": _ExperimentEntry(
        kinds={
            "k": "int",
            "t_list": "real_list",
            "gap": "real",
            "rho": "real",
            "n_samples": "int",
        },
        defaults={
            "k": 2,
            "t_list": [1.0, 8.0, 64.0],
            "gap": 1.0,
            "rho": 0.25,
            "n_samples": 600,
        },
        dispatch=lambda p, seed, threads: run_ordering_experiment(
            k=p["k"],
            t_list=p["t_list"],
            gap=p["gap"],
            rho=p["rho"],
            n_samples=p["n_samples"],
            seed=seed,
            threads=threads,
        ),
    ),
    "fluctuation": _ExperimentEntry(
        kinds={
            "d": "real",
            "K_list": "real_list",
            "boundary_box": "real",
            "n_samples": "int",
        },
        defaults={
            "d": 0.25,
            "K_list": [1.0, 2.0, 3.0],
            "boundary_box": 2.0,
            "n_samples": 1200,
        },
        dispatch=lambda p, seed, threads: run_fluctuation_experiment(
            d=p["d"],
            K_list=p["K_list"],
            boundary_box=p["boundary_box"],
            n_samples=p["n_samples"],
            seed=seed,
            threads=threads,
        ),
    ),
    "excursion": _ExperimentEntry(
        kinds={
            "L": "real",
            "M": "real",
            "lam": "real",
            "x": "real",
            "y": "real",
            "interval_left": "real",
            "interval_right": "real",
            "n_samples": "int",
        },
        defaults={
            "L": 1.0,
            "M": 1.0,
            "lam": 4.0,
            "x": 0.0,
            "y": 0.0,
            "interval_left": 0.0,
            "interval_right": 4.0,
            "n_samples": 20000,
        },
        dispatch=lambda p, seed, threads: run_excursion_experiment(
            L=p["L"],
            M=p["M"],
            lam=p["lam"],
            x=p["x"],
            y=p["y"],
            interval=(p["interval_left"], p["interval_right"]),
            n_samples=p["n_samples"],
            seed=seed,
            threads=threads,
        ),
    ),
}


def _coerce(key: str, kind: str, token: str, problems: list):
    token = token.strip()
    try:
        if kind == "int":
            return int(token, 10)
        if kind == "real":
            return float(token)
        parts = [s for s in token.split(",") if s.strip()]
        if not parts:
            raise ValueError("empty list")
        return [float(s) for s in parts]
    except ValueError:
        problems.append(f"{key}: cannot read {token!r} as {kind}")
        return None


def _format_value(kind: str, value) -> str:
    if kind == "int":
        return str(int(value))
    if kind == "real":
        return f"{float(value):.17g}"
    return ", ".join(f"{float(v):.17g}" for v in value)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a flat config; collects every problem, not just the first."""
    pairs: dict = {}
    parse_problems: list = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            parse_problems.append(f"line {lineno}: expected key = value, got {raw.strip()!r}")
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            parse_problems.append(f"line {lineno}: missing key before '='")
            continue
        if key in pairs:
            parse_problems.append(f"line {lineno}: duplicate key {key!r}")
            continue
        pairs[key] = value.strip()
    if parse_problems:
        raise ParseError("; ".join(parse_problems))

    problems: list = []
    experiment = pairs.pop("experiment", None)
    if experiment is None:
        raise ValidationError(["experiment required"])
    if experiment not in REGISTRY:
        known = ", ".join(sorted(REGISTRY))
        raise ValidationError([f"unknown experiment {experiment!r}; known: {known}"])
    entry = REGISTRY[experiment]

    if "seed" not in pairs:
        problems.append("seed required")
        seed = 0
    else:
        seed = _coerce("seed", "int", pairs.pop("seed"), problems) or 0
    threads = 1
    if "threads" in pairs:
        threads = _coerce("threads", "int", pairs.pop("threads"), problems)
        threads = 1 if threads is None else threads
    output_format = pairs.pop("output_format", "json-lines")
    if output_format not in OUTPUT_FORMATS:
        problems.append(
            f"output_format: {output_format!r} is not one of {', '.join(OUTPUT_FORMATS)}"
        )
    output_path = pairs.pop("output_path", None)

    params = dict(entry.defaults)
    for key, token in pairs.items():
        if key not in entry.kinds:
            problems.append(f"{key}: not a parameter of experiment {experiment!r}")
            continue
        value = _coerce(key, entry.kinds[key], token, problems)
        if value is not None:
            params[key] = value
    if not problems and entry.precheck is not None:
        problems.extend(entry.precheck(params, seed))
    if problems:
        raise ValidationError(problems)
    return RunConfig(
        experiment=experiment,
        parameters=params,
        seed=seed,
        output_path=output_path,
        output_format=output_format,
        threads=threads,
    )


def emit_default_config(experiment: str) -> str:
    """Default config text for one experiment; round-trips through parse_config."""
    if experiment not in REGISTRY:
        known = ", ".join(sorted(REGISTRY))
        raise ValidationError([f"unknown experiment {experiment!r}; known: {known}"])
    entry = REGISTRY[experiment]
    lines = [f"experiment = {experiment}", "seed = 0"]
    lines += [
        f"{key} = {_format_value(kind, entry.defaults[key])}"
        for key, kind in entry.kinds.items()
    ]
    lines += ["threads = 1", "output_format = json-lines"]
    return "\n".join(lines) + "\n"


def run_experiment(config: RunConfig):
    """Dispatch a validated config to its experiment runner."""
    entry = REGISTRY[config.experiment]
    return entry.dispatch(config.parameters, config.seed, config.threads)
