"""Command-line surface: estimate from a p-value file, run the simulation
grid, query the variance bound, or dump a model density.

Every subcommand is deterministic given its flags and seed.  Numeric output
uses 6 significant digits by default; raise --precision for full floats.
Invalid input exits 2 with a message on stderr, never a traceback.

A key=value config file (--config) supplies defaults for any long flag of
the active subcommand, with explicit flags taking precedence.  The base
seed falls back to the PI0LAB_SEED environment variable, then to 0.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .crossval import theta_hat_cr
from .efficiency import efficient_information, one_step, optimal_variance
from .histogram import theta_hat_min
from .model import MixtureParams, PValueSample, alt_density, mixture_density
from .partitions import regular
from .report import (
    figure_path_for,
    render_density_figure,
    render_mse_figure,
    summary_text,
    to_csv,
)
from .shape import theta_hat_langaas, theta_hat_oracle, theta_hat_storey
from .simulate import (
    DESK_GRID,
    ESTIMATORS,
    MODELS,
    PAPER_GRID,
    ModelSpec,
    SimConfig,
    run_simulation,
)

SEED_ENV = "PI0LAB_SEED"


class CliError(Exception):
    """User-facing error; main() prints it and exits 2."""


def read_pvalues(path: str) -> PValueSample:
    """Parse one p-value per line; a leading 'pvalue' header is allowed."""
    if path == "-":
        lines = sys.stdin.read().splitlines()
    else:
        try:
            with open(path) as fh:
                lines = fh.read().splitlines()
        except OSError as exc:
            raise CliError(f"cannot read {path}: {exc.strerror}") from exc
    values = []
    for i, raw in enumerate(lines, start=1):
        text = raw.strip().strip(",")
        if not text:
            continue
        if i == 1 and text.lower() in ("pvalue", "p_value", "p"):
            continue
        try:
            v = float(text)
        except ValueError:
            raise CliError(f"line {i}: not a number: {raw!r}") from None
        if not 0.0 <= v <= 1.0:
            raise CliError(f"line {i}: p-value out of [0, 1]: {text}")
        values.append(v)
    if not values:
        raise CliError("no p-values found in input")
    return PValueSample(np.asarray(values))


def _load_config(path: str | None) -> dict[str, str]:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            raw_lines = fh.read().splitlines()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror}") from exc
    config = {}
    for i, raw in enumerate(raw_lines, start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        if "=" not in text:
            raise CliError(f"config line {i}: expected key=value, got {raw!r}")
        key, _, value = text.partition("=")
        config[key.strip().replace("-", "_")] = value.strip()
    return config


def _convert(key: str, text: str, kind):
    try:
        if kind is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        return kind(text)
    except ValueError:
        raise CliError(f"config value for {key} is not a valid "
                       f"{kind.__name__}: {text!r}") from None


def _resolve(args, config: dict, key: str, kind, default):
    """Flag beats config beats default; flags use None sentinels."""
    flag = getattr(args, key, None)
    if kind is bool:
        if flag:
            return True
        return _convert(key, config[key], bool) if key in config else default
    if flag is not None:
        return flag
    if key in config:
        return _convert(key, config[key], kind)
    return default


def _resolve_seed(args, config: dict) -> int:
    if args.seed is not None:
        return args.seed
    if "seed" in config:
        return _convert("seed", config["seed"], int)
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CliError(f"{SEED_ENV} is not an integer: {env!r}") from None
    return 0


def _resolve_params(args, config: dict) -> ModelSpec:
    label = _resolve(args, config, "model", str, None)
    theta = _resolve(args, config, "theta", float, None)
    delta = _resolve(args, config, "delta", float, None)
    s = _resolve(args, config, "s", float, None)
    explicit = [v is not None for v in (theta, delta, s)]
    if label is not None:
        if any(explicit):
            raise CliError("give either --model or --theta/--delta/--s, not both")
        return ModelSpec.from_label(label)
    if not all(explicit):
        raise CliError("need --model or all of --theta, --delta, --s")
    return ModelSpec.from_params(MixtureParams(theta, delta, s))


def _fmt(value, precision: int) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    v = float(value)
    if math.isnan(v):
        return "nan"
    return f"%.{precision}g" % v


def _print_record(fields: dict, precision: int) -> None:
    print(",".join(fields))
    print(",".join(_fmt(v, precision) for v in fields.values()))


def cmd_estimate(args) -> int:
    config = _load_config(args.config)
    precision = _resolve(args, config, "precision", int, 6)
    pv = read_pvalues(args.input)
    method = args.method

    if method == "hist":
        cells = _resolve(args, config, "cells", int, 8)
        res = theta_hat_min(pv, regular(cells))
        extra = {"cells": res.trace["cells"], "k_hat": res.trace["cell_index"]}
    elif method == "cr":
        m_min = _resolve(args, config, "m_min", int, 2)
        m_max = _resolve(args, config, "m_max", int, 5)
        right = _resolve(args, config, "right_anchored", bool, False)
        p_mode = _parse_p(_resolve(args, config, "p", str, "auto"))
        res = theta_hat_cr(pv, m_min=m_min, m_max=m_max,
                           right_anchored=right, p_mode=p_mode)
        extra = {k: res.trace[k]
                 for k in ("m_hat", "lambda_hat", "mu_hat", "p_hat", "r_hat")}
    elif method == "storey":
        lam = _resolve(args, config, "lam", float, 0.5)
        res = theta_hat_storey(pv, lam)
        extra = {"lambda": lam}
    elif method == "langaas":
        res = theta_hat_langaas(pv)
        extra = {"x_max": res.trace["x_max"]}
    elif method == "onestep":
        delta = _resolve(args, config, "delta", float, None)
        theta_init = _resolve(args, config, "theta_init", float, None)
        if theta_init is None:
            pilot = theta_hat_min(pv).theta_hat
            theta_init = min(max(pilot, 1e-3), 1.0 - 1e-3)
        res = one_step(pv, theta_init, delta=delta)
        extra = {"theta_init": res.trace["theta_init"],
                 "delta_first": res.trace["delta_first"],
                 "delta_second": res.trace["delta_second"],
                 "fallback": res.trace["fallback"] or ""}
    elif method == "oracle":
        delta = _resolve(args, config, "delta", float, None)
        if delta is None:
            raise CliError("method oracle requires --delta")
        res = theta_hat_oracle(pv, delta)
        extra = {"delta": delta}
    else:  # pragma: no cover - argparse choices guard this
        raise CliError(f"unknown method {method!r}")

    theta = res.theta_hat
    if _resolve(args, config, "clamp", bool, False):
        theta = min(max(theta, 0.0), 1.0)
    record = {"method": res.method, "n": pv.n, "theta_hat": theta}
    record.update(extra)
    _print_record(record, precision)
    return 0


def _parse_p(text: str):
    if text in ("auto", "fixed"):
        return text
    try:
        return int(text)
    except ValueError:
        raise CliError(f"--p must be 'auto', 'fixed', or an integer, "
                       f"got {text!r}") from None


def _parse_grid(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise CliError(f"--n expects comma-separated integers, got {text!r}") \
            from None


def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    precision = _resolve(args, config, "precision", int, 6)
    spec = _resolve_params(args, config)
    if _resolve(args, config, "paper_grid", bool, False):
        grid = PAPER_GRID
    else:
        grid_text = _resolve(args, config, "n", str, None)
        grid = _parse_grid(grid_text) if grid_text is not None else DESK_GRID
    reps = _resolve(args, config, "reps", int, 100)
    est_text = _resolve(args, config, "estimators", str, ",".join(ESTIMATORS))
    estimators = tuple(e.strip() for e in est_text.split(",") if e.strip())
    seed = _resolve_seed(args, config)
    jobs = _resolve(args, config, "jobs", int, 1)
    out = _resolve(args, config, "out", str, "report.csv")

    sim = SimConfig(model=spec, n_grid=grid, reps=reps,
                    base_seed=seed, estimators=estimators)
    report = run_simulation(sim, jobs=jobs)
    to_csv(report, out, precision)
    if not _resolve(args, config, "no_figure", bool, False):
        render_mse_figure(report, figure_path_for(out))
    print(summary_text(report))
    return 0


def cmd_bound(args) -> int:
    config = _load_config(args.config)
    precision = _resolve(args, config, "precision", int, 6)
    theta, delta = args.theta, args.delta
    info = efficient_information(theta, delta)
    var = optimal_variance(theta, delta)
    record = {
        "theta": theta,
        "delta": delta,
        "information": info,
        "optimal_variance": "infinite" if math.isinf(var) else var,
    }
    _print_record(record, precision)
    return 0


def cmd_density(args) -> int:
    config = _load_config(args.config)
    precision = _resolve(args, config, "precision", int, 6)
    spec = _resolve_params(args, config)
    n_grid = _resolve(args, config, "grid", int, 1001)
    if n_grid < 2:
        raise CliError("--grid must be >= 2")
    x = np.linspace(0.0, 1.0, n_grid)
    mix = mixture_density(x, spec.params)
    alt = alt_density(x, spec.params)
    out = _resolve(args, config, "out", str, None)
    lines = ["x,mixture,alt"]
    lines += [f"{_fmt(xi, precision)},{_fmt(gi, precision)},{_fmt(fi, precision)}"
              for xi, gi, fi in zip(x, mix, alt)]
    text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)
    if args.figure is not None:
        render_density_figure(spec.params, args.figure, n_grid)
    return 0


def _add_model_flags(sub) -> None:
    sub.add_argument("--model", choices=sorted(MODELS), default=None,
                     help="built-in model label")
    sub.add_argument("--theta", type=float, default=None,
                     help="null proportion in (0, 1)")
    sub.add_argument("--delta", type=float, default=None,
                     help="width of the vanishing interval, in [0, 1)")
    sub.add_argument("--s", type=float, default=None,
                     help="alternative shape parameter, > 1")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pi0lab",
        description="Estimate the proportion of true null hypotheses "
                    "from p-values, and study the estimators by simulation.")
    parser.set_defaults(func=None)
    sub = parser.add_subparsers(dest="subcommand")

    est = sub.add_parser(
        "estimate", help="estimate the null proportion from a p-value file")
    est.add_argument("input", help="text file with one p-value per line, "
                                   "or - for stdin")
    est.add_argument("--method", required=True, choices=ESTIMATORS)
    est.add_argument("--cells", type=int, default=None,
                     help="histogram cell count (hist; default 8)")
    est.add_argument("--m-min", type=int, default=None, dest="m_min",
                     help="smallest partition resolution (cr; default 2)")
    est.add_argument("--m-max", type=int, default=None, dest="m_max",
                     help="largest partition resolution (cr; default 5)")
    est.add_argument("--right-anchored", action="store_true",
                     help="restrict cr windows to end at 1")
    est.add_argument("--p", default=None,
                     help="leave-p-out order: auto, fixed, or an integer "
                          "(cr; default auto)")
    est.add_argument("--lambda", type=float, default=None, dest="lam",
                     help="tail threshold (storey; default 0.5)")
    est.add_argument("--delta", type=float, default=None,
                     help="vanishing-interval width (oracle: required; "
                          "onestep: skip the data-driven estimate)")
    est.add_argument("--theta-init", type=float, default=None, dest="theta_init",
                     help="pilot estimate (onestep; default: histogram minimum)")
    est.add_argument("--clamp", action="store_true",
                     help="clamp the reported estimate into [0, 1]")
    est.add_argument("--precision", type=int, default=None)
    est.add_argument("--config", default=None, help="key=value defaults file")
    est.set_defaults(func=cmd_estimate)

    sim = sub.add_parser(
        "simulate", help="run the seeded replication grid and write a CSV")
    _add_model_flags(sim)
    sim.add_argument("--n", default=None,
                     help="comma-separated sample sizes "
                          f"(default {','.join(map(str, DESK_GRID))})")
    sim.add_argument("--paper-grid", action="store_true", dest="paper_grid",
                     help=f"use the large grid {','.join(map(str, PAPER_GRID))}")
    sim.add_argument("--reps", type=int, default=None,
                     help="replications per sample size (default 100)")
    sim.add_argument("--seed", type=int, default=None,
                     help=f"base seed (default ${SEED_ENV} or 0)")
    sim.add_argument("--estimators", default=None,
                     help="comma-separated subset of " + ",".join(ESTIMATORS))
    sim.add_argument("--out", default=None,
                     help="output CSV path (default report.csv)")
    sim.add_argument("--jobs", type=int, default=None,
                     help="worker processes (default 1; output is identical "
                          "for any value)")
    sim.add_argument("--no-figure", action="store_true", dest="no_figure",
                     help="skip the PNG rendered next to the CSV")
    sim.add_argument("--precision", type=int, default=None)
    sim.add_argument("--config", default=None, help="key=value defaults file")
    sim.set_defaults(func=cmd_simulate)

    bound = sub.add_parser(
        "bound", help="print the efficient information and variance bound")
    bound.add_argument("theta", type=float)
    bound.add_argument("delta", type=float)
    bound.add_argument("--precision", type=int, default=None)
    bound.add_argument("--config", default=None, help="key=value defaults file")
    bound.set_defaults(func=cmd_bound)

    dens = sub.add_parser(
        "density", help="dump a model density on a grid as CSV")
    _add_model_flags(dens)
    dens.add_argument("--grid", type=int, default=None,
                      help="number of grid points (default 1001)")
    dens.add_argument("--out", default=None,
                      help="output CSV path (default stdout)")
    dens.add_argument("--figure", default=None,
                      help="also render the density to this PNG path")
    dens.add_argument("--precision", type=int, default=None)
    dens.add_argument("--config", default=None, help="key=value defaults file")
    dens.set_defaults(func=cmd_density)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.func is None:
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except CliError as exc:
        print(f"pi0lab: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError) as exc:
        print(f"pi0lab: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
