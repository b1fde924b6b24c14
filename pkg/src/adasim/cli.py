"""Command-line entry point: simulate, compare, abc-diagnose, serve.

Configs are TOML; outputs are CSV/JSON plus a run manifest sufficient to
reproduce the run (config hash, seed, format version). Exit codes: 0 ok,
2 config error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import __version__
from .indicator import AbcConfig, ObservationLog, abc_rejection_result, dump_posterior, point_estimate
from .loop import SessionConfig, compare_methods, run_monte_carlo
from .reliance import ChoicePolicyParams, OperatorParams, PriorSpec
from .reporting import (
    comparison_to_jsonable,
    write_aggregate_json,
    write_comparison_csv,
    write_trace_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

MANIFEST_FORMAT_VERSION = 1


class ConfigError(ValueError):
    pass


def _load_toml(path: Path) -> dict:
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}")


def _build_priors(raw: dict) -> PriorSpec:
    if "centered" in raw:
        c = dict(raw["centered"])
        width = c.pop("width", 0.005)
        try:
            return PriorSpec.centered(width=width, **c)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"priors.centered: {exc}")
    ranges = dict(PriorSpec().ranges)
    for name, bounds in raw.items():
        if name not in ranges:
            raise ConfigError(f"priors: unknown parameter {name!r}")
        if not (isinstance(bounds, list) and len(bounds) == 2):
            raise ConfigError(f"priors.{name}: expected [lower, width]")
        ranges[name] = (float(bounds[0]), float(bounds[1]))
    try:
        return PriorSpec(ranges=ranges)
    except ValueError as exc:
        raise ConfigError(f"priors: {exc}")


def _pick(raw: dict, section: str, cls, **overrides):
    try:
        return cls(**{**raw.get(section, {}), **overrides})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}]: {exc}")


def build_session_config(raw: dict, seed: int | None = None) -> SessionConfig:
    session = dict(raw.get("session", {}))
    n_ops = session.pop("n_operators", None)
    if seed is not None:
        session["master_seed"] = seed
    priors = _build_priors(raw.get("priors", {}))
    abc = _pick(raw, "abc", AbcConfig)
    policy = _pick(raw, "choice_policy", ChoicePolicyParams)
    for key in ("payoff_range", "probability_range"):
        if key in session:
            session[key] = tuple(session[key])
    try:
        config = SessionConfig(priors=priors, abc=abc, choice_policy=policy, **session)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[session]: {exc}")
    return config


def _n_operators(raw: dict, default: int = 10) -> int:
    n = raw.get("session", {}).get("n_operators", default)
    if not (isinstance(n, int) and n >= 1):
        raise ConfigError("[session]: n_operators must be a positive integer")
    return n


def _write_manifest(out_dir: Path, config_path: Path, seed: int, command: str) -> None:
    digest = hashlib.sha256(config_path.read_bytes()).hexdigest()
    manifest = {
        "command": command,
        "config_file": config_path.name,
        "config_sha256": digest,
        "seed": seed,
        "adasim_version": __version__,
        "format_version": MANIFEST_FORMAT_VERSION,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_curves_csv(out_dir: Path, result) -> None:
    lines = ["game,mean_d,std_d,mean_rho,std_rho"]
    for g in range(result.config.games_per_operator):
        lines.append(",".join([
            str(g),
            repr(float(result.per_game_mean_d[g])),
            repr(float(result.per_game_std_d[g])),
            repr(float(result.per_game_mean_rho[g])),
            repr(float(result.per_game_std_rho[g])),
        ]))
    (out_dir / "curves.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_simulate(args) -> int:
    config_path = Path(args.config)
    raw = _load_toml(config_path)
    config = build_session_config(raw, seed=args.seed)
    n_operators = _n_operators(raw)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    result = run_monte_carlo(config, n_operators)
    write_trace_csv(out_dir / "trace.csv", result.traces)
    write_aggregate_json(out_dir / "aggregate.json", result,
                         extra={"seed": config.master_seed})
    _write_curves_csv(out_dir, result)
    _write_manifest(out_dir, config_path, config.master_seed, "simulate")
    print(f"simulate: {n_operators} operators, "
          f"mean reliance {result.overall_mean_d:.4f}, "
          f"mean rho {result.overall_mean_rho:.4f} -> {out_dir}")
    return EXIT_OK


def cmd_compare(args) -> int:
    config_path = Path(args.config)
    raw = _load_toml(config_path)
    config = build_session_config(raw, seed=args.seed)
    n_operators = _n_operators(raw)
    grid = raw.get("compare", {})
    theta_centers = grid.get("theta_centers", [0.5, 0.6, 0.7])
    s_centers = grid.get("s_centers", [0.1, 0.5, 0.9])
    b2_centers = grid.get("b2_centers", [0.01, 0.03, 0.05])
    prior_width = grid.get("prior_width", 0.005)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    cells = compare_methods(
        config, theta_centers, s_centers, b2_centers, n_operators,
        prior_width=prior_width,
    )
    write_comparison_csv(out_dir / "comparison.csv", cells)
    (out_dir / "comparison.json").write_text(
        json.dumps({
            "seed": config.master_seed,
            "n_operators": n_operators,
            "cells": comparison_to_jsonable(cells),
        }, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _write_manifest(out_dir, config_path, config.master_seed, "compare")
    print(f"compare: {len(cells)} cells -> {out_dir}")
    return EXIT_OK


def cmd_abc_diagnose(args) -> int:
    config_path = Path(args.config)
    raw = _load_toml(config_path)
    priors = _build_priors(raw.get("priors", {}))
    abc = _pick(raw, "abc", AbcConfig)
    trace_path = Path(args.trace)
    if not trace_path.exists():
        raise ConfigError(f"trace file not found: {trace_path}")

    from .reporting import read_trace_csv

    rows = read_trace_csv(trace_path)
    if not rows:
        raise ConfigError(f"{trace_path}: trace has no rows")
    log = ObservationLog()
    for row in rows:
        log.append(row["reliance"], row["agreement"], row["capability"])

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    result = abc_rejection_result(log, priors, abc, rng,
                                  template=OperatorParams(noise_sigma=0.0))
    dump_posterior(result.samples, out_dir / "posterior.csv")
    summary = {
        "observed_trials": len(log),
        "candidates_seen": result.candidates_seen,
        "accepted_count": result.accepted_count,
        "acceptance_rate": result.acceptance_rate,
        "fallback_used": result.fallback_used,
        "point_estimate": point_estimate(result.samples),
        "seed": args.seed,
    }
    (out_dir / "abc_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _write_manifest(out_dir, config_path, args.seed, "abc-diagnose")
    print(f"abc-diagnose: acceptance rate {result.acceptance_rate:.4f}, "
          f"fallback={result.fallback_used} -> {out_dir}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import socket

    import uvicorn

    from .service import create_app

    # probe the port first for a clear failure message
    try:
        probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((args.host, args.port))
        probe.close()
    except OSError as exc:
        print(f"error: cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    app = create_app(storage_dir=args.out)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adasim",
        description="Reliance-aware decision aid simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo operator population")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_cmp = sub.add_parser("compare", help="predictive vs myopic grid comparison")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--seed", type=int, default=None)
    p_cmp.add_argument("--out", required=True)
    p_cmp.set_defaults(func=cmd_compare)

    p_abc = sub.add_parser("abc-diagnose", help="refit parameters from an exported trace")
    p_abc.add_argument("--trace", required=True)
    p_abc.add_argument("--config", required=True)
    p_abc.add_argument("--seed", type=int, default=0)
    p_abc.add_argument("--out", required=True)
    p_abc.set_defaults(func=cmd_abc_diagnose)

    p_srv = sub.add_parser("serve", help="run the interactive session service")
    p_srv.add_argument("--config", default=None)
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--out", default="./sessions")
    p_srv.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failure, not a usage problem
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
