"""Command line interface for qcorr."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List

from .config import RunSettings, load_settings, merge_flags
from .main import (
    EXPERIMENTS,
    SERIES_TARGETS,
    cmd_chsh,
    cmd_curve,
    cmd_reduce,
    cmd_series,
    cmd_simulate,
    render_series_text,
    run_bneps,
    run_transcript_bound,
)
from .output import emit, render_curve, render_json
from .protocols import PROTOCOL_NAMES, Protocol, make_protocol
from .quantum import CHSH_SOURCES

CURVE_PROTOCOLS = ("nocomm", "maj", "ort", "mixed", "transformed", "mixed-raw")


def _common(parser: argparse.ArgumentParser, protocol_default: str | None = None, choices=PROTOCOL_NAMES) -> None:
    # None means "not given" so the config file can fill it in
    parser.add_argument("--protocol", choices=choices, default=None, help=f"Protocol to run (default {protocol_default}).")
    parser.add_argument("--k", type=int, default=None, help="Message bits for maj/ort.")
    parser.add_argument("--n", type=int, default=None, help="Input vector dimension (default 3).")
    parser.add_argument("--trials", type=int, default=None, help="Monte Carlo trials (default 10^6).")
    parser.add_argument("--seed", type=int, default=None, help="Master seed (default 0).")
    parser.add_argument("--order", type=int, default=None, help="Series order for inverse series (default 41).")
    parser.add_argument("--max-dim", dest="max_dim", type=int, default=None, help="Embedding dimension budget.")
    parser.add_argument("--truncation", type=int, default=None, help="Embedding truncation degree K (default: automatic).")
    parser.add_argument("--workers", type=int, default=None, help="Worker threads; results do not depend on it.")
    parser.add_argument("--out", type=Path, default=None, help="Output file (default stdout).")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcorr",
        description="Simulate quantum two-outcome correlations with classical protocols and two bits of communication.",
    )
    parser.add_argument("--config", type=Path, help="YAML run configuration supplying flag defaults.")
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging.")
    sub = parser.add_subparsers(dest="command", required=True)

    curve = sub.add_parser("curve", help="CSV of analytic vs Monte Carlo correlation over rho in [-1, 1].")
    _common(curve, "ort", CURVE_PROTOCOLS)
    curve.add_argument("--points", type=int, default=None, help="Grid points (default 41).")

    series = sub.add_parser("series", help="Coefficient report and sign checks for a correlation series.")
    series.add_argument("--target", choices=SERIES_TARGETS, default="ort2")
    series.add_argument("--order", type=int, default=None, help="Series order, odd and at most 61 (default 41).")
    series.add_argument("--format", choices=("text", "json"), default="text")
    series.add_argument("--out", type=Path, default=None, help="Output file (default stdout).")

    simulate = sub.add_parser("simulate", help="Run one protocol on one input pair and summarize.")
    _common(simulate, "transformed")
    group = simulate.add_mutually_exclusive_group()
    group.add_argument("--rho", type=float, default=None, help="Inner product of a random input pair.")
    group.add_argument("--instance", type=Path, default=None, help="Quantum instance JSON to reduce and simulate.")

    chsh = sub.add_parser("chsh", help="CHSH win rate of a protocol.")
    _common(chsh, "transformed")
    chsh.add_argument("--source", choices=CHSH_SOURCES, default=None, help="CHSH input vectors (default explicit).")

    reduce = sub.add_parser("reduce", help="Reduce a quantum instance to unit vectors.")
    reduce.add_argument("instance", type=Path, help="Instance JSON file.")
    reduce.add_argument("--out", type=Path, default=None, help="Output file (default stdout).")

    experiment = sub.add_parser("experiment", help="Near-antipodal gap B(eps) or transcript frequency bound.")
    experiment.add_argument("name", choices=EXPERIMENTS)
    _common(experiment, "ort (bneps) / transformed (transcript-bound)")
    experiment.add_argument("--eps", type=float, nargs="+", default=None, help="eps values for bneps.")
    experiment.add_argument("--source", choices=CHSH_SOURCES, default=None, help="CHSH input vectors for transcript-bound.")
    return parser


def configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s")


def _protocol(settings: RunSettings, default: str, default_k: int | None = None) -> Protocol:
    name = settings.protocol or default
    k = settings.k if settings.k is not None else (default_k if name == "ort" else None)
    return make_protocol(name, k, settings.order, settings.truncation, settings.max_dim)


def main(argv: List[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    try:
        settings = merge_flags(load_settings(args.config), vars(args))

        if args.command == "curve":
            protocol = _protocol(settings, "ort")
            rows, passed = cmd_curve(protocol, settings.points, settings.trials, settings.seed, settings.n, settings.workers)
            emit(render_curve(rows), args.out, "Curve")
            return 0 if passed else 1

        if args.command == "series":
            report = cmd_series(args.target, settings.order)
            text = report.model_dump_json(indent=2) if args.format == "json" else render_series_text(report)
            emit(text, args.out, "Series report")
            return 0 if report.passed else 1

        if args.command == "simulate":
            protocol = _protocol(settings, "transformed")
            rho = settings.rho if args.instance is None else None
            if rho is None and args.instance is None:
                parser.error("simulate needs --rho or --instance")
            summary = cmd_simulate(protocol, settings.trials, settings.seed, settings.n, rho, args.instance, settings.workers)
            emit(render_json(summary), args.out, "Simulation summary")
            return 0

        if args.command == "chsh":
            result = cmd_chsh(_protocol(settings, "transformed"), settings.trials, settings.seed, settings.source, settings.workers)
            emit(render_json(result), args.out, "CHSH result")
            return 0

        if args.command == "reduce":
            report = cmd_reduce(args.instance)
            emit(render_json(report), args.out, "Reduced vectors")
            return 0 if report.passed else 1

        if args.name == "bneps":
            protocol = _protocol(settings, "ort", default_k=1)
            rows, passed = run_bneps(protocol, settings.eps, settings.trials, settings.seed, settings.n, settings.workers)
            emit(render_json(rows), args.out, "B(eps) table")
            return 0 if passed else 1

        stats = run_transcript_bound(_protocol(settings, "transformed"), settings.trials, settings.seed, settings.source, settings.workers)
        emit(render_json(stats), args.out, "Transcript statistics")
        return 0 if stats.passed else 1
    except Exception as exc:  # pragma: no cover - protects CLI UX
        logging.error("qcorr failed: %s", exc)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
