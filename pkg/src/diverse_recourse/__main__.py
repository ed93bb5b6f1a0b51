from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from .action_graph import GraphFileError
from .classifier import ModelFileError, TrainingError
from .config_loader import MODES, RunConfig, load_config
from .data import DataError
from .experiments import cmd_bench, cmd_graph, cmd_pareto, cmd_plan, cmd_sweep_k, cmd_synth, cmd_train
from .interpolation import METHODS, PlanError
from .quad_select import ScreeningError

COMMANDS = ("train", "synth", "graph", "plan", "pareto", "sweep-k", "bench")

# errors reported as a one-line message with exit status 1
RUN_ERRORS = (DataError, ModelFileError, TrainingError, GraphFileError, PlanError, ScreeningError, OSError, ValueError)


def _common_arguments() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        type=Path,
        default=None,
        help="Pfad zur config.json (Standard: config.json im Repo-Root).",
    )
    common.add_argument("--method", choices=METHODS, default=None, help="Auswahlverfahren (überschreibt config.json).")
    common.add_argument("--k", type=int, default=None, help="Anzahl der Recourses pro Plan.")
    common.add_argument(
        "--theta",
        type=float,
        default=None,
        help="Gewicht zwischen Diversität und Nähe, theta bzw. vartheta in [0, 1].",
    )
    common.add_argument("--h", type=float, default=None, help="Bandbreite der Nähegewichte im DPP-Kern.")
    common.add_argument("--mode", choices=MODES, default=None, help="Interpolation: linear oder entlang des Aktionsgraphen.")
    common.add_argument("--epsilon", type=float, default=None, help="Kantenschwelle des Aktionsgraphen.")
    common.add_argument("--max-instances", type=int, default=None, help="Höchstzahl ausgewerteter Testinstanzen.")
    common.add_argument("--out", type=Path, default=None, help="Ausgabeverzeichnis (überschreibt config.json).")
    common.add_argument("--verbose", action="store_true", help="Fortschrittsmeldungen auf stderr ausgeben.")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Generate diverse recourse plans for a binary classifier")
    common = _common_arguments()
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("train", parents=[common], help="MLP trainieren und Genauigkeit/AUC berichten.")
    commands.add_parser("synth", parents=[common], help="Synthetischen 2-D-Datensatz als CSV schreiben.")
    commands.add_parser("graph", parents=[common], help="Aktionsgraphen über den Trainingsdaten bauen.")
    commands.add_parser("plan", parents=[common], help="Recourse-Pläne erzeugen und bewerten.")
    pareto = commands.add_parser("pareto", parents=[common], help="Gewichte theta = vartheta durchlaufen.")
    pareto.add_argument("--weights", type=float, nargs="+", default=None, help="Gewichtsgitter (Standard aus config.json).")
    sweep = commands.add_parser("sweep-k", parents=[common], help="Plangröße K durchlaufen.")
    sweep.add_argument("--k-values", type=int, nargs="+", default=None, help="Werte für K (Standard aus config.json).")
    commands.add_parser("bench", parents=[common], help="Laufzeiten der Auswahlverfahren messen.")
    return parser


def apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    """Kommandozeilenwerte haben Vorrang vor config.json."""

    selector = config.selector
    if args.method is not None:
        selector = replace(selector, method=args.method)
    if args.k is not None:
        selector = replace(selector, k=args.k)
    if args.theta is not None:
        selector = replace(selector, weight=args.theta)
    if args.h is not None:
        selector = replace(selector, bandwidth=args.h)
    config = replace(config, selector=selector)

    if args.mode is not None:
        config = replace(config, mode=args.mode)
    if args.epsilon is not None:
        config = replace(config, graph=replace(config.graph, epsilon=args.epsilon))
    if args.max_instances is not None:
        config = replace(config, max_instances=args.max_instances)
    if args.out is not None:
        config = replace(config, output_dir=args.out)
    # the selector parameters are validated here, before any data is touched
    selector.params()
    return config


def _dispatch(args: argparse.Namespace) -> Dict[str, Callable[[RunConfig], Path]]:
    return {
        "train": cmd_train,
        "synth": cmd_synth,
        "graph": cmd_graph,
        "plan": cmd_plan,
        "pareto": lambda config: cmd_pareto(config, getattr(args, "weights", None)),
        "sweep-k": lambda config: cmd_sweep_k(config, getattr(args, "k_values", None)),
        "bench": cmd_bench,
    }


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        config = apply_overrides(load_config(args.config), args)
        output = _dispatch(args)[args.command](config)
    except RUN_ERRORS as exc:
        print(f"Fehler ({args.command}): {exc}", file=sys.stderr)
        return 1

    print(f"Hinweis: {args.command} abgeschlossen, Ergebnis in {output}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
