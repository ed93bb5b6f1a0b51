#!/usr/bin/env python3
"""Misst den Abstand zwischen gescreenter Lösung und globalem Optimum des Quadratprogramms."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path


def _add_src_to_path() -> None:
    repo_root = Path(__file__).resolve().parents[1]
    src_dir = repo_root / "src"
    if str(src_dir) not in sys.path:
        sys.path.insert(0, str(src_dir))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description=(
            "Löst zufällige Instanzen mit Best-Response bzw. Dualanstieg plus Screening und "
            "vergleicht mit der vollständigen Enumeration."
        ),
    )
    parser.add_argument("--instances", type=int, default=100, help="Anzahl der Zufallsinstanzen (Standard: 100).")
    parser.add_argument("--n", type=int, default=200, help="Kandidaten pro Instanz (Standard: 200).")
    parser.add_argument("--dim", type=int, default=4, help="Dimension der Richtungen (Standard: 4).")
    parser.add_argument("--k", type=int, default=3, help="Größe der Auswahl (Standard: 3).")
    parser.add_argument("--weight", type=float, default=0.9, help="Gewicht des Diversitätsterms (Standard: 0.9).")
    parser.add_argument("--solver", choices=("best-response", "dual-ascent"), default="best-response")
    parser.add_argument("--iterations", type=int, default=50, help="Iterationen T (Standard: 50).")
    parser.add_argument("--window", type=int, default=10, help="Screening-Fenster tau (Standard: 10).")
    parser.add_argument("--seed", type=int, default=0, help="Startwert des Zufallsgenerators.")
    parser.add_argument(
        "--trace",
        type=Path,
        default=None,
        help="Optionaler CSV-Pfad für den Iterationsverlauf der ersten Instanz.",
    )
    return parser


def main() -> int:
    _add_src_to_path()
    import numpy as np

    from diverse_recourse.geometry import eigenbasis_from_directions, similarity
    from diverse_recourse.quad_select import (
        BEST_RESPONSE,
        DUAL_ASCENT,
        QuadProblem,
        brute_force,
        objective,
        solve_quad,
        write_trace,
    )

    parser = build_parser()
    args = parser.parse_args()
    solver = BEST_RESPONSE if args.solver == "best-response" else DUAL_ASCENT

    rng = np.random.default_rng(args.seed)
    gaps = []
    relative_gaps = []
    worse_than_iterates = 0
    screened_sizes = []
    for instance in range(args.instances):
        A = rng.normal(size=(args.dim, args.n))
        A /= np.linalg.norm(A, axis=0)
        problem = QuadProblem(S=similarity(A), d=rng.uniform(0.1, 2.0, size=args.n), weight=args.weight, k=args.k)
        result = solve_quad(
            problem,
            eigenbasis_from_directions(A, min(args.dim, 20, args.n)),
            solver,
            iterations=args.iterations,
            window=args.window,
        )
        optimum = objective(brute_force(problem), problem)
        gaps.append(result.objective - optimum)
        relative_gaps.append((result.objective - optimum) / max(abs(optimum), 1e-12))
        worse_than_iterates += result.objective > min(result.trace.primal)
        screened_sizes.append(len(result.screening.indices))
        if instance == 0 and args.trace:
            write_trace(result.trace, args.trace)

    gaps_array = np.asarray(gaps)
    print(f"Instanzen:              {len(gaps)}")
    print(f"Global optimal:         {int(np.sum(gaps_array <= 1e-9))}")
    print(f"Mittlere Lücke:         {float(np.mean(gaps_array)):.6f}")
    print(f"Größte Lücke:           {float(np.max(gaps_array)):.6f}")
    print(f"Median rel. Lücke:      {float(np.median(relative_gaps)):.2%} (Ziel: <= 5 %)")
    print(f"Mittlere Screening-Größe: {float(np.mean(screened_sizes)):.1f} von {args.n}")
    if worse_than_iterates:
        print(f"Fehler: {worse_than_iterates} Lösung(en) schlechter als die beste Iteration.", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
