#!/usr/bin/env python3
"""Prüft per Rangkorrelation, ob die Anti-Diversität mit K wächst und die DPP-Metrik fällt."""

from __future__ import annotations

import argparse
import csv
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
            "Liest eine sweep_k.csv (oder erzeugt sie mit der config.json) und berechnet die "
            "Spearman-Korrelationen zwischen K und Anti-Diversität bzw. DPP-Metrik."
        ),
    )
    parser.add_argument(
        "--config",
        type=Path,
        default=None,
        help="Pfad zur config.json (Standard: config.json im Repo-Root).",
    )
    parser.add_argument(
        "--input",
        type=Path,
        default=None,
        help="Vorhandene sweep_k.csv; ohne Angabe wird der Sweep neu gerechnet.",
    )
    return parser


def main() -> int:
    _add_src_to_path()
    from scipy.stats import spearmanr

    from diverse_recourse.config_loader import load_config
    from diverse_recourse.experiments import cmd_sweep_k

    parser = build_parser()
    args = parser.parse_args()

    path = args.input or cmd_sweep_k(load_config(args.config))
    with path.open(encoding="utf-8", newline="") as handle:
        rows = [row for row in csv.DictReader(handle) if row["status"] == "ok" and row["anti_diversity"] and row["dpp"]]

    if len(rows) < 2:
        print(f"Fehler: {path} enthält weniger als zwei auswertbare Werte für K.", file=sys.stderr)
        return 1

    ks = [int(row["k"]) for row in rows]
    anti = [float(row["anti_diversity"]) for row in rows]
    dpp = [float(row["dpp"]) for row in rows]
    for k, a, q in zip(ks, anti, dpp):
        print(f"K={k:<3d} Anti-Diversität {a:.4f}  DPP {q:.4f}")

    anti_rho = spearmanr(ks, anti).statistic
    dpp_rho = spearmanr(ks, dpp).statistic
    print(f"Spearman rho Anti-Diversität = {anti_rho:.3f} (erwartet > 0)")
    print(f"Spearman rho DPP             = {dpp_rho:.3f} (erwartet < 0)")
    if not (anti_rho > 0 and dpp_rho < 0):
        print("Warnung: der erwartete Trend in K ist nicht erfüllt.", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
