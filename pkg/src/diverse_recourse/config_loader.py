"""Zentrales Laden der Laufkonfiguration aus config.json."""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

from .classifier import TrainConfig
from .interpolation import GRAPH_MODE, LINEAR, METHODS, SelectorParams
from .quad_select import DEFAULT_ITERATIONS, DEFAULT_STEP, DEFAULT_WINDOW

# Pfad zur config.json relativ zum Repository-Root (zwei Ebenen über diesem Modul)
_DEFAULT_CONFIG_PATH = Path(__file__).resolve().parents[2] / "config.json"

MODES = (LINEAR, GRAPH_MODE)
DEFAULT_HIDDEN_DIMS = (20, 50, 20)
DEFAULT_PARETO_WEIGHTS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
DEFAULT_K_VALUES = (2, 3, 4, 5, 6)
DEFAULT_BENCH_SIZES = (500, 1000, 5000)
DEFAULT_BENCH_METHODS = ("dpp-greedy", "dpp-ls", "quad-br")


@dataclass(frozen=True)
class DataConfig:
    """Datenquelle: CSV plus Schema oder der synthetische 2-D-Datensatz."""

    csv_path: Optional[Path] = None
    schema_path: Optional[Path] = None
    label_column: str = "label"
    name: str = "synthetic"
    synthetic_n: int = 1000
    synthetic_seed: int = 0
    train_fraction: float = 0.8
    split_seed: int = 0

    @property
    def is_synthetic(self) -> bool:
        return self.csv_path is None


@dataclass(frozen=True)
class SelectorConfig:
    method: str = "quad-br"
    k: int = 3
    weight: float = 0.9
    bandwidth: float = 1.0
    rank: Optional[int] = None
    iterations: int = DEFAULT_ITERATIONS
    window: int = DEFAULT_WINDOW
    step: float = DEFAULT_STEP

    def params(self) -> SelectorParams:
        return SelectorParams(
            method=self.method,
            k=self.k,
            weight=self.weight,
            bandwidth=self.bandwidth,
            rank=self.rank,
            iterations=self.iterations,
            window=self.window,
            step=self.step,
        )


@dataclass(frozen=True)
class GraphConfig:
    # explicit epsilon wins over the quantile rule
    epsilon: Optional[float] = None
    quantile: float = 0.1


@dataclass(frozen=True)
class RunConfig:
    """Vollständige Konfiguration eines Experiment-Laufs."""

    data: DataConfig = field(default_factory=DataConfig)
    hidden_dims: Tuple[int, ...] = DEFAULT_HIDDEN_DIMS
    train: TrainConfig = field(default_factory=TrainConfig)
    selector: SelectorConfig = field(default_factory=SelectorConfig)
    graph: GraphConfig = field(default_factory=GraphConfig)
    mode: str = LINEAR
    output_dir: Path = Path("runs/default")
    max_instances: int = 100
    pareto_weights: Tuple[float, ...] = DEFAULT_PARETO_WEIGHTS
    k_values: Tuple[int, ...] = DEFAULT_K_VALUES
    bench_sizes: Tuple[int, ...] = DEFAULT_BENCH_SIZES
    bench_replications: int = 5
    bench_methods: Tuple[str, ...] = DEFAULT_BENCH_METHODS


def _warn(message: str) -> None:
    print(f"Warnung: {message}", file=sys.stderr)


def _section(data: Dict[str, Any], key: str) -> Dict[str, Any]:
    value = data.get(key)
    if value is None:
        return {}
    if not isinstance(value, dict):
        _warn(f"Abschnitt '{key}' ist kein Objekt und wird ignoriert.")
        return {}
    return value


def _is_int(value: object) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value: object) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _value(
    section: Dict[str, Any],
    key: str,
    default: Any,
    check: Callable[[Any], bool],
    expected: str,
    convert: Callable[[Any], Any] = lambda value: value,
) -> Any:
    """Liest ``section[key]``; fehlt der Wert oder ist er ungültig, gilt ``default``."""
    if key not in section or section[key] is None:
        return default
    raw = section[key]
    try:
        if check(raw):
            return convert(raw)
    except (TypeError, ValueError):
        pass
    _warn(f"'{key}' = {raw!r} ist ungültig (erwartet: {expected}); Standardwert {default!r} wird verwendet.")
    return default


def _optional_path(section: Dict[str, Any], key: str) -> Optional[Path]:
    return _value(
        section,
        key,
        None,
        lambda v: isinstance(v, str) and bool(v.strip()),
        "Pfad als Text",
        lambda v: Path(v.strip()),
    )


def _int_tuple(section: Dict[str, Any], key: str, default: Tuple[int, ...], minimum: int) -> Tuple[int, ...]:
    return _value(
        section,
        key,
        default,
        lambda v: isinstance(v, list) and bool(v) and all(_is_int(x) and x >= minimum for x in v),
        f"nicht-leere Liste ganzer Zahlen >= {minimum}",
        lambda v: tuple(int(x) for x in v),
    )


def _data_config(section: Dict[str, Any]) -> DataConfig:
    defaults = DataConfig()
    return DataConfig(
        csv_path=_optional_path(section, "csv"),
        schema_path=_optional_path(section, "schema"),
        label_column=_value(section, "label_column", defaults.label_column, lambda v: isinstance(v, str) and bool(v.strip()), "Spaltenname", str.strip),
        name=_value(section, "name", defaults.name, lambda v: isinstance(v, str) and bool(v.strip()), "Text", str.strip),
        synthetic_n=_value(section, "synthetic_n", defaults.synthetic_n, lambda v: _is_int(v) and v >= 2, "ganze Zahl >= 2"),
        synthetic_seed=_value(section, "synthetic_seed", defaults.synthetic_seed, _is_int, "ganze Zahl"),
        train_fraction=_value(section, "train_fraction", defaults.train_fraction, lambda v: _is_number(v) and 0 < v < 1, "Zahl in (0, 1)", float),
        split_seed=_value(section, "split_seed", defaults.split_seed, _is_int, "ganze Zahl"),
    )


def _train_config(section: Dict[str, Any]) -> TrainConfig:
    defaults = TrainConfig()
    return TrainConfig(
        learning_rate=_value(section, "learning_rate", defaults.learning_rate, lambda v: _is_number(v) and v > 0, "positive Zahl", float),
        epochs=_value(section, "epochs", defaults.epochs, lambda v: _is_int(v) and v >= 0, "ganze Zahl >= 0"),
        batch_size=_value(section, "batch_size", defaults.batch_size, lambda v: _is_int(v) and v >= 1, "ganze Zahl >= 1"),
        seed=_value(section, "seed", defaults.seed, _is_int, "ganze Zahl"),
        l2_penalty=_value(section, "l2_penalty", defaults.l2_penalty, lambda v: _is_number(v) and v >= 0, "Zahl >= 0", float),
    )


def _selector_config(section: Dict[str, Any]) -> SelectorConfig:
    defaults = SelectorConfig()
    return SelectorConfig(
        method=_value(section, "method", defaults.method, lambda v: v in METHODS, " | ".join(METHODS)),
        k=_value(section, "k", defaults.k, lambda v: _is_int(v) and v >= 1, "ganze Zahl >= 1"),
        weight=_value(section, "weight", defaults.weight, lambda v: _is_number(v) and 0 <= v <= 1, "Zahl in [0, 1]", float),
        bandwidth=_value(section, "bandwidth", defaults.bandwidth, lambda v: _is_number(v) and v > 0, "positive Zahl", float),
        rank=_value(section, "rank", defaults.rank, lambda v: _is_int(v) and v >= 1, "ganze Zahl >= 1"),
        iterations=_value(section, "iterations", defaults.iterations, lambda v: _is_int(v) and v >= 1, "ganze Zahl >= 1"),
        window=_value(section, "window", defaults.window, lambda v: _is_int(v) and v >= 0, "ganze Zahl >= 0"),
        step=_value(section, "step", defaults.step, lambda v: _is_number(v) and v > 0, "positive Zahl", float),
    )


def _graph_config(section: Dict[str, Any]) -> GraphConfig:
    defaults = GraphConfig()
    return GraphConfig(
        epsilon=_value(section, "epsilon", defaults.epsilon, lambda v: _is_number(v) and v > 0, "positive Zahl", float),
        quantile=_value(section, "quantile", defaults.quantile, lambda v: _is_number(v) and 0 < v <= 1, "Zahl in (0, 1]", float),
    )


def config_from_mapping(payload: Dict[str, Any]) -> RunConfig:
    defaults = RunConfig()
    classifier = _section(payload, "classifier")
    plan = _section(payload, "plan")
    sweeps = _section(payload, "sweeps")
    bench = _section(payload, "bench")
    return RunConfig(
        data=_data_config(_section(payload, "data")),
        hidden_dims=_int_tuple(classifier, "hidden_dims", defaults.hidden_dims, 1),
        train=_train_config(classifier),
        selector=_selector_config(_section(payload, "selector")),
        graph=_graph_config(_section(payload, "graph")),
        mode=_value(plan, "mode", defaults.mode, lambda v: v in MODES, " | ".join(MODES)),
        max_instances=_value(plan, "max_instances", defaults.max_instances, lambda v: _is_int(v) and v >= 1, "ganze Zahl >= 1"),
        output_dir=_value(payload, "output_dir", defaults.output_dir, lambda v: isinstance(v, str) and bool(v.strip()), "Pfad als Text", lambda v: Path(v.strip())),
        pareto_weights=_value(
            sweeps,
            "pareto_weights",
            defaults.pareto_weights,
            lambda v: isinstance(v, list) and bool(v) and all(_is_number(x) and 0 <= x <= 1 for x in v),
            "nicht-leere Liste von Zahlen in [0, 1]",
            lambda v: tuple(float(x) for x in v),
        ),
        k_values=_int_tuple(sweeps, "k_values", defaults.k_values, 1),
        bench_sizes=_int_tuple(bench, "sizes", defaults.bench_sizes, 2),
        bench_replications=_value(bench, "replications", defaults.bench_replications, lambda v: _is_int(v) and v >= 1, "ganze Zahl >= 1"),
        bench_methods=_value(
            bench,
            "methods",
            defaults.bench_methods,
            lambda v: isinstance(v, list) and bool(v) and all(x in METHODS for x in v),
            "nicht-leere Liste aus " + " | ".join(METHODS),
            tuple,
        ),
    )


def load_config(path: Optional[Path] = None) -> RunConfig:
    """Lädt die Konfiguration aus *path* (Standard: config.json im Repo-Root).

    Fehlt die Datei, gelten die Standardwerte. Bei unlesbarer Datei oder
    ungültigem JSON wird eine Warnung ausgegeben und ebenfalls auf die
    Standardwerte zurückgefallen; einzelne ungültige Felder werden mit
    Warnung durch ihren Standardwert ersetzt.
    """
    config_path = path or _DEFAULT_CONFIG_PATH

    if not config_path.exists():
        return RunConfig()

    try:
        raw = config_path.read_text(encoding="utf-8")
    except OSError as exc:
        _warn(f"{config_path.name} konnte nicht gelesen werden ({exc}). Standardkonfiguration wird verwendet.")
        return RunConfig()

    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        _warn(f"{config_path.name} enthält ungültiges JSON ({exc}). Standardkonfiguration wird verwendet.")
        return RunConfig()

    if not isinstance(data, dict):
        _warn(f"{config_path.name} hat unerwartetes Format (kein Objekt). Standardkonfiguration wird verwendet.")
        return RunConfig()

    return config_from_mapping(data)
