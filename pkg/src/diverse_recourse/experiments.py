"""Experiment harness behind the CLI subcommands.

Every command reads a ``RunConfig`` and writes fresh output files into
``config.output_dir``; nothing is appended to earlier runs.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .action_graph import (
    ActionGraph,
    IsolatedInputError,
    attach_input,
    build_graph,
    epsilon_from_quantile,
    load_graph,
    save_graph,
)
from .classifier import MlpModel, evaluate, load_model, predict_label, save_model, train
from .config_loader import RunConfig
from .data import (
    Dataset,
    DataError,
    FeatureSchema,
    Scaler,
    SplitConfig,
    encode_dataset,
    fit_scaler,
    load_csv,
    load_schema,
    positives,
    schema_to_mapping,
    split,
    synth_2d,
    write_csv,
)
from .evaluation import aggregate, evaluate_paths, evaluate_plan, metrics_row, validity
from .geometry import EUCLIDEAN, directions, distance_vector, similarity
from .interpolation import (
    GRAPH_MODE,
    PlanError,
    RecoursePlan,
    SelectorParams,
    plan_graph,
    plan_linear,
    plan_to_record,
    select_prototypes,
    write_plans,
)
from .quad_select import ScreeningError

LOGGER = logging.getLogger(__name__)

MODEL_FILE = "model.json"
GRAPH_FILE = "graph.txt"

PLAN_METRICS = ("cost", "validity", "anti_diversity", "dpp", "manifold_distance")
PATH_METRICS = ("shortest_path_cost", "path_diversity", "path_anti_diversity")
PLAN_COLUMNS = ("dataset", "method", "instance", "status", "reason") + PLAN_METRICS
GRAPH_PLAN_COLUMNS = PLAN_COLUMNS + PATH_METRICS
TRAIN_COLUMNS = ("dataset", "accuracy", "auc")
GRAPH_COLUMNS = ("dataset", "nodes", "edges", "epsilon", "favourable_nodes")
PARETO_COLUMNS = ("weight", "cost", "anti_diversity", "dpp", "instances", "skipped")
SWEEP_COLUMNS = ("k", "status", "reason", "anti_diversity", "dpp", "instances", "skipped")
BENCH_COLUMNS = ("method", "n", "candidates", "seconds")

# failures that skip a single instance instead of aborting the run
INSTANCE_ERRORS = (PlanError, IsolatedInputError, ScreeningError)


@dataclass(frozen=True)
class PreparedData:
    schema: FeatureSchema
    scaler: Scaler
    train: Dataset
    test: Dataset
    name: str


@dataclass(frozen=True)
class InstanceOutcome:
    row: Dict[str, object]
    plan: Optional[RecoursePlan] = None


def write_rows(path: Path, columns: Sequence[str], rows: Sequence[Dict[str, object]]) -> Path:
    """CSV with a fixed header; ``None`` becomes an empty cell, floats keep full precision."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(columns), extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _cell(row.get(key)) for key in columns})
    return path


def _cell(value: object) -> object:
    if value is None:
        return ""
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, float):
        return repr(value)
    return value


def prepare_data(config: RunConfig) -> PreparedData:
    """Load (or sample), split, fit the scaler on the training part and encode both parts."""

    data_config = config.data
    if data_config.is_synthetic:
        raw = synth_2d(data_config.synthetic_n, data_config.synthetic_seed)
    else:
        if data_config.schema_path is None:
            raise DataError("A CSV dataset needs a schema file (data.schema)")
        schema = load_schema(data_config.schema_path)
        raw = load_csv(data_config.csv_path, schema, data_config.label_column)

    raw_train, raw_test = split(raw, SplitConfig(train_fraction=data_config.train_fraction, seed=data_config.split_seed))
    scaler = fit_scaler(raw_train)
    LOGGER.info("Dataset %s: %d train / %d test rows", data_config.name, len(raw_train), len(raw_test))
    return PreparedData(
        schema=raw.schema,
        scaler=scaler,
        train=encode_dataset(raw_train, scaler),
        test=encode_dataset(raw_test, scaler),
        name=data_config.name,
    )


def _train_model(config: RunConfig, data: PreparedData) -> MlpModel:
    return train(data.train, config.hidden_dims, config.train)


def model_fingerprint(config: RunConfig) -> Dict[str, Any]:
    """Every setting a stored model depends on."""

    return _canonical(
        {"data": asdict(config.data), "hidden_dims": list(config.hidden_dims), "train": asdict(config.train)}
    )


def graph_fingerprint(config: RunConfig) -> Dict[str, Any]:
    return _canonical(
        {"model": model_fingerprint(config), "epsilon": config.graph.epsilon, "quantile": config.graph.quantile}
    )


def _canonical(payload: Dict[str, Any]) -> Dict[str, Any]:
    return json.loads(json.dumps(payload, sort_keys=True, default=str))


def _fingerprint_path(artifact: Path) -> Path:
    return artifact.with_suffix(".meta.json")


def write_fingerprint(artifact: Path, fingerprint: Dict[str, Any]) -> None:
    _fingerprint_path(artifact).write_text(json.dumps(fingerprint, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _is_current(artifact: Path, fingerprint: Dict[str, Any]) -> bool:
    """True when ``artifact`` exists and was written under ``fingerprint``."""

    if not artifact.exists():
        return False
    meta = _fingerprint_path(artifact)
    try:
        stored = json.loads(meta.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError):
        stored = None
    if stored != fingerprint:
        LOGGER.warning("%s was written under a different configuration and is rebuilt", artifact)
        return False
    return True


def _store_model(config: RunConfig, model: MlpModel) -> None:
    path = config.output_dir / MODEL_FILE
    save_model(model, path)
    write_fingerprint(path, model_fingerprint(config))


def obtain_model(config: RunConfig, data: PreparedData) -> MlpModel:
    """Reuse the model file of the run directory if it matches the config, else train and store one."""

    path = config.output_dir / MODEL_FILE
    if _is_current(path, model_fingerprint(config)):
        LOGGER.info("Using model from %s", path)
        return load_model(path)
    model = _train_model(config, data)
    _store_model(config, model)
    return model


def _epsilon(config: RunConfig, data: PreparedData) -> float:
    if config.graph.epsilon is not None:
        return config.graph.epsilon
    return epsilon_from_quantile(data.train.X, config.graph.quantile)


def _store_graph(config: RunConfig, graph: ActionGraph) -> None:
    path = config.output_dir / GRAPH_FILE
    save_graph(graph, path)
    write_fingerprint(path, graph_fingerprint(config))


def obtain_graph(config: RunConfig, data: PreparedData, model: MlpModel) -> ActionGraph:
    path = config.output_dir / GRAPH_FILE
    if _is_current(path, graph_fingerprint(config)):
        LOGGER.info("Using action graph from %s", path)
        return load_graph(path)
    graph = build_graph(data.train, model, data.schema, _epsilon(config, data))
    _store_graph(config, graph)
    return graph


def cmd_train(config: RunConfig) -> Path:
    data = prepare_data(config)
    model = _train_model(config, data)
    _store_model(config, model)
    report = evaluate(model, data.test)
    LOGGER.info("Test accuracy %.4f, AUC %s", report.accuracy, report.auc)
    return write_rows(
        config.output_dir / "train_report.csv",
        TRAIN_COLUMNS,
        [{"dataset": data.name, "accuracy": report.accuracy, "auc": report.auc}],
    )


def cmd_synth(config: RunConfig) -> Path:
    raw = synth_2d(config.data.synthetic_n, config.data.synthetic_seed)
    csv_path = config.output_dir / "synthetic.csv"
    write_csv(raw, csv_path, label_column=config.data.label_column)
    schema_path = config.output_dir / "synthetic_schema.json"
    schema_path.write_text(json.dumps(schema_to_mapping(raw.schema), indent=2) + "\n", encoding="utf-8")
    return csv_path


def cmd_graph(config: RunConfig) -> Path:
    data = prepare_data(config)
    model = obtain_model(config, data)
    graph = build_graph(data.train, model, data.schema, _epsilon(config, data))
    _store_graph(config, graph)
    return write_rows(
        config.output_dir / "graph_report.csv",
        GRAPH_COLUMNS,
        [
            {
                "dataset": data.name,
                "nodes": graph.n_nodes,
                "edges": graph.n_edges,
                "epsilon": graph.epsilon,
                "favourable_nodes": int(np.sum(graph.labels == 1)),
            }
        ],
    )


def negative_instances(config: RunConfig, data: PreparedData, model: MlpModel) -> np.ndarray:
    """Indices of negatively predicted test rows, in row order, capped at ``max_instances``."""

    if len(data.test) == 0:
        return np.zeros(0, dtype=int)
    labels = np.atleast_1d(predict_label(model, data.test.X))
    return np.flatnonzero(labels == 0)[: config.max_instances]


def _plan_instance(
    index: int,
    data: PreparedData,
    model: MlpModel,
    params: SelectorParams,
    graph: Optional[ActionGraph],
    favourable: np.ndarray,
) -> InstanceOutcome:
    row: Dict[str, object] = {"dataset": data.name, "method": params.method, "instance": int(index)}
    x0 = data.test.X[index]
    try:
        if graph is None:
            plan = plan_linear(x0, data.train, model, params)
            path_metrics = None
        else:
            attached = attach_input(graph, x0, data.schema)
            plan = plan_graph(attached, model, params)
            path_metrics = evaluate_paths(plan, attached)
        metrics = evaluate_plan(plan, model, favourable)
    except INSTANCE_ERRORS as exc:
        LOGGER.info("Instance %d skipped: %s", index, exc)
        row.update(status="skipped", reason=str(exc))
        return InstanceOutcome(row=row)

    row.update(status="ok", reason="")
    row.update(metrics_row(metrics, path_metrics))
    row["validity"] = 1.0 if row.pop("valid") else 0.0
    return InstanceOutcome(row=row, plan=plan)


def run_instances(
    config: RunConfig,
    data: PreparedData,
    model: MlpModel,
    params: SelectorParams,
    graph: Optional[ActionGraph] = None,
) -> List[InstanceOutcome]:
    favourable = positives(data.train, np.atleast_1d(predict_label(model, data.train.X)))
    return [
        _plan_instance(int(index), data, model, params, graph, favourable)
        for index in negative_instances(config, data, model)
    ]


def _ok_rows(outcomes: Sequence[InstanceOutcome]) -> List[Dict[str, object]]:
    return [outcome.row for outcome in outcomes if outcome.plan is not None]


def _first_reason(outcomes: Sequence[InstanceOutcome]) -> str:
    for outcome in outcomes:
        if outcome.plan is None:
            return str(outcome.row.get("reason", ""))
    return "no negatively predicted test instance"


def _setup(config: RunConfig) -> Tuple[PreparedData, MlpModel, Optional[ActionGraph]]:
    data = prepare_data(config)
    model = obtain_model(config, data)
    graph = obtain_graph(config, data, model) if config.mode == GRAPH_MODE else None
    return data, model, graph


def cmd_plan(config: RunConfig) -> Path:
    data, model, graph = _setup(config)
    params = config.selector.params()
    outcomes = run_instances(config, data, model, params, graph)

    plans = [outcome.plan for outcome in outcomes if outcome.plan is not None]
    columns = GRAPH_PLAN_COLUMNS if graph is not None else PLAN_COLUMNS
    summary = aggregate(_ok_rows(outcomes), [c for c in columns if c in PLAN_METRICS + PATH_METRICS])
    summary["validity"] = validity(plans, model)
    summary_row: Dict[str, object] = {
        "dataset": data.name,
        "method": params.method,
        "instance": "mean",
        "status": "aggregate",
        "reason": f"{len(plans)} of {len(outcomes)} instances",
        **summary,
    }

    write_plans(
        (plan_to_record(outcome.plan, outcome.row["instance"]) for outcome in outcomes if outcome.plan is not None),
        config.output_dir / "plans.jsonl",
    )
    LOGGER.info("Planned %d of %d instances with %s", len(plans), len(outcomes), params.method)
    return write_rows(
        config.output_dir / "plan_metrics.csv",
        columns,
        [outcome.row for outcome in outcomes] + [summary_row],
    )


def cmd_pareto(config: RunConfig, weights: Optional[Sequence[float]] = None) -> Path:
    data, model, graph = _setup(config)
    rows = []
    for weight in weights or config.pareto_weights:
        params = replace(config.selector.params(), weight=float(weight))
        outcomes = run_instances(config, data, model, params, graph)
        ok = _ok_rows(outcomes)
        rows.append(
            {
                "weight": float(weight),
                **aggregate(ok, ("cost", "anti_diversity", "dpp")),
                "instances": len(ok),
                "skipped": len(outcomes) - len(ok),
            }
        )
    return write_rows(config.output_dir / "pareto.csv", PARETO_COLUMNS, rows)


def cmd_sweep_k(config: RunConfig, k_values: Optional[Sequence[int]] = None) -> Path:
    data, model, graph = _setup(config)
    rows = []
    for k in k_values or config.k_values:
        params = replace(config.selector.params(), k=int(k))
        outcomes = run_instances(config, data, model, params, graph)
        ok = _ok_rows(outcomes)
        row: Dict[str, object] = {
            "k": int(k),
            **aggregate(ok, ("anti_diversity", "dpp")),
            "instances": len(ok),
            "skipped": len(outcomes) - len(ok),
        }
        if ok:
            row.update(status="ok", reason="")
        else:
            row.update(status="skipped", reason=_first_reason(outcomes))
        rows.append(row)
    return write_rows(config.output_dir / "sweep_k.csv", SWEEP_COLUMNS, rows)


def _bench_instance(n: int, seed: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Directions, similarity and distances for one synthetic input, using the true labels."""

    raw = synth_2d(n, seed)
    dataset = encode_dataset(raw, fit_scaler(raw))
    negatives = np.flatnonzero(dataset.y == 0)
    if negatives.size == 0:
        raise DataError(f"synthetic sample of size {n} has no negative row")
    x0 = dataset.X[negatives[0]]
    candidates = dataset.X[dataset.y == 1]
    geometry = directions(x0, candidates)
    d = distance_vector(x0, candidates[list(geometry.kept)], EUCLIDEAN).values
    return geometry.A, similarity(geometry.A), d


def cmd_bench(config: RunConfig) -> Path:
    rows = []
    for n in config.bench_sizes:
        instances = [_bench_instance(n, config.data.synthetic_seed + rep) for rep in range(config.bench_replications)]
        for method in config.bench_methods:
            params = replace(config.selector.params(), method=method)
            seconds = []
            for A, S, d in instances:
                started = time.perf_counter()
                select_prototypes(A, S, d, params)
                seconds.append(time.perf_counter() - started)
            LOGGER.info("%s with N=%d: %.4fs", method, n, float(np.mean(seconds)))
            rows.append(
                {
                    "method": method,
                    "n": int(n),
                    "candidates": int(np.mean([len(d) for _, _, d in instances])),
                    "seconds": float(np.mean(seconds)),
                }
            )
    return write_rows(config.output_dir / "bench.csv", BENCH_COLUMNS, rows)
