"""From prototypes to recourses: selector dispatch, linear and graph interpolation."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple

import numpy as np

from .action_graph import ActionGraph, GraphPath, extract_path, shortest_paths
from .classifier import MlpModel, predict_label
from .data import Dataset
from .dpp_select import Selection, dpp_objective, greedy_map, kernel, local_search, locality_diag
from .geometry import (
    EUCLIDEAN,
    GRAPH,
    DistanceVector,
    default_rank,
    directions,
    distance_vector,
    eigenbasis_from_directions,
    similarity,
)
from .quad_select import (
    BEST_RESPONSE,
    DUAL_ASCENT,
    DEFAULT_ITERATIONS,
    DEFAULT_STEP,
    DEFAULT_WINDOW,
    QuadProblem,
    k_nearest,
    objective as quad_objective,
    quad_greedy,
    quad_local_search,
    solve_quad,
    solve_reduced,
)

LOGGER = logging.getLogger(__name__)

METHODS = ("dpp-greedy", "dpp-ls", "quad-br", "quad-da", "quad-greedy", "quad-ls", "exact")
LINEAR = "linear"
GRAPH_MODE = "graph"
DEFAULT_GRID = 100
DEFAULT_TOL = 1e-6


class PlanError(RuntimeError):
    pass


@dataclass(frozen=True)
class SelectorParams:
    method: str = "quad-br"
    k: int = 3
    weight: float = 0.9
    bandwidth: float = 1.0
    rank: Optional[int] = None
    iterations: int = DEFAULT_ITERATIONS
    window: int = DEFAULT_WINDOW
    step: float = DEFAULT_STEP
    grid: int = DEFAULT_GRID
    tol: float = DEFAULT_TOL

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"Unknown method '{self.method}', choose from {', '.join(METHODS)}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError("weight must lie in [0, 1]")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")


@dataclass(frozen=True)
class PlanEntry:
    prototype_index: int
    prototype: np.ndarray
    recourse: np.ndarray
    step: Optional[float] = None
    path: Optional[GraphPath] = None


@dataclass(frozen=True)
class RecoursePlan:
    x0: np.ndarray
    entries: Tuple[PlanEntry, ...]
    method: str
    mode: str
    selection_value: Optional[float] = None

    @property
    def k(self) -> int:
        return len(self.entries)

    @property
    def recourses(self) -> np.ndarray:
        return np.vstack([entry.recourse for entry in self.entries])

    @property
    def prototypes(self) -> np.ndarray:
        return np.vstack([entry.prototype for entry in self.entries])


def linear_recourse(
    x0: np.ndarray,
    prototype: np.ndarray,
    model: MlpModel,
    grid: int = DEFAULT_GRID,
    tol: float = DEFAULT_TOL,
) -> Tuple[np.ndarray, float]:
    """Earliest favourable point on the segment from ``x0`` to ``prototype``.

    The segment is scanned on ``grid`` points in (0, 1]; the first favourable grid
    cell is then bisected down to ``tol``. Returns the recourse and its step.
    """

    x0 = np.asarray(x0, dtype=float)
    prototype = np.asarray(prototype, dtype=float)
    if predict_label(model, prototype) != 1:
        raise PlanError("invalid prototype: the model does not predict it favourably")
    if grid < 1 or tol <= 0:
        raise ValueError("grid must be >= 1 and tol positive")

    direction = prototype - x0
    steps = np.arange(1, grid + 1) / grid
    points = x0 + steps[:, None] * direction
    points[-1] = prototype
    labels = predict_label(model, points)
    first = int(np.argmax(labels == 1))

    low = 0.0 if first == 0 else float(steps[first - 1])
    high = float(steps[first])
    while high - low > tol:
        middle = 0.5 * (low + high)
        if predict_label(model, x0 + middle * direction) == 1:
            high = middle
        else:
            low = middle
    if high == 1.0:
        return prototype.copy(), 1.0
    return x0 + high * direction, high


def select_prototypes(
    A: np.ndarray,
    S: np.ndarray,
    d: np.ndarray,
    params: SelectorParams,
) -> Tuple[Selection, float]:
    """Run the configured selector; returns the selection and its objective value."""

    n = d.shape[0]
    if n < params.k:
        raise PlanError(f"only {n} candidate prototype(s) for K={params.k}")

    method = params.method
    if method.startswith("dpp"):
        L = kernel(S, locality_diag(d, params.bandwidth), params.weight, params.bandwidth)
        selection = greedy_map(L, params.k)
        if selection.size < params.k:
            raise PlanError(f"greedy MAP found only {selection.size} of {params.k} items with positive gain")
        if method == "dpp-ls":
            selection = local_search(L, params.k, selection)
        return selection, dpp_objective(L, selection)

    problem = QuadProblem(S=S, d=d, weight=params.weight, k=params.k)
    if params.weight == 0.0:
        # the distance-only program is solved by the K nearest candidates
        selection = k_nearest(d, params.k)
    elif method in ("quad-br", "quad-da"):
        rank = params.rank or default_rank(A.shape[0], n)
        basis = eigenbasis_from_directions(A, min(rank, n))
        solver = BEST_RESPONSE if method == "quad-br" else DUAL_ASCENT
        result = solve_quad(problem, basis, solver, params.iterations, params.window, params.step)
        return result.selection, result.objective
    elif method == "quad-greedy":
        selection = quad_greedy(problem)
    elif method == "quad-ls":
        selection = quad_local_search(problem, quad_greedy(problem))
    else:
        incumbent = quad_local_search(problem, quad_greedy(problem))
        selection = solve_reduced(problem, range(n), incumbent=incumbent)

    return selection, quad_objective(selection, problem)


def _favourable_candidates(x0: np.ndarray, X: np.ndarray, labels: np.ndarray):
    index = np.flatnonzero(np.asarray(labels) == 1)
    geometry = directions(x0, X[index])
    kept = index[list(geometry.kept)]
    return kept, geometry


def plan_linear(
    x0: np.ndarray,
    dataset: Dataset,
    model: MlpModel,
    params: SelectorParams,
) -> RecoursePlan:
    """Select K favourable training samples and move towards each along a line."""

    x0 = np.asarray(x0, dtype=float)
    if predict_label(model, x0) != 0:
        raise PlanError("input is already predicted favourably")

    labels = predict_label(model, dataset.X)
    candidates, geometry = _favourable_candidates(x0, dataset.X, np.atleast_1d(labels))
    if candidates.size < params.k:
        raise PlanError(f"only {candidates.size} favourable candidate(s) for K={params.k}")

    S = similarity(geometry.A)
    d = distance_vector(x0, dataset.X[candidates], EUCLIDEAN).values
    selection, value = select_prototypes(geometry.A, S, d, params)

    entries = []
    for position in selection.indices:
        index = int(candidates[position])
        prototype = dataset.X[index]
        recourse, step = linear_recourse(x0, prototype, model, params.grid, params.tol)
        entries.append(PlanEntry(prototype_index=index, prototype=prototype.copy(), recourse=recourse, step=step))
    return RecoursePlan(x0=x0, entries=tuple(entries), method=params.method, mode=LINEAR, selection_value=value)


def plan_graph(
    graph: ActionGraph,
    model: MlpModel,
    params: SelectorParams,
) -> RecoursePlan:
    """Select K reachable favourable nodes by graph distance and return their shortest paths.

    ``graph`` must already carry the input node (see ``attach_input``).
    """

    source = graph.input_node()
    if source is None:
        raise PlanError("graph has no attached input node")
    x0 = graph.X[source]
    if predict_label(model, x0) != 0:
        raise PlanError("input is already predicted favourably")

    paths = shortest_paths(graph, source)
    favourable = np.flatnonzero(graph.labels == 1)
    favourable = favourable[favourable != source]
    reachable = favourable[np.isfinite(paths.dist[favourable])]
    if reachable.size < params.k:
        raise PlanError(f"only {reachable.size} reachable favourable node(s) for K={params.k}")

    geometry = directions(x0, graph.X[reachable])
    nodes = reachable[list(geometry.kept)]
    if nodes.size < params.k:
        raise PlanError(f"only {nodes.size} reachable favourable node(s) for K={params.k}")

    distances: DistanceVector = distance_vector(x0, kind=GRAPH, graph_distances=paths.dist[nodes])
    S = similarity(geometry.A)
    selection, value = select_prototypes(geometry.A, S, distances.values, params)

    entries = []
    for position in selection.indices:
        node = int(nodes[position])
        path = extract_path(paths, node, graph)
        prototype = graph.X[node]
        entries.append(
            PlanEntry(
                prototype_index=int(graph.origins[node]),
                prototype=prototype.copy(),
                recourse=prototype.copy(),
                path=path,
            )
        )
    return RecoursePlan(x0=x0.copy(), entries=tuple(entries), method=params.method, mode=GRAPH_MODE, selection_value=value)


def plan_to_record(plan: RecoursePlan, instance: Optional[int] = None) -> Dict[str, Any]:
    record: Dict[str, Any] = {
        "method": plan.method,
        "mode": plan.mode,
        "x0": plan.x0.tolist(),
        "entries": [],
    }
    if instance is not None:
        record["instance"] = instance
    for entry in plan.entries:
        item: Dict[str, Any] = {
            "prototype_index": entry.prototype_index,
            "recourse": entry.recourse.tolist(),
        }
        if entry.step is not None:
            item["step"] = entry.step
        if entry.path is not None:
            item["path"] = list(entry.path.nodes)
            item["path_weight"] = entry.path.weight
        record["entries"].append(item)
    return record


def write_plans(records: Iterable[Dict[str, Any]], path: Path) -> None:
    """One JSON object per line; the file is replaced on every run."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record) + "\n")
