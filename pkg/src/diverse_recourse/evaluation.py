"""Plan and sequential-path metrics."""

from __future__ import annotations

import itertools
import logging
from dataclasses import asdict, dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .action_graph import ActionGraph
from .classifier import MlpModel, predict_label
from .interpolation import RecoursePlan

LOGGER = logging.getLogger(__name__)

Distance = Callable[[np.ndarray, np.ndarray], float]


def euclidean(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


@dataclass(frozen=True)
class PlanMetrics:
    cost: float
    valid: bool
    anti_diversity: float
    dpp: float
    manifold_distance: float


@dataclass(frozen=True)
class PathMetrics:
    path_diversity: Optional[float]
    path_anti_diversity: Optional[float]
    shortest_path_cost: float


def cost(plan: RecoursePlan, x0: Optional[np.ndarray] = None, dist: Distance = euclidean) -> float:
    """Mean distance between the input and the recourses."""

    if plan.k == 0:
        raise ValueError("Plan has no recourses")
    origin = plan.x0 if x0 is None else np.asarray(x0, dtype=float)
    return float(np.mean([dist(entry.recourse, origin) for entry in plan.entries]))


def plan_is_valid(plan: RecoursePlan, model: MlpModel) -> bool:
    return bool(np.all(np.atleast_1d(predict_label(model, plan.recourses)) == 1))


def validity(plans: Sequence[RecoursePlan], model: MlpModel) -> Optional[float]:
    """Fraction of plans whose every recourse is favourable; None for no plans."""

    if not plans:
        return None
    return sum(plan_is_valid(plan, model) for plan in plans) / len(plans)


def anti_diversity_metric(plan: RecoursePlan, x0: Optional[np.ndarray] = None) -> float:
    """Sum of cosine similarities over ordered pairs k != k' of recourse directions."""

    origin = plan.x0 if x0 is None else np.asarray(x0, dtype=float)
    diff = plan.recourses - origin
    norms = np.linalg.norm(diff, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("A recourse coincides with the input; its direction is undefined")
    unit = diff / norms[:, None]
    gram = unit @ unit.T
    return float(gram.sum() - np.trace(gram))


def dpp_metric(plan: RecoursePlan, dist: Distance = euclidean) -> float:
    """det(Q) with Q_ij = 1 / (1 + dist(x_i, x_j))."""

    recourses = plan.recourses
    k = recourses.shape[0]
    if k < 1:
        raise ValueError("Plan has no recourses")
    Q = np.ones((k, k))
    for i, j in itertools.combinations(range(k), 2):
        Q[i, j] = Q[j, i] = 1.0 / (1.0 + dist(recourses[i], recourses[j]))
    return float(np.linalg.det(Q))


def manifold_distance(plan: RecoursePlan, positives: np.ndarray) -> float:
    """Largest distance from a recourse to its nearest favourable sample."""

    positives = np.atleast_2d(np.asarray(positives, dtype=float))
    if positives.shape[0] == 0:
        raise ValueError("Need at least one favourable sample")
    return float(cdist(plan.recourses, positives).min(axis=1).max())


def path_levenshtein(P: np.ndarray, Q: np.ndarray) -> float:
    """Edit distance between node sequences with Euclidean substitution/deletion costs.

    Deleting node i of a path costs its distance to node i - 1; deleting the first
    node is free, so Lev(P, empty) is the length of P.
    """

    P = np.atleast_2d(np.asarray(P, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    p_delete = np.concatenate(([0.0], np.linalg.norm(np.diff(P, axis=0), axis=1)))
    q_delete = np.concatenate(([0.0], np.linalg.norm(np.diff(Q, axis=0), axis=1)))
    substitute = cdist(P, Q)

    rows, cols = P.shape[0], Q.shape[0]
    table = np.zeros((rows + 1, cols + 1))
    for i in range(1, rows + 1):
        table[i, 0] = p_delete[i - 1] + table[i - 1, 0]
    for j in range(1, cols + 1):
        table[0, j] = q_delete[j - 1] + table[0, j - 1]
    for i in range(1, rows + 1):
        for j in range(1, cols + 1):
            table[i, j] = min(
                q_delete[j - 1] + table[i, j - 1],
                p_delete[i - 1] + table[i - 1, j],
                substitute[i - 1, j - 1] + table[i - 1, j - 1],
            )
    return float(table[rows, cols])


def _mean_pairwise(values: Iterable[float]) -> Optional[float]:
    values = list(values)
    return float(np.mean(values)) if values else None


def path_diversity(paths: Sequence[np.ndarray]) -> Optional[float]:
    """Mean pairwise Levenshtein distance; None for fewer than two paths."""

    if len(paths) < 2:
        return None
    return _mean_pairwise(path_levenshtein(a, b) for a, b in itertools.combinations(paths, 2))


def _edge_lengths(nodes: Sequence[int], coordinates: np.ndarray) -> Dict[frozenset, float]:
    edges: Dict[frozenset, float] = {}
    for u, v in zip(nodes[:-1], nodes[1:]):
        edges[frozenset((int(u), int(v)))] = euclidean(coordinates[u], coordinates[v])
    return edges


def path_jaccard(P: Sequence[int], Q: Sequence[int], coordinates: np.ndarray) -> float:
    """Length-weighted Jaccard coefficient of the edge sets of two node paths."""

    p_edges = _edge_lengths(P, coordinates)
    q_edges = _edge_lengths(Q, coordinates)
    union = set(p_edges) | set(q_edges)
    lengths = {**q_edges, **p_edges}
    total = sum(lengths[edge] for edge in union)
    if total == 0.0:
        return 1.0 if set(p_edges) == set(q_edges) else 0.0
    shared = sum(lengths[edge] for edge in set(p_edges) & set(q_edges))
    return shared / total


def path_anti_diversity(paths: Sequence[Sequence[int]], coordinates: np.ndarray) -> Optional[float]:
    if len(paths) < 2:
        return None
    return _mean_pairwise(path_jaccard(a, b, coordinates) for a, b in itertools.combinations(paths, 2))


def evaluate_plan(plan: RecoursePlan, model: MlpModel, positives: np.ndarray) -> PlanMetrics:
    return PlanMetrics(
        cost=cost(plan),
        valid=plan_is_valid(plan, model),
        anti_diversity=anti_diversity_metric(plan),
        dpp=dpp_metric(plan),
        manifold_distance=manifold_distance(plan, positives),
    )


def evaluate_paths(plan: RecoursePlan, graph: ActionGraph) -> PathMetrics:
    node_paths = [entry.path.nodes for entry in plan.entries if entry.path is not None]
    if len(node_paths) != plan.k:
        raise ValueError("Path metrics need a graph-mode plan")
    return PathMetrics(
        path_diversity=path_diversity([graph.X[list(nodes)] for nodes in node_paths]),
        path_anti_diversity=path_anti_diversity(node_paths, graph.X),
        shortest_path_cost=float(np.mean([entry.path.weight for entry in plan.entries])),
    )


def metrics_row(plan_metrics: PlanMetrics, path_metrics: Optional[PathMetrics] = None) -> Dict[str, object]:
    row: Dict[str, object] = asdict(plan_metrics)
    if path_metrics is not None:
        row.update(asdict(path_metrics))
    return row


def aggregate(rows: Sequence[Dict[str, object]], keys: Sequence[str]) -> Dict[str, Optional[float]]:
    """Column means over rows, skipping missing (None) entries."""

    summary: Dict[str, Optional[float]] = {}
    for key in keys:
        values: List[float] = [float(row[key]) for row in rows if row.get(key) is not None]
        summary[key] = float(np.mean(values)) if values else None
    return summary
