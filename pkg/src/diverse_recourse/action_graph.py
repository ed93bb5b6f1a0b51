"""Actionability graph over training samples and shortest-path machinery."""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .classifier import MlpModel, predict_label
from .data import DataError, Dataset, FeatureSchema

LOGGER = logging.getLogger(__name__)

INPUT_ORIGIN = "input"
DEFAULT_QUANTILE = 0.1
PATH_TOL = 1e-9
GRAPH_FORMAT = "action-graph-v1"

Origin = Union[int, str]


class GraphFileError(ValueError):
    pass


class IsolatedInputError(RuntimeError):
    pass


@dataclass(frozen=True)
class ActionGraph:
    """Directed weighted graph; node ``i`` has coordinates ``X[i]``.

    ``adjacency[u]`` lists ``(v, weight)`` sorted by ``v``.
    """

    X: np.ndarray
    labels: np.ndarray
    origins: Tuple[Origin, ...]
    adjacency: Tuple[Tuple[Tuple[int, float], ...], ...]
    epsilon: float
    distance: str = "euclidean"
    _weights: Dict[Tuple[int, int], float] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not self._weights:
            for u, edges in enumerate(self.adjacency):
                for v, weight in edges:
                    self._weights[(u, v)] = weight

    @property
    def n_nodes(self) -> int:
        return int(self.X.shape[0])

    @property
    def n_edges(self) -> int:
        return sum(len(edges) for edges in self.adjacency)

    def edges(self) -> List[Tuple[int, int, float]]:
        return [(u, v, w) for u, out in enumerate(self.adjacency) for v, w in out]

    def edge_weight(self, u: int, v: int) -> float:
        return self._weights[(u, v)]

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._weights

    def input_node(self) -> Optional[int]:
        for node, origin in enumerate(self.origins):
            if origin == INPUT_ORIGIN:
                return node
        return None


@dataclass(frozen=True)
class ShortestPaths:
    source: int
    dist: np.ndarray
    predecessor: np.ndarray


@dataclass(frozen=True)
class GraphPath:
    """Node sequence from the source to a target and its total edge weight."""

    nodes: Tuple[int, ...]
    weight: float


def epsilon_from_quantile(X: np.ndarray, quantile: float = DEFAULT_QUANTILE) -> float:
    """The ``quantile`` of all pairwise distances between the rows of ``X``."""

    if not 0.0 < quantile <= 1.0:
        raise ValueError(f"quantile must lie in (0, 1], got {quantile}")
    distances = pdist(np.asarray(X, dtype=float))
    if distances.size == 0:
        raise DataError("at least two rows are needed to derive epsilon from pairwise distances")
    epsilon = float(np.quantile(distances, quantile))
    if epsilon <= 0.0:
        raise DataError(f"the {quantile} quantile of pairwise distances is zero; set graph.epsilon explicitly")
    return epsilon


def _admissible(
    sources: np.ndarray,
    targets: np.ndarray,
    schema: FeatureSchema,
    epsilon: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """Mask of admissible transitions ``sources[i] -> targets[j]`` and their weights."""

    weights = cdist(sources, targets)
    mask = weights <= epsilon

    immutable = schema.immutable_mask()
    if immutable.any():
        same = cdist(sources[:, immutable], targets[:, immutable], metric="cityblock") == 0.0
        mask &= same

    for feature, block in zip(schema.features, schema.blocks()):
        if feature.monotone is None:
            continue
        # continuous features carry one coordinate; categorical ones compare level positions
        if block.stop - block.start == 1:
            before = sources[:, block.start][:, None]
            after = targets[:, block.start][None, :]
        else:
            before = np.argmax(sources[:, block], axis=1)[:, None]
            after = np.argmax(targets[:, block], axis=1)[None, :]
        if feature.monotone == "increasing":
            mask &= after >= before
        else:
            mask &= after <= before
    return mask, weights


def _adjacency_from_mask(mask: np.ndarray, weights: np.ndarray) -> List[Tuple[Tuple[int, float], ...]]:
    adjacency = []
    for u in range(mask.shape[0]):
        targets = np.flatnonzero(mask[u])
        adjacency.append(tuple((int(v), float(weights[u, v])) for v in targets))
    return adjacency


def build_graph(
    train: Dataset,
    model: MlpModel,
    schema: FeatureSchema,
    epsilon: float,
) -> ActionGraph:
    """Edge u -> v iff ||u - v|| <= epsilon and the immutable blocks agree."""

    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")

    X = np.asarray(train.X, dtype=float)
    mask, weights = _admissible(X, X, schema, epsilon)
    np.fill_diagonal(mask, False)
    labels = np.asarray(predict_label(model, X), dtype=int) if len(X) else np.zeros(0, dtype=int)

    graph = ActionGraph(
        X=X,
        labels=labels,
        origins=tuple(range(X.shape[0])),
        adjacency=tuple(_adjacency_from_mask(mask, weights)),
        epsilon=float(epsilon),
    )
    LOGGER.info(
        "Built action graph: %d nodes, %d edges, epsilon=%.6g", graph.n_nodes, graph.n_edges, epsilon
    )
    return graph


def attach_input(
    graph: ActionGraph,
    x0: np.ndarray,
    schema: FeatureSchema,
    label: int = 0,
) -> ActionGraph:
    """Append ``x0`` as a source-only node with edges to every admissible training node."""

    if graph.input_node() is not None:
        raise ValueError("Graph already has an attached input node")
    x0 = np.asarray(x0, dtype=float)
    if graph.n_nodes and x0.shape != (graph.X.shape[1],):
        raise ValueError(f"Input has shape {x0.shape}, graph nodes have dimension {graph.X.shape[1]}")

    mask, weights = _admissible(x0[None, :], graph.X, schema, graph.epsilon)
    outgoing = _adjacency_from_mask(mask, weights)[0] if graph.n_nodes else ()
    if not outgoing:
        raise IsolatedInputError("isolated input: no training node is reachable in one action")

    return ActionGraph(
        X=np.vstack([graph.X, x0[None, :]]) if graph.n_nodes else x0[None, :],
        labels=np.append(graph.labels, int(label)),
        origins=graph.origins + (INPUT_ORIGIN,),
        adjacency=graph.adjacency + (tuple(outgoing),),
        epsilon=graph.epsilon,
        distance=graph.distance,
    )


def shortest_paths(graph: ActionGraph, source: int) -> ShortestPaths:
    """Dijkstra with a binary heap; equal distances pop in node-id order."""

    dist = np.full(graph.n_nodes, math.inf)
    predecessor = np.full(graph.n_nodes, -1, dtype=int)
    dist[source] = 0.0
    settled = np.zeros(graph.n_nodes, dtype=bool)
    heap: List[Tuple[float, int]] = [(0.0, source)]
    while heap:
        cost, u = heapq.heappop(heap)
        if settled[u]:
            continue
        settled[u] = True
        for v, weight in graph.adjacency[u]:
            if settled[v]:
                continue
            candidate = cost + weight
            if candidate < dist[v]:
                dist[v] = candidate
                predecessor[v] = u
                heapq.heappush(heap, (candidate, v))
    return ShortestPaths(source=source, dist=dist, predecessor=predecessor)


def extract_path(paths: ShortestPaths, target: int, graph: ActionGraph) -> GraphPath:
    if not math.isfinite(paths.dist[target]):
        raise ValueError(f"Node {target} is not reachable from {paths.source}")

    nodes = [target]
    while nodes[-1] != paths.source:
        previous = int(paths.predecessor[nodes[-1]])
        if previous < 0:
            raise ValueError(f"Broken predecessor chain at node {nodes[-1]}")
        nodes.append(previous)
    nodes.reverse()

    weight = 0.0
    for u, v in zip(nodes[:-1], nodes[1:]):
        weight += graph.edge_weight(u, v)
    if abs(weight - paths.dist[target]) > PATH_TOL:
        raise AssertionError(
            f"Path weight {weight!r} disagrees with shortest distance {paths.dist[target]!r}"
        )
    return GraphPath(nodes=tuple(nodes), weight=weight)


def save_graph(graph: ActionGraph, path: Path) -> None:
    """Plain-text node table followed by the directed edge list, full float precision."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dimension = graph.X.shape[1] if graph.X.ndim == 2 else 0
    lines = [
        GRAPH_FORMAT,
        f"epsilon {graph.epsilon!r}",
        f"distance {graph.distance}",
        f"nodes {graph.n_nodes} {dimension}",
    ]
    for node in range(graph.n_nodes):
        coordinates = " ".join(repr(float(value)) for value in graph.X[node])
        lines.append(f"node {node} {graph.origins[node]} {int(graph.labels[node])} {coordinates}".rstrip())
    edges = graph.edges()
    lines.append(f"edges {len(edges)}")
    lines.extend(f"edge {u} {v} {w!r}" for u, v, w in edges)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _header(lines: Sequence[str], number: int, keyword: str) -> List[str]:
    if number > len(lines):
        raise GraphFileError(f"line {number}: unexpected end of file, expected '{keyword}'")
    parts = lines[number - 1].split()
    if not parts or parts[0] != keyword:
        raise GraphFileError(f"line {number}: expected '{keyword}'")
    return parts


def load_graph(path: Path) -> ActionGraph:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except FileNotFoundError as exc:
        raise GraphFileError(f"Graph file not found at '{path}'") from exc

    if not lines or lines[0].strip() != GRAPH_FORMAT:
        raise GraphFileError(f"line 1: expected format tag '{GRAPH_FORMAT}'")
    try:
        epsilon = float(_header(lines, 2, "epsilon")[1])
        distance = _header(lines, 3, "distance")[1]
        _, n_text, p_text = _header(lines, 4, "nodes")
        n_nodes, dimension = int(n_text), int(p_text)
    except (IndexError, ValueError) as exc:
        if isinstance(exc, GraphFileError):
            raise
        raise GraphFileError(f"malformed header: {exc}") from exc

    X = np.zeros((n_nodes, dimension))
    labels = np.zeros(n_nodes, dtype=int)
    origins: List[Origin] = []
    number = 4
    for node in range(n_nodes):
        number += 1
        parts = _header(lines, number, "node")
        try:
            if int(parts[1]) != node or len(parts) != 4 + dimension:
                raise ValueError("node id or coordinate count mismatch")
            origin = parts[2]
            origins.append(origin if origin == INPUT_ORIGIN else int(origin))
            labels[node] = int(parts[3])
            X[node] = [float(value) for value in parts[4:]]
        except (IndexError, ValueError) as exc:
            raise GraphFileError(f"line {number}: malformed node record ({exc})") from exc

    number += 1
    try:
        n_edges = int(_header(lines, number, "edges")[1])
    except (IndexError, ValueError) as exc:
        if isinstance(exc, GraphFileError):
            raise
        raise GraphFileError(f"line {number}: malformed edge count") from exc

    adjacency: List[List[Tuple[int, float]]] = [[] for _ in range(n_nodes)]
    for _ in range(n_edges):
        number += 1
        parts = _header(lines, number, "edge")
        try:
            u, v, weight = int(parts[1]), int(parts[2]), float(parts[3])
            if not (0 <= u < n_nodes and 0 <= v < n_nodes) or weight < 0:
                raise ValueError("endpoint out of range or negative weight")
        except (IndexError, ValueError) as exc:
            raise GraphFileError(f"line {number}: malformed edge record ({exc})") from exc
        adjacency[u].append((v, weight))

    return ActionGraph(
        X=X,
        labels=labels,
        origins=tuple(origins),
        adjacency=tuple(tuple(sorted(edges)) for edges in adjacency),
        epsilon=epsilon,
        distance=distance,
    )
