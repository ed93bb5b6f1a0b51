"""Tests für den Aktionsgraphen: Kantenregeln, Dijkstra, Pfade und Dateiformat."""

from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from diverse_recourse.action_graph import (
    INPUT_ORIGIN,
    ActionGraph,
    GraphFileError,
    IsolatedInputError,
    attach_input,
    build_graph,
    epsilon_from_quantile,
    extract_path,
    load_graph,
    save_graph,
    shortest_paths,
)
from diverse_recourse.classifier import MlpModel
from diverse_recourse.data import CATEGORICAL, CONTINUOUS, DataError, Dataset, Feature, FeatureSchema


def _constant_model(dimension: int, bias: float = 1.0) -> MlpModel:
    return MlpModel(layer_dims=(dimension, 1), weights=(np.zeros((1, dimension)),), biases=(np.array([bias]),))


def _dataset(X: np.ndarray, schema: FeatureSchema) -> Dataset:
    return Dataset(X=X, y=np.zeros(X.shape[0], dtype=int), schema=schema, provenance="test")


def _plain_schema(dimension: int) -> FeatureSchema:
    return FeatureSchema(features=tuple(Feature(name=f"x{i}", kind=CONTINUOUS) for i in range(dimension)))


def _bellman_ford(graph: ActionGraph, source: int) -> np.ndarray:
    dist = np.full(graph.n_nodes, math.inf)
    dist[source] = 0.0
    edges = graph.edges()
    for _ in range(graph.n_nodes - 1):
        changed = False
        for u, v, w in edges:
            if dist[u] + w < dist[v]:
                dist[v] = dist[u] + w
                changed = True
        if not changed:
            break
    return dist


def _random_graph(seed: int) -> ActionGraph:
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 51))
    X = rng.uniform(size=(n, 2))
    schema = _plain_schema(2)
    return build_graph(_dataset(X, schema), _constant_model(2), schema, epsilon=float(rng.uniform(0.1, 0.5)))


def test_edges_respect_epsilon_and_weights() -> None:
    X = np.array([[0.0, 0.0], [0.3, 0.4], [1.0, 1.0]])
    schema = _plain_schema(2)
    graph = build_graph(_dataset(X, schema), _constant_model(2), schema, epsilon=0.6)
    assert graph.edges() == [(0, 1, pytest.approx(0.5)), (1, 0, pytest.approx(0.5))]
    assert not graph.has_edge(0, 2)
    assert graph.labels.tolist() == [1, 1, 1]


def test_immutable_blocks_must_agree() -> None:
    schema = FeatureSchema(
        features=(
            Feature(name="group", kind=CATEGORICAL, levels=("a", "b"), mutable=False),
            Feature(name="x", kind=CONTINUOUS),
        )
    )
    X = np.array([[1.0, 0.0, 0.1], [0.0, 1.0, 0.1], [1.0, 0.0, 0.2]])
    graph = build_graph(_dataset(X, schema), _constant_model(3), schema, epsilon=5.0)
    assert graph.has_edge(0, 2) and graph.has_edge(2, 0)
    assert not graph.has_edge(0, 1) and not graph.has_edge(1, 2)


def test_monotone_feature_only_moves_one_way() -> None:
    schema = FeatureSchema(features=(Feature(name="age", kind=CONTINUOUS, monotone="increasing"),))
    X = np.array([[0.2], [0.4]])
    graph = build_graph(_dataset(X, schema), _constant_model(1), schema, epsilon=1.0)
    assert graph.has_edge(0, 1)
    assert not graph.has_edge(1, 0)


def test_rejects_non_positive_epsilon() -> None:
    schema = _plain_schema(1)
    with pytest.raises(ValueError):
        build_graph(_dataset(np.zeros((2, 1)), schema), _constant_model(1), schema, epsilon=0.0)


def test_epsilon_from_quantile() -> None:
    X = np.array([[0.0], [1.0], [3.0]])
    # pairwise distances 1, 2, 3
    assert epsilon_from_quantile(X, 0.5) == pytest.approx(2.0)
    assert epsilon_from_quantile(X, 1.0) == pytest.approx(3.0)


@pytest.mark.parametrize("X", [np.zeros((1, 2)), np.zeros((0, 2)), np.ones((4, 2))])
def test_epsilon_from_degenerate_data_is_an_error(X: np.ndarray) -> None:
    """Ohne positiven Abstand gibt es keinen sinnvollen Radius."""
    with pytest.raises(DataError, match="epsilon"):
        epsilon_from_quantile(X)


class TestInputNode:
    def test_input_has_outgoing_edges_only(self) -> None:
        schema = _plain_schema(2)
        X = np.array([[0.0, 0.0], [0.1, 0.0]])
        graph = attach_input(
            build_graph(_dataset(X, schema), _constant_model(2), schema, epsilon=0.5),
            np.array([0.0, 0.1]),
            schema,
        )
        source = graph.input_node()
        assert source == 2
        assert graph.origins[source] == INPUT_ORIGIN
        assert graph.labels[source] == 0
        assert {v for v, _ in graph.adjacency[source]} == {0, 1}
        assert not any(graph.has_edge(u, source) for u in range(2))

    def test_isolated_input(self) -> None:
        schema = _plain_schema(2)
        graph = build_graph(_dataset(np.zeros((2, 2)), schema), _constant_model(2), schema, epsilon=0.1)
        with pytest.raises(IsolatedInputError, match="isolated input"):
            attach_input(graph, np.array([5.0, 5.0]), schema)


@pytest.mark.parametrize("seed", range(100))
def test_dijkstra_matches_bellman_ford(seed: int) -> None:
    graph = _random_graph(seed)
    for u, v, w in graph.edges():
        assert w <= graph.epsilon
    paths = shortest_paths(graph, 0)
    reference = _bellman_ford(graph, 0)
    assert np.array_equal(np.isinf(paths.dist), np.isinf(reference))
    finite = np.isfinite(reference)
    assert np.allclose(paths.dist[finite], reference[finite], rtol=0.0, atol=1e-12)


def test_extracted_paths_are_consistent() -> None:
    graph = _random_graph(7)
    paths = shortest_paths(graph, 0)
    for target in np.flatnonzero(np.isfinite(paths.dist)):
        path = extract_path(paths, int(target), graph)
        assert path.nodes[0] == 0 and path.nodes[-1] == target
        assert all(graph.has_edge(u, v) for u, v in zip(path.nodes[:-1], path.nodes[1:]))
        assert abs(path.weight - paths.dist[target]) <= 1e-9


def test_unreachable_target() -> None:
    schema = _plain_schema(1)
    graph = build_graph(_dataset(np.array([[0.0], [9.0]]), schema), _constant_model(1), schema, epsilon=1.0)
    with pytest.raises(ValueError, match="not reachable"):
        extract_path(shortest_paths(graph, 0), 1, graph)


def test_graph_file_round_trip(tmp_path: Path) -> None:
    schema = _plain_schema(2)
    base = _random_graph(3)
    graph = attach_input(base, base.X[0] + 1e-3, schema)
    path = tmp_path / "graph.txt"
    save_graph(graph, path)
    restored = load_graph(path)
    assert restored.edges() == graph.edges()
    assert np.array_equal(restored.X, graph.X)
    assert restored.origins == graph.origins
    assert restored.epsilon == graph.epsilon


def test_graph_file_errors_carry_line_numbers(tmp_path: Path) -> None:
    path = tmp_path / "graph.txt"
    save_graph(_random_graph(1), path)
    lines = path.read_text(encoding="utf-8").splitlines()
    lines[4] = "node zero"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(GraphFileError, match="line 5"):
        load_graph(path)
