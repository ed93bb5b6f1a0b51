"""Tests für Richtungsvektoren, Ähnlichkeiten, Distanzen und Eigenbasis."""

from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from diverse_recourse.geometry import (
    EUCLIDEAN,
    GRAPH,
    default_rank,
    directions,
    distance_vector,
    eigenbasis,
    eigenbasis_from_directions,
    similarity,
)


def test_directions_are_unit_columns() -> None:
    x0 = np.zeros(2)
    geometry = directions(x0, np.array([[3.0, 4.0], [0.0, 2.0]]))
    assert geometry.A[:, 0].tolist() == pytest.approx([0.6, 0.8])
    assert geometry.A[:, 1].tolist() == pytest.approx([0.0, 1.0])
    assert np.allclose(np.linalg.norm(geometry.A, axis=0), 1.0)


def test_coincident_sample_is_excluded() -> None:
    x0 = np.array([1.0, 1.0])
    geometry = directions(x0, np.array([[1.0, 1.0], [2.0, 1.0]]))
    assert geometry.excluded == (0,)
    assert geometry.kept == (1,)
    assert geometry.size == 1


def test_similarity_of_special_columns() -> None:
    A = np.array([[1.0, 1.0, 0.0, -1.0], [0.0, 0.0, 1.0, 0.0]])
    S = similarity(A)
    assert S[0, 1] == 1.0
    assert S[0, 2] == 0.0
    assert S[0, 3] == -1.0
    assert np.array_equal(S, S.T)


def test_euclidean_distance() -> None:
    result = distance_vector(np.zeros(2), np.array([[3.0, 4.0]]), EUCLIDEAN)
    assert result.values.tolist() == [5.0]


def test_graph_distances_drop_unreachable() -> None:
    result = distance_vector(np.zeros(2), kind=GRAPH, graph_distances=[1.5, math.inf, 0.5])
    assert result.values.tolist() == [1.5, 0.5]
    assert result.kept == (0, 2)
    assert result.dropped == (1,)


def test_graph_distances_all_unreachable() -> None:
    with pytest.raises(ValueError, match="no reachable favorable nodes"):
        distance_vector(np.zeros(2), kind=GRAPH, graph_distances=[math.inf])


class TestEigenBasis:
    @staticmethod
    def _random_similarity(seed: int, p: int = 4, n: int = 9):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(p, n))
        A /= np.linalg.norm(A, axis=0)
        return A, similarity(A)

    def test_full_rank_reconstructs_similarity(self) -> None:
        A, S = self._random_similarity(0, p=4, n=4)
        basis = eigenbasis(S, 4)
        assert np.allclose(basis.approximation(), S, atol=1e-10)

    def test_values_decrease_and_vectors_are_orthonormal(self) -> None:
        _, S = self._random_similarity(1)
        basis = eigenbasis(S, 3)
        assert np.all(np.diff(basis.values) <= 0)
        assert np.allclose(basis.vectors.T @ basis.vectors, np.eye(3), atol=1e-10)

    def test_rank_is_capped_by_numerical_rank(self) -> None:
        _, S = self._random_similarity(2, p=2, n=6)
        basis = eigenbasis(S, 5)
        assert basis.requested_rank == 5
        assert basis.rank == 2

    def test_directions_path_matches_dense_solver(self) -> None:
        A, S = self._random_similarity(3, p=5, n=12)
        dense = eigenbasis(S, 4)
        thin = eigenbasis_from_directions(A, 4)
        assert np.allclose(dense.values, thin.values, atol=1e-10)
        assert np.allclose(dense.vectors, thin.vectors, atol=1e-8)

    def test_sign_convention(self) -> None:
        _, S = self._random_similarity(4)
        basis = eigenbasis(S, 3)
        for m in range(basis.rank):
            column = basis.vectors[:, m]
            first = column[np.flatnonzero(np.abs(column) > 1e-9)[0]]
            assert first > 0

    def test_rejects_asymmetric_matrix(self) -> None:
        with pytest.raises(ValueError, match="symmetric"):
            eigenbasis(np.array([[1.0, 0.5], [0.0, 1.0]]), 1)


def test_default_rank() -> None:
    assert default_rank(2, 100) == 2
    assert default_rank(60, 100) == 20
    assert default_rank(60, 7) == 7
