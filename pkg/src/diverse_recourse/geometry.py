"""Per-input geometry shared by the selectors: directions, similarity, distances, eigenbasis."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

LOGGER = logging.getLogger(__name__)

COINCIDENCE_TOL = 1e-12
RANK_TOL = 1e-10
SIGN_TOL = 1e-9
SYMMETRY_TOL = 1e-10
DEFAULT_MAX_RANK = 20

EUCLIDEAN = "euclidean"
GRAPH = "graph-shortest-path"


@dataclass(frozen=True)
class DirectionMatrix:
    """Unit columns ``A[:, i] = (x_i - x0) / ||x_i - x0||`` for the kept samples.

    ``kept`` maps columns back to positions in the sample list handed to
    :func:`directions`; ``excluded`` lists samples that coincide with ``x0``.
    """

    A: np.ndarray
    x0: np.ndarray
    kept: Tuple[int, ...]
    excluded: Tuple[int, ...]

    @property
    def size(self) -> int:
        return int(self.A.shape[1])


@dataclass(frozen=True)
class DistanceVector:
    values: np.ndarray
    kind: str
    kept: Tuple[int, ...]
    dropped: Tuple[int, ...] = ()


@dataclass(frozen=True)
class EigenBasis:
    """Top-M eigenpairs, eigenvalues decreasing, eigenvectors as columns of ``vectors``."""

    values: np.ndarray
    vectors: np.ndarray
    requested_rank: int

    @property
    def rank(self) -> int:
        return int(self.values.shape[0])

    def approximation(self) -> np.ndarray:
        """S_M = sum_m sigma_m v_m v_m^T."""

        return (self.vectors * self.values) @ self.vectors.T


def directions(x0: np.ndarray, samples: np.ndarray) -> DirectionMatrix:
    x0 = np.asarray(x0, dtype=float)
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    diff = samples - x0
    norms = np.linalg.norm(diff, axis=1)

    coincident = norms <= COINCIDENCE_TOL
    excluded = tuple(int(i) for i in np.flatnonzero(coincident))
    if excluded:
        LOGGER.info("Excluded %d sample(s) coinciding with the input: %s", len(excluded), excluded)
    kept = tuple(int(i) for i in np.flatnonzero(~coincident))

    A = (diff[~coincident] / norms[~coincident, None]).T
    return DirectionMatrix(A=A, x0=x0, kept=kept, excluded=excluded)


def similarity(A: np.ndarray) -> np.ndarray:
    """Cosine similarity ``S = A^T A`` of unit directions (symmetrised)."""

    S = A.T @ A
    return 0.5 * (S + S.T)


def euclidean_distances(x0: np.ndarray, samples: np.ndarray) -> np.ndarray:
    return cdist(np.atleast_2d(x0), np.atleast_2d(samples))[0]


def distance_vector(
    x0: np.ndarray,
    samples: Optional[np.ndarray] = None,
    kind: str = EUCLIDEAN,
    graph_distances: Optional[Sequence[float]] = None,
) -> DistanceVector:
    """Distances from ``x0`` to each candidate.

    For ``kind=GRAPH`` the shortest-path lengths are passed in ``graph_distances``
    (one per candidate); unreachable candidates are dropped and reported.
    """

    if kind == EUCLIDEAN:
        if samples is None:
            raise ValueError("Euclidean distances need encoded samples")
        values = euclidean_distances(x0, samples)
        return DistanceVector(values=values, kind=kind, kept=tuple(range(values.shape[0])))

    if kind != GRAPH:
        raise ValueError(f"Unknown distance kind '{kind}'")
    if graph_distances is None:
        raise ValueError("Graph distances need shortest-path results")

    raw = np.asarray(graph_distances, dtype=float)
    reachable = np.isfinite(raw)
    dropped = tuple(int(i) for i in np.flatnonzero(~reachable))
    if not reachable.any():
        raise ValueError("no reachable favorable nodes")
    if dropped:
        LOGGER.info("Dropped %d unreachable candidate(s)", len(dropped))
    return DistanceVector(
        values=raw[reachable],
        kind=kind,
        kept=tuple(int(i) for i in np.flatnonzero(reachable)),
        dropped=dropped,
    )


def _finish_basis(values: np.ndarray, vectors: np.ndarray, requested: int) -> EigenBasis:
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]

    numerical_rank = int(np.sum(values > RANK_TOL))
    rank = min(requested, numerical_rank)
    if rank < requested:
        LOGGER.info("Reduced eigen rank from %d to numerical rank %d", requested, rank)
    values = values[:rank].copy()
    vectors = vectors[:, :rank].copy()

    for m in range(rank):
        significant = np.flatnonzero(np.abs(vectors[:, m]) > SIGN_TOL)
        if significant.size and vectors[significant[0], m] < 0:
            vectors[:, m] = -vectors[:, m]
    return EigenBasis(values=values, vectors=vectors, requested_rank=requested)


def eigenbasis(S: np.ndarray, rank: int) -> EigenBasis:
    """Top-``rank`` eigenpairs of the symmetric matrix ``S`` via a dense solver."""

    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    if not 1 <= rank <= n:
        raise ValueError(f"Rank must lie in [1, {n}], got {rank}")
    if not np.allclose(S, S.T, atol=SYMMETRY_TOL, rtol=0.0):
        raise ValueError("Similarity matrix is not symmetric")
    values, vectors = np.linalg.eigh(S)
    return _finish_basis(values, vectors, rank)


def eigenbasis_from_directions(A: np.ndarray, rank: int) -> EigenBasis:
    """Same result as ``eigenbasis(A.T @ A, rank)`` from a thin SVD of ``A``.

    The squared singular values are the eigenvalues of S and the right singular
    vectors its eigenvectors; the p x N factor is much cheaper than the N x N one.
    """

    A = np.asarray(A, dtype=float)
    n = A.shape[1]
    if not 1 <= rank <= n:
        raise ValueError(f"Rank must lie in [1, {n}], got {rank}")
    _, singular, vt = np.linalg.svd(A, full_matrices=False)
    return _finish_basis(singular**2, vt.T, rank)


def default_rank(dimension: int, n_candidates: int) -> int:
    return max(1, min(dimension, DEFAULT_MAX_RANK, n_candidates))
