"""Prototype selection by MAP inference on a proximity-weighted L-ensemble."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cholesky

LOGGER = logging.getLogger(__name__)

RIDGE = 1e-10
IMPROVEMENT_TOL = 1e-10
# squared pivots at or below this fraction of their diagonal entry count as singular
SINGULAR_PIVOT = 1e-9
ENUMERATION_BUDGET = 10**7


@dataclass(frozen=True)
class Selection:
    """A size-K index subset, stored sorted."""

    indices: Tuple[int, ...]

    @classmethod
    def of(cls, indices: Iterable[int]) -> "Selection":
        return cls(indices=tuple(sorted(int(i) for i in indices)))

    @property
    def size(self) -> int:
        return len(self.indices)

    def indicator(self, n: int) -> np.ndarray:
        z = np.zeros(n, dtype=float)
        z[list(self.indices)] = 1.0
        return z


@dataclass(frozen=True)
class DppKernel:
    matrix: np.ndarray
    theta: float
    bandwidth: Optional[float] = None


def locality_diag(d: np.ndarray, bandwidth: float) -> np.ndarray:
    """Diagonal entries ``exp(-d_i^2 / h^2)`` of the locality matrix D."""

    if bandwidth <= 0:
        raise ValueError(f"Bandwidth must be positive, got {bandwidth}")
    d = np.asarray(d, dtype=float)
    return np.exp(-(d**2) / bandwidth**2)


def kernel(S: np.ndarray, D: np.ndarray, theta: float, bandwidth: Optional[float] = None) -> DppKernel:
    """``L = theta * S + (1 - theta) * D``; ``D`` may be given as its diagonal."""

    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    S = np.asarray(S, dtype=float)
    D = np.asarray(D, dtype=float)
    if D.ndim == 1:
        D = np.diag(D)
    if S.shape != D.shape:
        raise ValueError(f"Shape mismatch between S {S.shape} and D {D.shape}")
    return DppKernel(matrix=theta * S + (1.0 - theta) * D, theta=theta, bandwidth=bandwidth)


def _as_matrix(L) -> np.ndarray:
    return L.matrix if isinstance(L, DppKernel) else np.asarray(L, dtype=float)


def log_det_subset(L, indices: Sequence[int]) -> float:
    """log det(L_J) through a Cholesky factor; ``-inf`` when L_J is singular."""

    matrix = _as_matrix(L)
    index = list(indices)
    if not index:
        raise ValueError("Index set must be non-empty")
    sub = matrix[np.ix_(index, index)]
    scale = np.diag(sub)
    if not np.all(np.isfinite(sub)) or np.any(scale <= 0.0):
        return -math.inf
    for ridge in (0.0, RIDGE * float(np.max(scale))):
        try:
            factor = cholesky(sub + ridge * np.eye(len(index)), lower=True)
        except LinAlgError:
            continue
        diagonal = np.diag(factor)
        if np.all(diagonal**2 > SINGULAR_PIVOT * scale):
            return float(2.0 * np.sum(np.log(diagonal)))
        return -math.inf
    return -math.inf


def greedy_map(L, k: int) -> Selection:
    """Greedy MAP with incremental Cholesky rows, O(K^2 N).

    ``gains[i]`` holds the Schur complement ``det(L_{Y+i}) / det(L_Y)``, so the
    log marginal gain is ``log(gains[i])``. Ties go to the lowest index.
    """

    matrix = _as_matrix(L)
    n = matrix.shape[0]
    if not 0 < k <= n:
        raise ValueError(f"K must lie in [1, {n}], got {k}")

    factors = np.zeros((k, n))
    scale = np.diag(matrix).astype(float).copy()
    gains = scale.copy()
    selected = []
    available = np.ones(n, dtype=bool)
    while len(selected) < k:
        usable = available & np.isfinite(gains) & (gains > 0.0) & (gains > SINGULAR_PIVOT * scale)
        masked = np.where(usable, gains, -np.inf)
        best = int(np.argmax(masked))
        if not usable[best]:
            LOGGER.warning(
                "Greedy MAP stopped after %d of %d items: every remaining gain is -inf", len(selected), k
            )
            break
        step = len(selected)
        root = math.sqrt(gains[best])
        row = (matrix[best, :] - factors[:step, best] @ factors[:step, :]) / root
        factors[step, :] = row
        gains = gains - row**2
        selected.append(best)
        available[best] = False
    return Selection.of(selected)


def dpp_objective(L, selection: Selection) -> float:
    return log_det_subset(L, selection.indices)


def local_search(L, k: int, start: Selection) -> Selection:
    """Two-step swap: drop the item whose removal costs least, then add the best item.

    A move is kept only if it raises log det by more than ``IMPROVEMENT_TOL``.
    """

    matrix = _as_matrix(L)
    n = matrix.shape[0]
    if start.size != k:
        raise ValueError(f"Start selection has {start.size} items, expected {k}")
    if k == n:
        return start

    current = list(start.indices)
    value = log_det_subset(matrix, current)
    while True:
        # smallest marginal decrease == largest value after removal
        best_removal = None
        best_rest = -math.inf
        for j in current:
            rest = [i for i in current if i != j]
            rest_value = log_det_subset(matrix, rest) if rest else 0.0
            if best_removal is None or rest_value > best_rest:
                best_removal, best_rest = j, rest_value
        rest = [i for i in current if i != best_removal]

        best_add = None
        best_value = -math.inf
        for i in range(n):
            if i in rest:
                continue
            candidate_value = log_det_subset(matrix, rest + [i])
            if best_add is None or candidate_value > best_value:
                best_add, best_value = i, candidate_value

        if best_add is None or not best_value > value + IMPROVEMENT_TOL:
            break
        current = sorted(rest + [best_add])
        value = best_value
    return Selection.of(current)


def brute_force_map(L, k: int) -> Selection:
    """Exhaustive maximiser of det(L_J) over |J| = k; lexicographically first on ties."""

    matrix = _as_matrix(L)
    n = matrix.shape[0]
    if not 0 < k <= n:
        raise ValueError(f"K must lie in [1, {n}], got {k}")
    if math.comb(n, k) > ENUMERATION_BUDGET:
        raise ValueError(f"C({n}, {k}) exceeds the enumeration budget of {ENUMERATION_BUDGET}")

    best = None
    best_value = -math.inf
    for combination in itertools.combinations(range(n), k):
        value = log_det_subset(matrix, combination)
        if best is None or value > best_value:
            best, best_value = combination, value
    return Selection.of(best)
