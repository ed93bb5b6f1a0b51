"""Prototype selection through the cardinality-constrained binary quadratic program

    min_z  w * z^T S z + (1 - w) * d^T z   s.t.  z binary, sum(z) = K

solved by eigen-approximate min-max iterations, screening and an exact reduced solve,
plus greedy / local-search heuristics and an enumeration oracle.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .dpp_select import Selection
from .geometry import EigenBasis

LOGGER = logging.getLogger(__name__)

IMPROVEMENT_TOL = 1e-10
ENUMERATION_BUDGET = 10**7
REDUCED_ENUMERATION_BUDGET = 10**6
ENUMERATION_CHUNK = 200_000

DEFAULT_ITERATIONS = 50
DEFAULT_WINDOW = 10
DEFAULT_STEP = 0.1

BEST_RESPONSE = "best-response"
DUAL_ASCENT = "dual-ascent"


class ScreeningError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadProblem:
    S: np.ndarray
    d: np.ndarray
    weight: float
    k: int

    def __post_init__(self) -> None:
        n = self.d.shape[0]
        if self.S.shape != (n, n):
            raise ValueError(f"S has shape {self.S.shape}, expected ({n}, {n})")
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"weight must lie in [0, 1], got {self.weight}")
        if not 0 < self.k <= n:
            raise ValueError(f"K must lie in [1, {n}], got {self.k}")

    @property
    def size(self) -> int:
        return int(self.d.shape[0])


@dataclass(frozen=True)
class IterateTrace:
    """Iterates z_1..z_T with their dual vectors, exact primal values and dual values."""

    selections: Tuple[Selection, ...]
    gammas: np.ndarray
    primal: Tuple[float, ...]
    dual: Tuple[float, ...]

    @property
    def length(self) -> int:
        return len(self.selections)

    def best_index(self) -> int:
        """Index of the iterate with the smallest exact objective (earliest on ties)."""

        return int(np.argmin(np.asarray(self.primal)))


@dataclass(frozen=True)
class ScreeningSet:
    indices: Tuple[int, ...]
    window: int


@dataclass(frozen=True)
class QuadResult:
    selection: Selection
    trace: IterateTrace
    screening: ScreeningSet
    objective: float


def _indices(z, n: int) -> List[int]:
    """Selections and index sequences pass through; a length-n ndarray is an indicator."""

    if isinstance(z, Selection):
        return list(z.indices)
    if isinstance(z, np.ndarray) and z.ndim == 1 and z.shape[0] == n:
        return [int(i) for i in np.flatnonzero(z > 0.5)]
    return sorted(int(i) for i in z)


def objective(z, problem: QuadProblem) -> float:
    """Exact objective with the full similarity matrix."""

    index = _indices(z, problem.size)
    if len(index) != problem.k:
        raise ValueError(f"Selection has {len(index)} items, expected {problem.k}")
    return _subset_value(problem.S, problem.d, problem.weight, index)


def _subset_value(S: np.ndarray, d: np.ndarray, weight: float, index: Sequence[int]) -> float:
    if not index:
        return 0.0
    quadratic = float(S[np.ix_(index, index)].sum())
    linear = float(d[list(index)].sum())
    return weight * quadratic + (1.0 - weight) * linear


def approximate_objective(z, problem: QuadProblem, basis: EigenBasis) -> float:
    """Objective with S replaced by its rank-M approximation S_M."""

    indicator = np.zeros(problem.size)
    indicator[_indices(z, problem.size)] = 1.0
    projection = basis.vectors.T @ indicator
    quadratic = float(np.sum(basis.values * projection**2))
    return problem.weight * quadratic + (1.0 - problem.weight) * float(problem.d @ indicator)


def k_nearest(d: np.ndarray, k: int) -> Selection:
    """The k smallest entries of ``d``; lower index first on ties."""

    order = np.argsort(np.asarray(d, dtype=float), kind="stable")
    return Selection.of(order[:k])


def _check_weight(weight: float) -> None:
    if not 0.0 < weight <= 1.0:
        raise ValueError(f"The min-max form needs weight in (0, 1], got {weight}")


def z_star(gamma: np.ndarray, basis: EigenBasis, d: np.ndarray, weight: float, k: int) -> Selection:
    """Inner minimiser: the k smallest entries of ``(1 - w) d - 2 V gamma``."""

    _check_weight(weight)
    scores = (1.0 - weight) * np.asarray(d, dtype=float) - 2.0 * (basis.vectors @ np.asarray(gamma, dtype=float))
    return k_nearest(scores, k)


def gamma_star(z, basis: EigenBasis, weight: float) -> np.ndarray:
    """Maximiser over gamma for fixed z: ``gamma_m = -w sigma_m v_m^T z``."""

    _check_weight(weight)
    n = basis.vectors.shape[0]
    indicator = np.zeros(n)
    indicator[_indices(z, n)] = 1.0
    return -weight * basis.values * (basis.vectors.T @ indicator)


def lagrangian(z, gamma: np.ndarray, basis: EigenBasis, d: np.ndarray, weight: float) -> float:
    _check_weight(weight)
    n = basis.vectors.shape[0]
    indicator = np.zeros(n)
    indicator[_indices(z, n)] = 1.0
    gamma = np.asarray(gamma, dtype=float)
    scores = (1.0 - weight) * np.asarray(d, dtype=float) - 2.0 * (basis.vectors @ gamma)
    return float(scores @ indicator - np.sum(gamma**2 / (weight * basis.values)))


def dual_value(gamma: np.ndarray, basis: EigenBasis, d: np.ndarray, weight: float, k: int) -> float:
    """Dual function: the Lagrangian minimised over feasible z (a lower bound)."""

    if basis.rank < 1:
        raise ValueError("Dual value needs an eigenbasis of rank >= 1")
    return lagrangian(z_star(gamma, basis, d, weight, k), gamma, basis, d, weight)


def _trace(problem: QuadProblem, basis: EigenBasis, gammas: List[np.ndarray], selections: List[Selection]) -> IterateTrace:
    return IterateTrace(
        selections=tuple(selections),
        gammas=np.vstack(gammas) if gammas else np.zeros((0, basis.rank)),
        primal=tuple(objective(z, problem) for z in selections),
        dual=tuple(dual_value(g, basis, problem.d, problem.weight, problem.k) for g in gammas),
    )


def best_response(problem: QuadProblem, basis: EigenBasis, iterations: int = DEFAULT_ITERATIONS) -> IterateTrace:
    """Alternate the closed-form maximiser in gamma and minimiser in z, from z_0 = 0."""

    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    _check_weight(problem.weight)

    current = Selection(indices=())
    gammas: List[np.ndarray] = []
    selections: List[Selection] = []
    for _ in range(iterations):
        gamma = gamma_star(current, basis, problem.weight)
        current = z_star(gamma, basis, problem.d, problem.weight, problem.k)
        gammas.append(gamma)
        selections.append(current)
    return _trace(problem, basis, gammas, selections)


def dual_ascent(
    problem: QuadProblem,
    basis: EigenBasis,
    iterations: int = DEFAULT_ITERATIONS,
    step: float = DEFAULT_STEP,
) -> IterateTrace:
    """Gradient ascent on the dual with diminishing step ``2 * step / sqrt(t + 1)``."""

    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if step < 0:
        raise ValueError("step must be non-negative")
    _check_weight(problem.weight)

    n = problem.size
    gamma = np.zeros(basis.rank)
    indicator = np.zeros(n)
    gammas: List[np.ndarray] = []
    selections: List[Selection] = []
    for t in range(iterations):
        gradient = gamma / (problem.weight * basis.values) + basis.vectors.T @ indicator
        gamma = gamma - (2.0 * step / math.sqrt(t + 1)) * gradient
        z = z_star(gamma, basis, problem.d, problem.weight, problem.k)
        gammas.append(gamma.copy())
        selections.append(z)
        indicator = z.indicator(n)
    return _trace(problem, basis, gammas, selections)


def screen(trace: IterateTrace, window: int) -> ScreeningSet:
    """Union of the supports of the last ``window + 1`` iterates."""

    if not 0 <= window < trace.length:
        raise ValueError(f"window must lie in [0, {trace.length - 1}], got {window}")
    union = set()
    for selection in trace.selections[trace.length - window - 1 :]:
        union.update(selection.indices)
    k = trace.selections[-1].size
    if len(union) < k:
        raise ScreeningError("screening set smaller than K")
    return ScreeningSet(indices=tuple(sorted(union)), window=window)


def _enumerate_best(problem: QuadProblem, candidates: Sequence[int]) -> Tuple[Tuple[int, ...], float]:
    """Vectorised enumeration in lexicographic order; first minimum wins."""

    S, d, w, k = problem.S, problem.d, problem.weight, problem.k
    combinations = itertools.combinations(candidates, k)
    best: Optional[Tuple[int, ...]] = None
    best_value = math.inf
    while True:
        chunk = list(itertools.islice(combinations, ENUMERATION_CHUNK))
        if not chunk:
            break
        index = np.asarray(chunk, dtype=int)
        quadratic = np.zeros(index.shape[0])
        for a in range(k):
            for b in range(k):
                quadratic += S[index[:, a], index[:, b]]
        values = w * quadratic + (1.0 - w) * d[index].sum(axis=1)
        position = int(np.argmin(values))
        if values[position] < best_value:
            best, best_value = tuple(int(i) for i in index[position]), float(values[position])
    assert best is not None
    return best, best_value


def _branch_and_bound(
    problem: QuadProblem,
    candidates: Sequence[int],
    incumbent: Optional[Sequence[int]] = None,
) -> Tuple[int, ...]:
    """Depth-first search over sorted candidates with a valid lower bound.

    For a partial set P and r items still to add from R, the bound is the larger of
      * the linearised value: value(P) + sum of r smallest c_j + w r (r - 1) s_min,
        with c_j = (1 - w) d_j + w (S_jj + 2 sum_{i in P} S_ij) and s_min the smallest
        off-diagonal entry over the candidates, and
      * the PSD value: (1 - w) (d(P) + sum of r smallest d_j), since z^T S z >= 0.
    The last two levels are evaluated as a dense pair matrix.
    """

    S, d, w, k = problem.S, problem.d, problem.weight, problem.k
    cand = np.asarray(candidates, dtype=int)
    m = cand.shape[0]
    S_c = S[np.ix_(cand, cand)]
    d_c = d[cand]
    base_c = (1.0 - w) * d_c + w * np.diag(S_c)
    off = S_c[~np.eye(m, dtype=bool)]
    s_min = float(off.min()) if off.size else 0.0

    best: List[Optional[Tuple[int, ...]]] = [None]
    best_value = [math.inf]
    if incumbent is not None:
        position = {int(c): p for p, c in enumerate(cand)}
        best[0] = tuple(sorted(position[int(i)] for i in incumbent))
        best_value[0] = _subset_value(S_c, d_c, w, list(best[0]))

    def consider(value: float, chosen: Tuple[int, ...]) -> None:
        if value < best_value[0] or (value == best_value[0] and (best[0] is None or chosen < best[0])):
            best[0], best_value[0] = chosen, value

    def search(chosen: Tuple[int, ...], start: int, value: float, cross: np.ndarray) -> None:
        remaining = k - len(chosen)
        if remaining == 0:
            consider(value, chosen)
            return
        if m - start < remaining:
            return
        costs = base_c[start:] + 2.0 * w * cross[start:]
        if remaining == 1:
            position = int(np.argmin(costs))
            consider(value + float(costs[position]), chosen + (start + position,))
            return
        linear = value + float(np.sum(np.partition(costs, remaining - 1)[:remaining]))
        linear += w * remaining * (remaining - 1) * s_min
        distances = d_c[start:]
        psd = (1.0 - w) * (
            float(d_c[list(chosen)].sum()) + float(np.sum(np.partition(distances, remaining - 1)[:remaining]))
        )
        if max(linear, psd) > best_value[0]:
            return
        if remaining == 2:
            pair = costs[:, None] + costs[None, :] + 2.0 * w * S_c[start:, start:]
            upper = np.triu(np.ones(pair.shape, dtype=bool), k=1)
            pair = np.where(upper, pair, np.inf)
            flat = int(np.argmin(pair))
            a, b = divmod(flat, pair.shape[1])
            consider(value + float(pair[a, b]), chosen + (start + a, start + b))
            return
        for j in range(start, m - remaining + 1):
            step = float(costs[j - start])
            search(chosen + (j,), j + 1, value + step, cross + S_c[j])

    search((), 0, 0.0, np.zeros(m))
    assert best[0] is not None
    return tuple(int(cand[p]) for p in best[0])


def solve_reduced(
    problem: QuadProblem,
    screening,
    incumbent: Optional[Selection] = None,
) -> Selection:
    """Exact minimiser with every z_i outside the screening set fixed to zero."""

    indices = screening.indices if isinstance(screening, ScreeningSet) else tuple(screening)
    candidates = sorted(set(int(i) for i in indices))
    if len(candidates) < problem.k:
        raise ScreeningError(f"Screening set of size {len(candidates)} is infeasible for K={problem.k}")
    if len(candidates) == problem.k:
        return Selection.of(candidates)

    if math.comb(len(candidates), problem.k) <= REDUCED_ENUMERATION_BUDGET:
        best, _ = _enumerate_best(problem, candidates)
    else:
        seed = None
        if incumbent is not None and set(incumbent.indices).issubset(candidates):
            seed = incumbent.indices
        best = _branch_and_bound(problem, candidates, seed)
    return Selection.of(best)


def brute_force(problem: QuadProblem) -> Selection:
    """Global minimiser by full enumeration (lexicographically first on ties)."""

    n, k = problem.size, problem.k
    if math.comb(n, k) > ENUMERATION_BUDGET:
        raise ValueError(f"C({n}, {k}) exceeds the enumeration budget of {ENUMERATION_BUDGET}")
    best, _ = _enumerate_best(problem, range(n))
    return Selection.of(best)


def quad_greedy(problem: QuadProblem) -> Selection:
    """Add, one at a time, the item that keeps the partial objective smallest."""

    S, d, w = problem.S, problem.d, problem.weight
    n = problem.size
    cross = np.zeros(n)
    available = np.ones(n, dtype=bool)
    chosen: List[int] = []
    for _ in range(problem.k):
        increments = (1.0 - w) * d + w * (np.diag(S) + 2.0 * cross)
        increments = np.where(available, increments, np.inf)
        best = int(np.argmin(increments))
        chosen.append(best)
        available[best] = False
        cross = cross + S[best]
    return Selection.of(chosen)


def quad_local_search(problem: QuadProblem, start: Selection) -> Selection:
    """Swap moves: drop the item whose removal lowers the objective most, add the best item back.

    A move is accepted only on a strict decrease larger than ``IMPROVEMENT_TOL``.
    """

    if start.size != problem.k:
        raise ValueError(f"Start selection has {start.size} items, expected {problem.k}")
    n = problem.size
    if problem.k == n:
        return start

    S, d, w = problem.S, problem.d, problem.weight
    current = list(start.indices)
    value = objective(current, problem)
    while True:
        removal = None
        removal_value = math.inf
        for j in current:
            rest_value = _subset_value(S, d, w, [i for i in current if i != j])
            if removal is None or rest_value < removal_value:
                removal, removal_value = j, rest_value
        rest = [i for i in current if i != removal]

        cross = S[:, rest].sum(axis=1) if rest else np.zeros(n)
        increments = (1.0 - w) * d + w * (np.diag(S) + 2.0 * cross)
        increments[rest] = np.inf
        addition = int(np.argmin(increments))
        candidate = sorted(rest + [addition])
        candidate_value = objective(candidate, problem)
        if not candidate_value < value - IMPROVEMENT_TOL:
            break
        current, value = candidate, candidate_value
    return Selection.of(current)


def solve_quad(
    problem: QuadProblem,
    basis: EigenBasis,
    solver: str = BEST_RESPONSE,
    iterations: int = DEFAULT_ITERATIONS,
    window: int = DEFAULT_WINDOW,
    step: float = DEFAULT_STEP,
) -> QuadResult:
    """Iterate, screen and solve the reduced program exactly.

    The best feasible iterate is always part of the screening set, and the result
    is never worse than it.
    """

    if solver == BEST_RESPONSE:
        trace = best_response(problem, basis, iterations)
    elif solver == DUAL_ASCENT:
        trace = dual_ascent(problem, basis, iterations, step)
    else:
        raise ValueError(f"Unknown iterative solver '{solver}'")

    window = min(window, trace.length - 1)
    screened = screen(trace, window)
    best_iterate = trace.selections[trace.best_index()]
    support = tuple(sorted(set(screened.indices) | set(best_iterate.indices)))
    screening = ScreeningSet(indices=support, window=window)

    selection = solve_reduced(problem, screening, incumbent=best_iterate)
    value = objective(selection, problem)
    incumbent_value = trace.primal[trace.best_index()]
    if incumbent_value < value:
        selection, value = best_iterate, incumbent_value
    LOGGER.debug(
        "%s: |screening|=%d, best iterate %.6g, reduced solve %.6g",
        solver,
        len(support),
        incumbent_value,
        value,
    )
    return QuadResult(selection=selection, trace=trace, screening=screening, objective=value)


def write_trace(trace: IterateTrace, path: Path) -> None:
    """Per-iteration CSV: t, primal objective, dual value, support indices."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", "primal", "dual", "support"])
        for t, (selection, primal, dual) in enumerate(zip(trace.selections, trace.primal, trace.dual), start=1):
            writer.writerow([t, repr(primal), repr(dual), " ".join(str(i) for i in selection.indices)])
