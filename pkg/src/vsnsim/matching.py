"""Exact maximum-weight perfect matching on square masked weight matrices.

The solver reduces maximization to a min-cost assignment (classic Hungarian
potentials method, O(V^3)) with a large finite penalty on masked-out cells,
then refines the answer to the lexicographically smallest optimal
permutation so results are fully deterministic. A factorial brute-force
solver serves as the independent oracle for small sizes.
"""

from __future__ import annotations

import itertools

import numpy as np


class WeightMatrix:
    """Nonnegative V x V weights plus a boolean mask of allowed assignments.

    Disallowed cells are forced to weight zero.
    """

    def __init__(self, weights, allowed=None):
        w = np.array(weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weights must be square, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if allowed is None:
            mask = np.ones(w.shape, dtype=bool)
        else:
            mask = np.array(allowed, dtype=bool)
            if mask.shape != w.shape:
                raise ValueError("allowed mask shape must match weights")
        self.size = w.shape[0]
        self.allowed = mask
        self.weights = np.where(mask, w, 0.0)

    def objective(self, perm: tuple[int, ...]) -> float:
        """Canonical objective: row-order sum of the selected weights."""
        total = 0.0
        for i, j in enumerate(perm):
            total += float(self.weights[i, j])
        return total


def _min_cost_assignment(cost: np.ndarray) -> list[int]:
    """Hungarian potentials method; returns column assigned to each row."""
    n = cost.shape[0]
    INF = float("inf")
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    match = [0] * (n + 1)  # match[col] = row, 1-based, 0 = free
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = [INF] * (n + 1)
        way = [0] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = INF
            j1 = 0
            row = cost[i0 - 1]
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    perm = [0] * n
    for j in range(1, n + 1):
        perm[match[j] - 1] = j - 1
    return perm


def _solve_masked_max(weights: np.ndarray, allowed: np.ndarray) -> tuple[int, ...] | None:
    """One Hungarian solve; None when no perfect matching respects the mask."""
    n = weights.shape[0]
    max_w = float(weights[allowed].max()) if allowed.any() else 0.0
    big = n * max_w + 1.0
    cost = np.where(allowed, max_w - weights, big)
    perm = _min_cost_assignment(cost)
    if any(not allowed[i, perm[i]] for i in range(n)):
        return None
    return tuple(perm)


def hungarian_max_weight(w: WeightMatrix) -> tuple[tuple[int, ...], float] | None:
    """Max-weight perfect matching under the mask; lexicographically smallest optimum.

    Returns (permutation, objective) with permutation[i] the column assigned
    to row i, or None when the mask admits no perfect matching.
    """
    base = _solve_masked_max(w.weights, w.allowed)
    if base is None:
        return None
    opt = w.objective(base)
    # Lexicographic refinement: fix rows left to right to the smallest column
    # that still attains the optimal objective.
    allowed = w.allowed.copy()
    perm: list[int] = []
    for i in range(w.size):
        chosen = None
        for j in range(w.size):
            if not allowed[i, j]:
                continue
            trial = allowed.copy()
            trial[i, :] = False
            trial[i, j] = True
            sol = _solve_masked_max(w.weights, trial)
            if sol is not None and w.objective(sol) == opt:
                chosen = j
                allowed = trial
                allowed[:, j] = False
                allowed[i, j] = True
                break
        if chosen is None:  # numerically impossible: base solution exists
            return base, opt
        perm.append(chosen)
    return tuple(perm), opt


def brute_force_matching(w: WeightMatrix) -> tuple[tuple[int, ...], float] | None:
    """Exhaustive oracle over all permutations; refuses V > 8."""
    if w.size > 8:
        raise ValueError(f"brute force limited to V <= 8, got {w.size}")
    best: tuple[int, ...] | None = None
    best_obj = -1.0
    for perm in itertools.permutations(range(w.size)):
        if not all(w.allowed[i, j] for i, j in enumerate(perm)):
            continue
        obj = w.objective(perm)
        if best is None or obj > best_obj:
            best = perm
            best_obj = obj
    if best is None:
        return None
    return best, best_obj
