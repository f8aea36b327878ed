"""Exact linear sum assignment on dense square cost matrices."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np

from .core import InvalidInputError


@dataclass(frozen=True)
class AssignmentResult:
    sigma: tuple[int, ...]
    total_cost: float


def _check(m) -> np.ndarray:
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidInputError(f"cost matrix must be square and nonempty, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("cost matrix has non-finite entries")
    return a


def assignment_cost(m: np.ndarray, sigma) -> float:
    """Row-ordered sum of m[k, sigma[k]]."""
    total = 0.0
    for k, j in enumerate(sigma):
        total += float(m[k, j])
    return total


def _hungarian(a: np.ndarray):
    """Shortest augmenting path with row/column potentials. O(n^3)."""
    n = a.shape[0]
    INF = np.inf
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)     # p[j]: row matched to column j (1-based, 0 = none)
    way = np.zeros(n + 1, dtype=np.int64)
    cost = np.zeros((n + 1, n + 1))
    cost[1:, 1:] = a
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, INF)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used
            free[0] = False
            cur = cost[i0] - u[i0] - v
            better = free & (cur < minv)
            minv[better] = cur[better]
            way[better] = j0
            cand = np.where(free, minv, INF)
            j1 = int(np.argmin(cand))
            delta = cand[j1]
            u[p[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    row_to_col = np.empty(n, dtype=np.int64)
    for j in range(1, n + 1):
        row_to_col[p[j] - 1] = j - 1
    return row_to_col, u[1:], v[1:]


def _lex_smallest(tight: np.ndarray, match: np.ndarray) -> np.ndarray:
    """Lexicographically smallest perfect matching of a bipartite graph.

    ``match`` is any perfect matching inside ``tight``; rows are fixed one by
    one to the smallest column that still admits a completion.
    """
    n = len(match)
    match = match.copy()
    owner = np.empty(n, dtype=np.int64)
    owner[match] = np.arange(n)
    row_fixed = np.zeros(n, dtype=bool)
    col_fixed = np.zeros(n, dtype=bool)

    def augment(start_row: int, target_col: int, banned_col: int) -> list | None:
        # alternating search from start_row to the unmatched target_col
        parent = {}
        stack = [start_row]
        seen_cols = set()
        while stack:
            r = stack.pop()
            for c in np.flatnonzero(tight[r]):
                c = int(c)
                if col_fixed[c] or c == banned_col or c in seen_cols:
                    continue
                seen_cols.add(c)
                parent[c] = r
                if c == target_col:
                    path = []
                    while True:
                        rr = parent[c]
                        path.append((rr, c))
                        if rr == start_row:
                            return path
                        c = int(match[rr])
                nxt = int(owner[c])
                if not row_fixed[nxt]:
                    stack.append(nxt)
        return None

    for i in range(n):
        for j in np.flatnonzero(tight[i] & ~col_fixed):
            j = int(j)
            if match[i] == j:
                break
            r = int(owner[j])
            freed = int(match[i])
            row_fixed[i] = True
            path = augment(r, freed, j)
            if path is None:
                row_fixed[i] = False
                continue
            match[i] = j
            owner[j] = i
            for rr, cc in path:
                match[rr] = cc
                owner[cc] = rr
            break
        row_fixed[i] = True
        col_fixed[match[i]] = True
    return match


def solve_lsap(m) -> AssignmentResult:
    """Minimum-cost permutation; among optimal ones the lexicographically smallest."""
    a = _check(m)
    n = a.shape[0]
    row_to_col, u, v = _hungarian(a)
    reduced = a - u[:, None] - v[None, :]
    tol = 1e-11 * n * max(1.0, float(np.max(np.abs(a))))
    tight = reduced <= tol
    tight[np.arange(n), row_to_col] = True
    sigma = _lex_smallest(tight, row_to_col)
    cost = assignment_cost(a, sigma)
    base = assignment_cost(a, row_to_col)
    if cost > base:
        sigma, cost = row_to_col, base
    return AssignmentResult(tuple(int(s) for s in sigma), cost)


@lru_cache(maxsize=16)
def _perms(k: int) -> np.ndarray:
    return np.array(list(permutations(range(k))), dtype=np.int64).reshape(-1, k)


def brute_force_lsap(m) -> AssignmentResult:
    """Exhaustive search over all K! permutations (K <= 9)."""
    a = _check(m)
    k = a.shape[0]
    if k > 9:
        raise InvalidInputError(f"brute force limited to K <= 9, got {k}")
    perms = _perms(k)
    costs = np.zeros(len(perms))
    for i in range(k):
        costs = costs + a[i, perms[:, i]]
    best = int(np.argmin(costs))
    sigma = tuple(int(s) for s in perms[best])
    return AssignmentResult(sigma, assignment_cost(a, sigma))
