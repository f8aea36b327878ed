"""Lloyd iterations (plain, weighted, over batch windows) and KM++ seeding."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import (DegenerateClusterError, DistanceCounter, InvalidInputError,
                   as_points, nearest)
from .rng import Xorshift64Star


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidInputError("max_iterations must be >= 1")


@dataclass
class WeightedPointSet:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.points = as_points(self.points)
        self.weights = np.asarray(self.weights, dtype=np.float64).ravel()
        if len(self.weights) != len(self.points):
            raise InvalidInputError("points and weights differ in length")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise InvalidInputError("weights must be finite and nonnegative")
        keep = self.weights > 0
        self.points = self.points[keep]
        self.weights = self.weights[keep]

    def __len__(self):
        return len(self.points)


class LloydResult(NamedTuple):
    centroids: np.ndarray
    labels: np.ndarray
    iterations: int
    sq_dists: np.ndarray | None = None


def _update(points, weights, labels, d2, centroids):
    K, d = centroids.shape
    mass = np.bincount(labels, weights=weights, minlength=K)
    sums = np.empty((K, d))
    for j in range(d):
        sums[:, j] = np.bincount(labels, weights=weights * points[:, j], minlength=K)
    new = centroids.copy()
    full = mass > 0
    new[full] = sums[full] / mass[full, None]
    empty = np.flatnonzero(~full)
    if len(empty):
        # re-seed each empty cluster at the point farthest from its own centroid
        far = d2.copy()
        for k in empty:
            i = int(np.argmax(far))
            new[k] = points[i]
            far[i] = -1.0
    return new


def _run(points, weights, C0, cfg: SolverConfig, counter, trace, known=None) -> LloydResult:
    C = as_points(C0, "initial centroids").copy()
    if len(points) < len(C):
        raise InvalidInputError(f"need at least K={len(C)} points, got {len(points)}")
    if points.shape[1] != C.shape[1]:
        raise InvalidInputError("dimension mismatch between points and centroids")
    total = float(weights.sum())
    if known is None:
        labels, d2 = nearest(points, C, counter)
    else:
        # trailing rows already assigned to C0; only the leading rows need a search
        known_labels, known_d2 = known
        head = len(points) - len(known_labels)
        lab0, d20 = nearest(points[:head], C, counter)
        labels = np.concatenate([lab0, np.asarray(known_labels, dtype=lab0.dtype)])
        d2 = np.concatenate([d20, np.asarray(known_d2, dtype=np.float64)])
    if trace is not None:
        trace.append(float(weights @ d2) / total)
    iterations = 0
    while iterations < cfg.max_iterations:
        C = _update(points, weights, labels, d2, C)
        new_labels, d2 = nearest(points, C, counter)
        iterations += 1
        if trace is not None:
            trace.append(float(weights @ d2) / total)
        changed = not np.array_equal(new_labels, labels)
        labels = new_labels
        if not changed:
            break
    return LloydResult(C, labels, iterations, d2)


def lloyd(points, C0, cfg: SolverConfig = SolverConfig(),
          counter: DistanceCounter | None = None, trace: list | None = None) -> LloydResult:
    """Alternate center-of-mass updates and nearest assignment to a fixed point.

    Stops when an assignment step leaves the partition unchanged or after
    ``cfg.max_iterations`` update+assign cycles. If ``trace`` is a list, the
    error after the initial assignment and after every cycle is appended.
    """
    points = as_points(points)
    return _run(points, np.ones(len(points)), C0, cfg, counter, trace)


def weighted_lloyd(wps: WeightedPointSet, C0, cfg: SolverConfig = SolverConfig(),
                   counter: DistanceCounter | None = None, trace: list | None = None) -> LloydResult:
    """Lloyd's algorithm on the objective sum w_i ||x_i - c_{x_i}||^2 / sum w_i."""
    if len(wps) == 0:
        raise DegenerateClusterError("weighted point set has no positive weight")
    return _run(wps.points, wps.weights, C0, cfg, counter, trace)


def batch_window_lloyd(window, C0, cfg: SolverConfig = SolverConfig(),
                       counter: DistanceCounter | None = None, trace: list | None = None,
                       known=None) -> LloydResult:
    """Weighted Lloyd where each point of the batch of antiquity t weighs rho**t.

    ``known`` optionally carries ``(labels, sq_dists)`` of the batches t >= 1
    under ``C0``; the initial assignment then only searches the newest batch.
    The caller vouches that those labels are the nearest-centroid labels.
    """
    if len(window) == 0:
        raise InvalidInputError("empty batch window")
    points, weights = window.stacked()
    return _run(points, weights, C0, cfg, counter, trace, known)


def _pick(cum: np.ndarray, total: float, rng: Xorshift64Star) -> int:
    i = int(np.searchsorted(cum, rng.random() * total, side="right"))
    if i >= len(cum):
        # u rounded up to total; fall back to the last index with positive mass
        i = int(np.searchsorted(cum, cum[-1], side="left"))
    return i


def kmpp_seed(points, K: int, rng: Xorshift64Star, counter: DistanceCounter | None = None,
              weights=None, return_labels: bool = False):
    """KM++ seeding; with ``weights`` every probability is also scaled by the point weight.

    Each center after the first is drawn with probability proportional to the
    (weighted) squared distance to the nearest center already chosen. If every
    remaining point has zero mass, the next center is drawn among the points
    not yet chosen. With ``return_labels`` the nearest-center labels that fall
    out of the D^2 bookkeeping are returned too.
    """
    points = as_points(points)
    n = len(points)
    if K < 1 or K > n:
        raise InvalidInputError(f"cannot seed K={K} centers from {n} points")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
    chosen = np.zeros(n, dtype=bool)
    if weights is None:
        first = rng.integers(n)
    else:
        cw = np.cumsum(w)
        first = _pick(cw, float(cw[-1]), rng)
    idx = [first]
    chosen[first] = True
    diff = points - points[first]
    d2 = np.einsum("ij,ij->i", diff, diff)
    if counter is not None:
        counter.add(n)
    labels = np.zeros(n, dtype=np.int64)
    for k in range(1, K):
        mass = w * d2
        cum = np.cumsum(mass)
        total = float(cum[-1])
        if total > 0:
            i = _pick(cum, total, rng)
        else:
            free = np.flatnonzero(~chosen)
            if weights is None:
                i = int(free[rng.integers(len(free))])
            else:
                cf = np.cumsum(w[free])
                i = int(free[_pick(cf, float(cf[-1]), rng)])
        idx.append(i)
        chosen[i] = True
        diff = points - points[i]
        nd = np.einsum("ij,ij->i", diff, diff)
        if counter is not None:
            counter.add(n)
        closer = nd < d2
        labels[closer] = k
        d2 = np.where(closer, nd, d2)
    centers = points[idx].copy()
    if return_labels:
        return centers, labels
    return centers
