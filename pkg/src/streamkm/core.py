"""Geometry primitives, K-means error and distance accounting.

Points and centroid sets are float64 arrays of shape ``(n, d)`` and ``(K, d)``.
Partitions are integer label arrays. Any routine that evaluates
point-to-centroid distances accepts an optional :class:`DistanceCounter`
and charges it one unit per evaluated pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InvalidInputError(ValueError):
    pass


class DegenerateClusterError(ValueError):
    """A cluster or weighted point set carries no mass."""


@dataclass
class DistanceCounter:
    count: int = 0

    def add(self, n: int) -> None:
        self.count += int(n)

    def reset(self) -> None:
        self.count = 0


def _charge(counter: DistanceCounter | None, n: int) -> None:
    if counter is not None:
        counter.add(n)


def as_points(x, name: str = "points") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise InvalidInputError(f"{name} must be a 2-D array of shape (n, d)")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr


def sq_dist(a, b, counter: DistanceCounter | None = None) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise InvalidInputError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    _charge(counter, 1)
    diff = a - b
    return float(diff @ diff)


def nearest(points: np.ndarray, centroids: np.ndarray,
            counter: DistanceCounter | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Labels of the nearest centroid and the squared distance to it.

    Candidates are ranked through the expanded form; the returned distances
    are recomputed directly from the coordinate differences.
    """
    if len(centroids) == 0:
        raise InvalidInputError("empty centroid set")
    if points.shape[1] != centroids.shape[1]:
        raise InvalidInputError(
            f"dimension mismatch: points d={points.shape[1]}, centroids d={centroids.shape[1]}")
    _charge(counter, len(points) * len(centroids))
    if len(centroids) == 1:
        labels = np.zeros(len(points), dtype=np.int64)
    else:
        d2 = (np.einsum("ij,ij->i", points, points)[:, None]
              - 2.0 * points @ centroids.T
              + np.einsum("ij,ij->i", centroids, centroids)[None, :])
        labels = np.argmin(d2, axis=1)
    diff = points - centroids[labels]
    return labels, np.einsum("ij,ij->i", diff, diff)


def assign(points, centroids, counter: DistanceCounter | None = None) -> np.ndarray:
    """Index of the nearest centroid for every point; ties go to the lowest index."""
    points = as_points(points)
    centroids = as_points(centroids, "centroids") if len(np.asarray(centroids)) else np.empty((0, points.shape[1]))
    labels, _ = nearest(points, centroids, counter)
    return labels


def weighted_error(points: np.ndarray, weights: np.ndarray, centroids: np.ndarray,
                   counter: DistanceCounter | None = None) -> float:
    """Sum of w * ||x - c_x||^2 divided by the total weight."""
    _, d2 = nearest(points, centroids, counter)
    return float(weights @ d2) / float(weights.sum())


def kmeans_error(points, centroids, counter: DistanceCounter | None = None) -> float:
    points = as_points(points)
    if len(points) == 0:
        raise InvalidInputError("empty point set")
    _, d2 = nearest(points, as_points(centroids, "centroids"), counter)
    return float(d2.sum()) / len(points)


def weighted_mean(points, weights) -> np.ndarray:
    points = as_points(points)
    w = np.asarray(weights, dtype=np.float64)
    total = w.sum()
    if not total > 0:
        raise DegenerateClusterError("total weight is zero")
    return (w @ points) / total


def scatter_identity_check(points, c, weights=None) -> tuple[float, float]:
    """Both sides of sum w||x-c||^2 = sum w||x-m||^2 + W||m-c||^2, m the weighted mean."""
    points = as_points(points)
    c = np.asarray(c, dtype=np.float64).ravel()
    if c.shape[0] != points.shape[1]:
        raise InvalidInputError("dimension mismatch")
    w = np.ones(len(points)) if weights is None else np.asarray(weights, dtype=np.float64)
    m = weighted_mean(points, w)
    lhs = float(w @ np.sum((points - c) ** 2, axis=1))
    rhs = float(w @ np.sum((points - m) ** 2, axis=1)) + float(w.sum()) * float(np.sum((m - c) ** 2))
    return lhs, rhs
