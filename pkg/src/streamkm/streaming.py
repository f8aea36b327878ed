"""Exponentially forgetting batch window, PSKM and FSKM steps, initializers.

The window keeps batches newest first, so list position equals antiquity t
and the batch at position t weighs ``rho**t``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .assignment import AssignmentResult, solve_lsap
from .core import (DegenerateClusterError, DistanceCounter, InvalidInputError,
                   as_points, nearest)
from .lloyd import (SolverConfig, WeightedPointSet, batch_window_lloyd, kmpp_seed,
                    lloyd, weighted_lloyd)
from .rng import Xorshift64Star

NEGLIGIBLE_WEIGHT = 1e-3


class InitializerKind(str, enum.Enum):
    UPC = "UPC"
    ICB = "ICB"
    WKI = "WKI"
    HI = "HI"


def default_t_max(rho: float) -> int | None:
    """Smallest T with rho**T < 1e-3; None (unbounded) when rho == 1."""
    if not 0 < rho <= 1:
        raise InvalidInputError(f"rho must lie in (0, 1], got {rho}")
    if rho == 1:
        return None
    t = max(1, math.floor(math.log(NEGLIGIBLE_WEIGHT) / math.log(rho)) - 1)
    while rho ** t >= NEGLIGIBLE_WEIGHT:
        t += 1
    return t


def rho_from(epsilon: float, m: int, tau: int) -> float:
    """Forgetting factor solving epsilon * rho**(tau/m) = 0.01."""
    if not epsilon > 0.01:
        raise InvalidInputError(f"epsilon must exceed 0.01, got {epsilon}")
    if m <= 0 or tau <= 0:
        raise InvalidInputError("m and tau must be positive")
    return (0.01 / epsilon) ** (m / tau)


class BatchWindow:
    """The retained suffix of the stream, at most ``t_max`` batches."""

    def __init__(self, rho: float, t_max: int | None = None, batches=()):
        if not 0 < rho <= 1:
            raise InvalidInputError(f"rho must lie in (0, 1], got {rho}")
        if t_max is not None and t_max < 1:
            raise InvalidInputError("t_max must be >= 1")
        self.rho = float(rho)
        self.t_max = t_max
        self.batches: list[np.ndarray] = []
        self._mass = 0.0
        # batches given oldest-to-newest are pushed in arrival order
        for b in reversed(list(batches)):
            self.push(b)

    def __len__(self):
        return len(self.batches)

    @property
    def d(self) -> int:
        return self.batches[0].shape[1]

    @property
    def mass(self) -> float:
        return self._mass

    def recompute_mass(self) -> float:
        return float(sum(self.rho ** t * len(b) for t, b in enumerate(self.batches)))

    def push(self, points) -> np.ndarray | None:
        """Append a batch at antiquity 0; return the evicted oldest batch, if any."""
        points = as_points(points, "batch")
        if len(points) == 0:
            raise InvalidInputError("empty batch")
        if self.batches and points.shape[1] != self.d:
            raise InvalidInputError("batch dimension differs from the window")
        evicted = None
        if self.t_max is not None and len(self.batches) >= self.t_max:
            evicted = self.batches.pop()
            self._mass -= self.rho ** len(self.batches) * len(evicted)
        self.batches.insert(0, points)
        self._mass = self.rho * self._mass + len(points)
        return evicted

    def weights(self) -> np.ndarray:
        return np.concatenate([np.full(len(b), self.rho ** t) for t, b in enumerate(self.batches)])

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        return np.concatenate(self.batches), self.weights()

    def sizes(self) -> list[int]:
        return [len(b) for b in self.batches]


def surrogate_error(window: BatchWindow, C, counter: DistanceCounter | None = None) -> float:
    """(1/M) * sum_t rho**t * sum_{x in B^t} ||x - c_x||^2."""
    if len(window) == 0:
        raise InvalidInputError("empty batch window")
    points, weights = window.stacked()
    _, d2 = nearest(points, as_points(C, "centroids"), counter)
    return float(weights @ d2) / window.mass


def skm_error(batches_since_drift, C, counter: DistanceCounter | None = None) -> float:
    """Plain K-means error over the pooled batches of the current concept."""
    batches = list(batches_since_drift)
    if not batches:
        raise InvalidInputError("no batches since the last drift")
    pool = np.concatenate([as_points(b, "batch") for b in batches])
    _, d2 = nearest(pool, as_points(C, "centroids"), counter)
    return float(d2.sum()) / len(pool)


def _split(labels: np.ndarray, sizes: list[int]) -> list[np.ndarray]:
    return np.split(labels, np.cumsum(sizes)[:-1])


# -- weights and the upper bound ---------------------------------------------------

def centroid_weights(window: BatchWindow, star_labels, zero_labels, K: int):
    """w*_k = sum_{t>=1} rho**t |B^t n P*_k| and w0_k = |B^0 n P0_k|.

    ``star_labels`` holds the labels of batches t = 1, 2, ... in window order.
    """
    w_star = np.zeros(K)
    for t, lab in enumerate(star_labels, start=1):
        w_star += window.rho ** t * np.bincount(np.asarray(lab), minlength=K)[:K]
    w_zero = np.bincount(np.asarray(zero_labels), minlength=K)[:K].astype(np.float64)
    return w_star, w_zero


def _nearest_sq(src: np.ndarray, C: np.ndarray) -> np.ndarray:
    return nearest(src, C)[1]


def upper_bound_f(window: BatchWindow, C, C_star, C_zero, w_star, w_zero) -> float:
    """(1/M) sum_k (w*_k ||c_k' - c*_k||^2 + w0_k ||c_k'' - c0_k||^2), nearest members of C."""
    C = as_points(C, "C")
    total = (np.asarray(w_star) @ _nearest_sq(as_points(C_star), C)
             + np.asarray(w_zero) @ _nearest_sq(as_points(C_zero), C))
    return float(total) / window.mass


def upper_bound_const(window: BatchWindow, C_star, C_zero, star_labels, zero_labels) -> float:
    """Weighted within-cluster scatter of the window about C* (t >= 1) and C0 (t = 0)."""
    C_star = as_points(C_star)
    C_zero = as_points(C_zero)
    total = 0.0
    for t, (b, lab) in enumerate(zip(window.batches[1:], star_labels), start=1):
        diff = b - C_star[np.asarray(lab)]
        total += window.rho ** t * float(np.sum(diff * diff))
    diff = window.batches[0] - C_zero[np.asarray(zero_labels)]
    total += float(np.sum(diff * diff))
    return total / window.mass


# -- initializers ------------------------------------------------------------------

def init_upc(state: "StreamState") -> np.ndarray:
    if state.centroids is None:
        raise InvalidInputError("no previously converged centroids")
    return state.centroids.copy()


def init_icb(batch, K: int, rng: Xorshift64Star, counter: DistanceCounter | None = None) -> np.ndarray:
    return kmpp_seed(batch, K, rng, counter)


def batch_centroids(batch, K: int, cfg: SolverConfig, rng: Xorshift64Star,
                    counter: DistanceCounter | None = None) -> tuple[np.ndarray, np.ndarray]:
    """C0 and P0 for WKI/HI: KM++ seeds on the newest batch refined by Lloyd on it.

    The seeds are the ones ICB starts from when given an identically seeded
    generator; the refinement makes every c0_k the mean of its cluster.
    """
    seeds = kmpp_seed(batch, K, rng, counter)
    res = lloyd(batch, seeds, cfg, counter)
    return res.centroids, res.labels


def init_wki(C_star, C_zero, w_star, w_zero, K: int, cfg: SolverConfig, rng: Xorshift64Star,
             counter: DistanceCounter | None = None) -> np.ndarray:
    """Weighted K-means over the 2K points C* u C0 with weights w* u w0."""
    pts = np.concatenate([as_points(C_star), as_points(C_zero)])
    w = np.concatenate([np.asarray(w_star, float), np.asarray(w_zero, float)])
    if int((w > 0).sum()) < K:
        raise DegenerateClusterError(f"only {int((w > 0).sum())} positive-weight centroids for K={K}")
    wps = WeightedPointSet(pts, w)
    seed = kmpp_seed(wps.points, K, rng, counter, weights=wps.weights)
    return weighted_lloyd(wps, seed, cfg, counter).centroids


def hi_cost_matrix(C_star, C_zero, w_star, w_zero, counter: DistanceCounter | None = None) -> np.ndarray:
    """f[k, k'] = w*_k w0_k' / (w*_k + w0_k') * ||c*_k - c0_k'||^2, zero when a weight is zero."""
    C_star = as_points(C_star)
    C_zero = as_points(C_zero)
    ws = np.asarray(w_star, float)[:, None]
    wz = np.asarray(w_zero, float)[None, :]
    if counter is not None:
        counter.add(len(C_star) * len(C_zero))
    diff = C_star[:, None, :] - C_zero[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    denom = ws + wz
    harm = np.divide(ws * wz, denom, out=np.zeros_like(denom), where=denom > 0)
    return harm * d2


def merge_pairs(C_star, C_zero, w_star, w_zero, sigma) -> np.ndarray:
    """c_k = (w*_k c*_k + w0_s c0_s) / (w*_k + w0_s) with s = sigma[k]."""
    C_star = as_points(C_star)
    C_zero = as_points(C_zero)
    sigma = np.asarray(sigma)
    ws = np.asarray(w_star, float)
    wz = np.asarray(w_zero, float)[sigma]
    denom = ws + wz
    merged = C_zero[sigma].copy()
    ok = denom > 0
    merged[ok] = (ws[ok, None] * C_star[ok] + wz[ok, None] * C_zero[sigma][ok]) / denom[ok, None]
    return merged


def hungarian_pairing(C_star, C_zero, w_star, w_zero,
                      counter: DistanceCounter | None = None) -> AssignmentResult:
    return solve_lsap(hi_cost_matrix(C_star, C_zero, w_star, w_zero, counter))


def init_hi(C_star, C_zero, w_star, w_zero, counter: DistanceCounter | None = None) -> np.ndarray:
    pairing = hungarian_pairing(C_star, C_zero, w_star, w_zero, counter)
    return merge_pairs(C_star, C_zero, w_star, w_zero, pairing.sigma)


# -- stream drivers ----------------------------------------------------------------

@dataclass
class StepReport:
    initial_centroids: np.ndarray
    initial_error: float
    converged_error: float
    iterations: int
    distances: int


@dataclass
class StreamState:
    """FSKM state: the window, converged centroids C* and their partition per batch."""
    window: BatchWindow
    K: int
    centroids: np.ndarray | None = None
    labels: list = field(default_factory=list)
    sq_dists: list = field(default_factory=list)
    last: StepReport | None = None


def fskm_step(state: StreamState, batch, init: InitializerKind | str, cfg: SolverConfig,
              rng: Xorshift64Star, counter: DistanceCounter | None = None) -> StreamState:
    """Evict at T_max, append ``batch`` at t=0, initialize, run weighted Lloyd."""
    init = InitializerKind(init)
    counter = counter if counter is not None else DistanceCounter()
    start = counter.count
    batch = as_points(batch, "batch")
    if len(batch) < state.K:
        raise InvalidInputError(f"batch of {len(batch)} points cannot seed K={state.K}")
    evicted = state.window.push(batch)
    if evicted is not None and state.labels:
        state.labels.pop()
        state.sq_dists.pop()
    star_labels = state.labels

    if state.centroids is None:
        C_init = kmpp_seed(batch, state.K, rng, counter)
    elif init is InitializerKind.UPC:
        C_init = init_upc(state)
    elif init is InitializerKind.ICB:
        C_init = init_icb(batch, state.K, rng, counter)
    else:
        C_zero, zero_labels = batch_centroids(batch, state.K, cfg, rng, counter)
        w_star, w_zero = centroid_weights(state.window, star_labels, zero_labels, state.K)
        if init is InitializerKind.WKI:
            C_init = init_wki(state.centroids, C_zero, w_star, w_zero, state.K, cfg, rng, counter)
        else:
            C_init = init_hi(state.centroids, C_zero, w_star, w_zero, counter)

    known = None
    if init is InitializerKind.UPC and star_labels:
        # C* is unchanged, so the stored partition of the older batches still holds
        known = (np.concatenate(star_labels), np.concatenate(state.sq_dists))
    trace: list[float] = []
    res = batch_window_lloyd(state.window, C_init, cfg, counter, trace, known)
    state.centroids = res.centroids
    state.labels = _split(res.labels, state.window.sizes())
    state.sq_dists = _split(res.sq_dists, state.window.sizes())
    state.last = StepReport(C_init, trace[0], trace[-1], res.iterations, counter.count - start)
    return state


@dataclass
class PSKMState:
    """PSKM state: every batch since the last drift, converged centroids and labels."""
    K: int
    batches: list = field(default_factory=list)
    centroids: np.ndarray | None = None
    labels: np.ndarray | None = None
    last: StepReport | None = None


def pskm_step(state: PSKMState, batch, drift_occurred: bool, cfg: SolverConfig,
              rng: Xorshift64Star, counter: DistanceCounter | None = None) -> PSKMState:
    """Reset and reseed with KM++ on a drift, then Lloyd over the whole concept pool."""
    counter = counter if counter is not None else DistanceCounter()
    start = counter.count
    batch = as_points(batch, "batch")
    if state.batches and batch.shape[1] != state.batches[0].shape[1]:
        raise InvalidInputError("batch dimension differs from stored batches")
    if drift_occurred or state.centroids is None:
        state.batches = []
        C = kmpp_seed(batch, state.K, rng, counter)
    else:
        C = state.centroids
    state.batches.append(batch)
    pool = np.concatenate(state.batches)
    trace: list[float] = []
    res = lloyd(pool, C, cfg, counter, trace)
    state.centroids = res.centroids
    state.labels = res.labels
    state.last = StepReport(np.array(C), trace[0], trace[-1], res.iterations, counter.count - start)
    return state

