"""Hoeffding interval for E_* - E_rho around a single center, and its Monte-Carlo check."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .core import InvalidInputError
from .driftgen import BaseDataSpec, ConceptPool, drift_translate, fmt, gen_base
from .rng import Xorshift64Star

DELTA_PRESETS = {"95": 0.05, "68": 0.32}


class BoundDomainError(ValueError):
    pass


@dataclass(frozen=True)
class BoundParams:
    rho: float
    T: int
    N: int
    delta: float
    b: float
    epsilon: float = 0.0
    E: float = 0.0

    def __post_init__(self):
        if not 0 < self.rho <= 1:
            raise InvalidInputError(f"rho must lie in (0, 1], got {self.rho}")
        if self.T < 1 or self.N < 1:
            raise InvalidInputError("T and N must be >= 1")
        if not 0 < self.delta < 1:
            raise InvalidInputError(f"delta must lie in (0, 1), got {self.delta}")
        if self.b < 0:
            raise InvalidInputError("b must be nonnegative")


def radicand(p: BoundParams) -> float:
    return ((2 * p.rho ** p.T - 1) / p.T + (1 - p.rho) / (1 + p.rho)) / (2 * p.N) * math.log(2 / p.delta)


def bound_e(p: BoundParams) -> float:
    """Half-width b * sqrt(((2 rho^T - 1)/T + (1-rho)/(1+rho)) / (2N) * ln(2/delta))."""
    r = radicand(p)
    if r < 0:
        raise BoundDomainError(f"negative radicand {r!r} for {p}")
    return p.b * math.sqrt(r)


def interval(p: BoundParams) -> tuple[float, float]:
    center = p.rho ** p.T * p.epsilon * p.E
    e = bound_e(p)
    return center - e, center + e


@dataclass(frozen=True)
class TheoremCheckConfig:
    rho: float = 0.676
    epsilon: float = 0.5
    N: int = 1000
    delta: float = 0.05
    reps: int = 200
    n_old: int = 40
    n_new: int = 20
    base: BaseDataSpec = BaseDataSpec(d=2, n=20000, k_true=3)
    seed: int = 0


@dataclass
class CoverageReport:
    T: np.ndarray
    coverage: np.ndarray
    mean_diff: np.ndarray
    center: np.ndarray
    half_width: np.ndarray
    E: float
    epsilon_hat: float
    b: float
    diffs: np.ndarray = field(repr=False)

    def decay_rate(self, t_last: int = 10) -> float:
        """exp of the slope of log(mean_diff) against T over T = 1..t_last."""
        sel = self.T <= t_last
        y = self.mean_diff[sel]
        if np.any(y <= 0):
            raise ValueError("mean difference is not positive on the fit range")
        slope = np.polyfit(self.T[sel].astype(float), np.log(y), 1)[0]
        return float(math.exp(slope))

    def rows(self):
        for i in range(len(self.T)):
            yield (int(self.T[i]), self.coverage[i], self.mean_diff[i], self.center[i], self.half_width[i])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["T", "empirical_coverage", "mean_diff", "center", "e_halfwidth"])
            for t, cov, md, c, e in self.rows():
                w.writerow([t, fmt(cov), fmt(md), fmt(c), fmt(e)])


def verify_theorem1(cfg: TheoremCheckConfig) -> CoverageReport:
    """Monte-Carlo coverage of the interval for T = 1..n_new.

    The reference center is the mean of the first concept pool; the second
    pool is a (1+eps)-drift of it. E, eps and b (largest squared distance to
    the center) are read off the two pools. Each repetition samples n_old
    old-concept batches followed by n_new new-concept batches.
    """
    pool_rng = Xorshift64Star.derive(cfg.seed, 11)
    X1 = gen_base(cfg.base, pool_rng)
    c = X1.mean(axis=0)
    if cfg.epsilon > 0:
        X2 = drift_translate(ConceptPool(X1, 0, c[None, :]), cfg.epsilon,
                             Xorshift64Star.derive(cfg.seed, 12))[0].points
    else:
        X2 = X1
    q1 = np.sum((X1 - c) ** 2, axis=1)
    q2 = np.sum((X2 - c) ** 2, axis=1)
    E = float(q1.mean())
    eps_hat = float(q2.mean()) / E - 1.0
    b = float(max(q1.max(), q2.max()))

    Ts = np.arange(1, cfg.n_new + 1)
    diffs = np.empty((cfg.reps, cfg.n_new))
    n1, n2 = len(q1), len(q2)
    for r in range(cfg.reps):
        rng = Xorshift64Star.derive(cfg.seed, 13, r)
        old = np.array([q1[rng.integers_array(n1, cfg.N)].sum() for _ in range(cfg.n_old)])
        new = np.array([q2[rng.integers_array(n2, cfg.N)].sum() for _ in range(cfg.n_new)])
        for T in Ts:
            # newest first: new batches T-1..0 then the old concept
            sums = np.concatenate([new[:T][::-1], old[::-1]])
            w = cfg.rho ** np.arange(len(sums))
            e_rho = float(w @ sums) / (cfg.N * float(w.sum()))
            e_star = float(new[:T].sum()) / (cfg.N * T)
            diffs[r, T - 1] = e_star - e_rho

    centers = np.empty(cfg.n_new)
    halves = np.empty(cfg.n_new)
    coverage = np.empty(cfg.n_new)
    for i, T in enumerate(Ts):
        p = BoundParams(cfg.rho, int(T), cfg.N, cfg.delta, b, eps_hat, E)
        lo, hi = interval(p)
        centers[i] = p.rho ** p.T * eps_hat * E
        halves[i] = bound_e(p)
        coverage[i] = float(np.mean((diffs[:, i] > lo) & (diffs[:, i] < hi)))
    return CoverageReport(Ts, coverage, diffs.mean(axis=0), centers, halves, E, eps_hat, b, diffs)
