"""Synthetic base data and streams with controlled (1+eps)-drifts.

A drift translates every cluster of the current concept pool (membership by
nearest reference centroid) along its own random unit direction. The common
magnitude alpha is tuned until the pool's error against the previous
reference centroids is (1+eps) times the pre-drift error, within 5%.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .core import InvalidInputError, as_points, kmeans_error, nearest
from .lloyd import SolverConfig, kmpp_seed, lloyd
from .rng import Xorshift64Star, derive_seed

STREAM_MAGIC = "# skm-stream v1"
CALIBRATION_TOL = 0.05


class DriftCalibrationError(RuntimeError):
    def __init__(self, message: str, best_alpha: float, best_ratio: float):
        super().__init__(f"{message} (best alpha={best_alpha!r}, ratio={best_ratio!r})")
        self.best_alpha = best_alpha
        self.best_ratio = best_ratio


@dataclass(frozen=True)
class BaseDataSpec:
    kind: str = "gaussian_mixture"
    d: int = 2
    n: int = 5000
    k_true: int = 5
    seed: int = 0
    csv_path: str | None = None
    header: bool = False


@dataclass(frozen=True)
class DriftStreamSpec:
    base: BaseDataSpec = BaseDataSpec()
    epsilon: float = 1.0
    batch_size: int = 500
    drift_period: int = 10
    k_cluster: int = 5
    seed: int = 0
    # index of the first drifting batch; defaults to drift_period
    first_drift: int | None = None
    max_alpha_iterations: int = 50

    def validate(self) -> list[str]:
        errors = []
        if not self.epsilon > 0:
            errors.append(f"epsilon must be > 0, got {self.epsilon}")
        if self.batch_size < self.k_cluster:
            errors.append(f"batch_size {self.batch_size} smaller than k_cluster {self.k_cluster}")
        if self.k_cluster < 1:
            errors.append("k_cluster must be >= 1")
        if self.drift_period < 1:
            errors.append("drift_period must be >= 1")
        if self.base.kind not in ("gaussian_mixture", "csv_file"):
            errors.append(f"unknown base data kind {self.base.kind!r}")
        if self.base.kind == "gaussian_mixture":
            if self.base.d < 1:
                errors.append("d must be >= 1")
            if self.base.k_true < 1:
                errors.append("k_true must be >= 1")
            if self.base.n < self.batch_size:
                errors.append(f"pool size n={self.base.n} smaller than batch_size {self.batch_size}")
        return errors


@dataclass
class ConceptPool:
    points: np.ndarray
    concept_id: int
    reference_centroids: np.ndarray


@dataclass(frozen=True)
class DriftReport:
    concept_id: int
    alpha: float
    ratio: float
    iterations: int


def load_csv(path, header: bool = False) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise InvalidInputError(f"{path}:{lineno}: non-numeric value ({exc})") from None
            if rows and len(vals) != len(rows[0]):
                raise InvalidInputError(
                    f"{path}:{lineno}: expected {len(rows[0])} columns, got {len(vals)}")
            rows.append(vals)
    if not rows:
        raise InvalidInputError(f"{path}: no data rows")
    return as_points(np.array(rows), str(path))


def gen_base(spec: BaseDataSpec, rng: Xorshift64Star) -> np.ndarray:
    """Isotropic unit-variance Gaussian mixture with means in [-10, 10]^d, or a CSV pool."""
    if spec.kind == "csv_file":
        if not spec.csv_path:
            raise InvalidInputError("csv base data needs a path")
        return load_csv(spec.csv_path, spec.header)
    if spec.kind != "gaussian_mixture":
        raise InvalidInputError(f"unknown base data kind {spec.kind!r}")
    if spec.d < 1 or spec.n < 1 or spec.k_true < 1:
        raise InvalidInputError("d, n and k_true must be positive")
    means = rng.uniform_array(-10.0, 10.0, (spec.k_true, spec.d))
    comp = rng.integers_array(spec.k_true, spec.n)
    return means[comp] + rng.normal_array((spec.n, spec.d))


def random_unit_vector(d: int, rng: Xorshift64Star) -> np.ndarray:
    if d < 1:
        raise InvalidInputError("d must be >= 1")
    while True:
        v = rng.normal_array(d)
        norm = math.sqrt(float(v @ v))
        if norm > 0:
            return v / norm


def initial_alpha(epsilon: float, E_prev: float, K: int, n_points: int) -> float:
    """First guess sqrt(eps * E / (K * n)) for the translation magnitude."""
    if not E_prev > 0:
        raise InvalidInputError(f"previous error must be positive, got {E_prev}")
    if epsilon < 0:
        raise InvalidInputError("epsilon must be nonnegative")
    return math.sqrt(epsilon * E_prev / (K * n_points))


def drift_translate(pool: ConceptPool, epsilon: float, rng: Xorshift64Star,
                    cfg: SolverConfig = SolverConfig(),
                    max_iterations: int = 50) -> tuple[ConceptPool, DriftReport]:
    """Shift each reference cluster so the error against the old centroids grows by (1+eps).

    Returns the new pool, whose reference centroids are refit by Lloyd
    starting from the translated old ones, and the calibration report.
    """
    if not epsilon > 0:
        raise InvalidInputError(f"epsilon must be > 0, got {epsilon}")
    X = pool.points
    C = pool.reference_centroids
    K, n = len(C), len(X)
    labels, d2 = nearest(X, C)
    E_prev = float(d2.sum()) / n
    target = (1.0 + epsilon) * E_prev
    xi = np.stack([random_unit_vector(X.shape[1], rng) for _ in range(K)])
    shift = xi[labels]
    # the guess is fed the summed error n*E so its scale matches one displacement per point
    alpha1 = initial_alpha(epsilon, n * E_prev, K, n)
    alpha = alpha1
    best = (math.inf, alpha, math.nan)
    for it in range(1, max_iterations + 1):
        E_j = kmeans_error(X + alpha * shift, C)
        rel = E_j / target - 1.0
        if abs(rel) < best[0]:
            best = (abs(rel), alpha, E_j / E_prev)
        if abs(rel) < CALIBRATION_TOL:
            moved = X + alpha * shift
            refit = lloyd(moved, C + alpha * xi, cfg).centroids
            report = DriftReport(pool.concept_id + 1, alpha, E_j / E_prev, it)
            return ConceptPool(moved, pool.concept_id + 1, refit), report
        alpha = max(0.0, alpha - rel * alpha1)
    raise DriftCalibrationError(
        f"no alpha within {CALIBRATION_TOL:.0%} of the target after {max_iterations} iterations",
        best[1], best[2])


class DriftStream:
    """Batches drawn with replacement from the current concept pool.

    Batch ``i`` triggers a drift before sampling when ``i >= first_drift`` and
    ``(i - first_drift) % drift_period == 0``.
    """

    def __init__(self, spec: DriftStreamSpec, base_points=None):
        errors = spec.validate()
        if errors:
            raise InvalidInputError("; ".join(errors))
        self.spec = spec
        self._drift_rng = Xorshift64Star.derive(spec.seed, 1)
        self._sample_rng = Xorshift64Star.derive(spec.seed, 2)
        if base_points is None:
            base_points = gen_base(spec.base, Xorshift64Star.derive(spec.base.seed, 0))
        X = as_points(base_points, "base data")
        if len(X) < spec.k_cluster:
            raise InvalidInputError("base pool smaller than k_cluster")
        self.cfg = SolverConfig()
        seed_c = kmpp_seed(X, spec.k_cluster, Xorshift64Star.derive(spec.seed, 3))
        C = lloyd(X, seed_c, self.cfg).centroids
        self.pool = ConceptPool(X, 0, C)
        self.index = 0
        self.drifts: list[DriftReport] = []

    @property
    def first_drift(self) -> int:
        return self.spec.drift_period if self.spec.first_drift is None else self.spec.first_drift

    def is_drift(self, i: int) -> bool:
        f = self.first_drift
        return i >= f and (i - f) % self.spec.drift_period == 0

    def next_batch(self) -> tuple[np.ndarray, int]:
        if self.is_drift(self.index):
            self.pool, report = drift_translate(self.pool, self.spec.epsilon, self._drift_rng,
                                                self.cfg, self.spec.max_alpha_iterations)
            self.drifts.append(report)
        idx = self._sample_rng.integers_array(len(self.pool.points), self.spec.batch_size)
        self.index += 1
        return self.pool.points[idx], self.pool.concept_id

    def take(self, count: int) -> list[tuple[np.ndarray, int]]:
        return [self.next_batch() for _ in range(count)]


def next_batch(stream: DriftStream) -> tuple[np.ndarray, int]:
    return stream.next_batch()


# -- stream dump -------------------------------------------------------------------

def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_stream(path, batches, *, d: int, N: int, period: int, epsilon: float, seed: int) -> None:
    """Write ``(concept_id, points)`` pairs in the skm-stream v1 format."""
    with open(path, "w", newline="") as fh:
        fh.write(f"{STREAM_MAGIC}, d={d}, N={N}, period={period}, epsilon={fmt(epsilon)}, seed={seed}\n")
        for batch_id, (points, concept) in enumerate(batches):
            for row in np.asarray(points):
                fh.write(f"{batch_id},{concept}," + ",".join(fmt(v) for v in row) + "\n")


def read_stream(path) -> tuple[dict, list[tuple[np.ndarray, int]]]:
    with open(path) as fh:
        head = fh.readline().rstrip("\n")
        if not head.startswith(STREAM_MAGIC):
            raise InvalidInputError(f"{path}:1: not an skm-stream v1 file")
        meta = {}
        for part in head[len(STREAM_MAGIC):].split(","):
            part = part.strip()
            if not part:
                continue
            key, _, val = part.partition("=")
            meta[key.strip()] = val.strip()
        try:
            meta = {"d": int(meta["d"]), "N": int(meta["N"]), "period": int(meta["period"]),
                    "epsilon": float(meta["epsilon"]), "seed": int(meta["seed"])}
        except (KeyError, ValueError) as exc:
            raise InvalidInputError(f"{path}:1: malformed header ({exc})") from None
        rows: dict[int, list] = {}
        concepts: dict[int, int] = {}
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != meta["d"] + 2:
                raise InvalidInputError(f"{path}:{lineno}: expected {meta['d'] + 2} fields")
            try:
                b, c = int(parts[0]), int(parts[1])
                vals = [float(v) for v in parts[2:]]
            except ValueError as exc:
                raise InvalidInputError(f"{path}:{lineno}: {exc}") from None
            rows.setdefault(b, []).append(vals)
            concepts[b] = c
    batches = [(np.array(rows[b]), concepts[b]) for b in sorted(rows)]
    return meta, batches


__all__ = [
    "BaseDataSpec", "ConceptPool", "DriftCalibrationError", "DriftReport", "DriftStream",
    "DriftStreamSpec", "derive_seed", "drift_translate", "gen_base", "initial_alpha",
    "load_csv", "next_batch", "random_unit_vector", "read_stream", "write_stream",
]
