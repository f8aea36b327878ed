"""Experimental protocol: burn-in, streamed evaluation, normalization, aggregation.

Every algorithm of a run consumes the same batch sequence. The per-batch
generator that seeds KM++ is derived from the run seed and the batch index,
so ICB, WKI and HI draw the same C0 on every batch.
"""

from __future__ import annotations

import csv
import itertools
import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .core import DistanceCounter, InvalidInputError
from .driftgen import BaseDataSpec, DriftStream, DriftStreamSpec, fmt
from .lloyd import SolverConfig
from .rng import Xorshift64Star, derive_seed
from .streaming import (BatchWindow, InitializerKind, PSKMState, StreamState,
                        default_t_max, fskm_step, pskm_step, rho_from, skm_error)

log = logging.getLogger(__name__)

ALGORITHMS = ("PSKM", "FSKM-UPC", "FSKM-ICB", "FSKM-WKI", "FSKM-HI")
FSKM_ALGORITHMS = ALGORITHMS[1:]
REPORT_INDICES = (1, 2, 4, 10)
RECORD_FIELDS = ("algo", "eps", "K", "m", "rho", "rep", "global_batch", "batch_in_concept",
                 "init_surr", "conv_surr", "conv_skm", "distances", "iterations")
SUMMARY_FIELDS = ("algo", "eps", "K", "m", "batch_index", "metric", "median", "q1", "q3")


def parse_algorithm(name: str) -> str:
    key = name.strip().upper()
    if key in ("UPC", "ICB", "WKI", "HI"):
        key = "FSKM-" + key
    if key not in ALGORITHMS:
        raise InvalidInputError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}")
    return key


@dataclass(frozen=True)
class ExperimentConfig:
    d: int = 2
    n_pool: int = 5000
    k_true: int | None = None
    K: int = 5
    epsilon: float = 1.0
    m: int = 2
    tau: int = 10
    batch_size: int = 500
    n_batches: int = 100
    t_max: int | None = None
    max_iterations: int = 100
    seed: int = 0
    repetitions: int = 1
    algorithms: tuple = ALGORITHMS
    csv_path: str | None = None
    csv_header: bool = False

    @property
    def rho(self) -> float:
        return rho_from(self.epsilon, self.m, self.tau)

    @property
    def window_size(self) -> int:
        t = self.t_max if self.t_max is not None else default_t_max(self.rho)
        return t if t is not None else self.tau

    def validate(self) -> list[str]:
        errors = []
        if not self.epsilon > 0.01:
            errors.append(f"epsilon must exceed 0.01, got {self.epsilon}")
        for name in ("d", "n_pool", "K", "m", "tau", "batch_size", "n_batches",
                     "max_iterations", "repetitions"):
            if getattr(self, name) < 1:
                errors.append(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.K > self.batch_size:
            errors.append(f"K={self.K} exceeds batch_size={self.batch_size}")
        if self.csv_path is None and self.n_pool < self.batch_size:
            errors.append(f"n_pool={self.n_pool} smaller than batch_size={self.batch_size}")
        if self.k_true is not None and self.k_true < 1:
            errors.append("k_true must be >= 1")
        if self.t_max is not None and self.t_max < 1:
            errors.append("t_max must be >= 1")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                errors.append(f"unknown algorithm {a!r}")
        if not self.algorithms:
            errors.append("no algorithms selected")
        return errors

    def stream_spec(self, run_seed: int) -> DriftStreamSpec:
        base = BaseDataSpec(kind="csv_file" if self.csv_path else "gaussian_mixture",
                            d=self.d, n=self.n_pool, k_true=self.k_true or self.K,
                            seed=derive_seed(run_seed, 21), csv_path=self.csv_path,
                            header=self.csv_header)
        return DriftStreamSpec(base=base, epsilon=self.epsilon, batch_size=self.batch_size,
                               drift_period=self.tau, k_cluster=self.K,
                               seed=derive_seed(run_seed, 22), first_drift=self.window_size)


@dataclass(frozen=True)
class ExperimentRecord:
    algo: str
    eps: float
    K: int
    m: int
    rho: float
    rep: int
    global_batch: int
    batch_in_concept: int
    init_surr: float
    conv_surr: float
    conv_skm: float
    distances: int
    iterations: int


def run_on_batches(cfg: ExperimentConfig, batches, rep: int = 0, run_seed: int | None = None,
                   burn_in: int | None = None) -> list[ExperimentRecord]:
    """Feed ``(points, concept_id)`` pairs to every algorithm; record after burn-in.

    The concept ids are used only to flag PSKM resets and to score the SKM
    error; FSKM never sees them.
    """
    rho = cfg.rho
    t_max = cfg.window_size
    burn_in = t_max if burn_in is None else burn_in
    run_seed = cfg.seed if run_seed is None else run_seed
    solver = SolverConfig(cfg.max_iterations, run_seed)
    states = {}
    for a in cfg.algorithms:
        if a == "PSKM":
            states[a] = PSKMState(cfg.K)
        else:
            states[a] = StreamState(BatchWindow(rho, t_max), cfg.K)
    records = []
    concept_batches: list[np.ndarray] = []
    prev_concept = None
    in_concept = 0
    for g, (points, concept) in enumerate(batches):
        drift = prev_concept is not None and concept != prev_concept
        if drift or prev_concept is None:
            concept_batches = []
            in_concept = 0
        concept_batches.append(points)
        in_concept += 1
        prev_concept = concept
        for a in cfg.algorithms:
            rng = Xorshift64Star.derive(run_seed, 31, g)
            counter = DistanceCounter()
            if a == "PSKM":
                st = pskm_step(states[a], points, drift, solver, rng, counter)
            else:
                st = fskm_step(states[a], points, InitializerKind(a.split("-")[1]), solver, rng, counter)
            if g < burn_in:
                continue
            rep_ = st.last
            conv_skm = rep_.converged_error if a == "PSKM" else skm_error(concept_batches, st.centroids)
            records.append(ExperimentRecord(
                a, cfg.epsilon, cfg.K, cfg.m, rho, rep, g - burn_in, in_concept,
                rep_.initial_error, rep_.converged_error, conv_skm, rep_.distances, rep_.iterations))
    return records


def run_single(cfg: ExperimentConfig, rep: int = 0) -> list[ExperimentRecord]:
    run_seed = derive_seed(cfg.seed, rep)
    stream = DriftStream(cfg.stream_spec(run_seed))
    burn_in = cfg.window_size
    return run_on_batches(cfg, (stream.next_batch() for _ in range(burn_in + cfg.n_batches)),
                          rep, run_seed, burn_in)


def run_experiment(cfg: ExperimentConfig) -> list[ExperimentRecord]:
    errors = cfg.validate()
    if errors:
        raise InvalidInputError("; ".join(errors))
    out = []
    for rep in range(cfg.repetitions):
        out.extend(run_single(cfg, rep))
    return out


def grid_configs(base: ExperimentConfig, d=(2, 10), K=(5, 10), epsilon=(0.5, 1.0, 2.0),
                 m=(1, 2, 3)) -> list[tuple[ExperimentConfig, int]]:
    """Cells of the grid as (config, rep). ``rep`` numbers every run sharing (eps, K, m),
    so runs on different dimensions stay distinguishable in the records."""
    cells = []
    for e, k, mm in itertools.product(epsilon, K, m):
        rep = 0
        for dd in d:
            cfg = replace(base, d=dd, K=k, epsilon=e, m=mm, repetitions=1)
            for r in range(base.repetitions):
                cells.append((replace(cfg, seed=derive_seed(base.seed, dd, r)), rep))
                rep += 1
    return cells


def _run_cell(cell):
    cfg, rep = cell
    return run_single(cfg, 0) if rep is None else [replace(r, rep=rep) for r in run_single(cfg, 0)]


def run_grid(cells, jobs: int = 1) -> list[ExperimentRecord]:
    for cfg, _ in cells:
        errors = cfg.validate()
        if errors:
            raise InvalidInputError("; ".join(errors))
    if jobs <= 1:
        results = [_run_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_cell, cells))
    return [r for chunk in results for r in chunk]


# -- normalization and aggregation -------------------------------------------------

@dataclass
class NormalizedScores:
    errors: dict = field(default_factory=dict)      # metric -> {algo: normalized error}
    distances: dict = field(default_factory=dict)   # algo -> D_M / min D
    flagged: set = field(default_factory=set)       # metrics left unnormalized


def normalize_scores(records, metrics=("init_surr", "conv_surr", "conv_skm")) -> NormalizedScores:
    """(E - min E) / min E per metric and D / min D over one batch group."""
    records = list(records)
    if len(records) < 2:
        raise InvalidInputError("normalization needs at least two algorithms per group")
    out = NormalizedScores()
    for metric in metrics:
        vals = {r.algo: float(getattr(r, metric)) for r in records}
        lo = min(vals.values())
        if lo == 0:
            warnings.warn(f"minimum {metric} is zero; group left unnormalized", RuntimeWarning)
            out.flagged.add(metric)
            out.errors[metric] = vals
        else:
            out.errors[metric] = {a: (v - lo) / lo for a, v in vals.items()}
    dists = {r.algo: r.distances for r in records}
    dmin = min(dists.values())
    if dmin == 0:
        out.flagged.add("distances")
        out.distances = {a: float(v) for a, v in dists.items()}
    else:
        out.distances = {a: v / dmin for a, v in dists.items()}
    return out


@dataclass(frozen=True)
class SummaryRow:
    algo: str
    eps: float
    K: int
    m: int
    batch_index: int
    metric: str
    median: float
    q1: float
    q3: float


def normalized_table(records) -> list[tuple]:
    """One (algo, eps, K, m, batch_in_concept, metric, value) row per record and metric.

    Surrogate errors and distances are normalized over the FSKM variants, the
    SKM error over every algorithm including PSKM; iterations stay raw.
    """
    groups: dict[tuple, list] = {}
    for r in records:
        groups.setdefault((r.eps, r.K, r.m, r.rho, r.rep, r.global_batch), []).append(r)
    rows = []
    for key in groups:
        group = groups[key]
        fskm = [r for r in group if r.algo != "PSKM"]
        bic = group[0].batch_in_concept
        eps, K, m = key[0], key[1], key[2]
        if len(fskm) >= 2:
            ns = normalize_scores(fskm, ("init_surr", "conv_surr"))
            for metric, vals in ns.errors.items():
                for a, v in vals.items():
                    rows.append((a, eps, K, m, bic, metric, v))
            for a, v in ns.distances.items():
                rows.append((a, eps, K, m, bic, "distances", v))
        if len(group) >= 2:
            ns = normalize_scores(group, ("conv_skm",))
            for a, v in ns.errors["conv_skm"].items():
                rows.append((a, eps, K, m, bic, "conv_skm", v))
        for r in group:
            rows.append((r.algo, eps, K, m, bic, "iterations", float(r.iterations)))
    return rows


def aggregate(records, batch_indices=REPORT_INDICES) -> list[SummaryRow]:
    """Median and quartiles of the normalized scores per (algo, eps, K, m, index, metric)."""
    wanted = set(batch_indices)
    cells: dict[tuple, list] = {}
    for algo, eps, K, m, bic, metric, v in normalized_table(records):
        if bic in wanted:
            cells.setdefault((algo, eps, K, m, bic, metric), []).append(v)
    out = []
    for key in sorted(cells, key=lambda k: (ALGORITHMS.index(k[0]) if k[0] in ALGORITHMS else 99,
                                            k[1], k[2], k[3], k[4], k[5])):
        q1, med, q3 = np.percentile(np.array(cells[key]), [25, 50, 75])
        out.append(SummaryRow(*key, float(med), float(q1), float(q3)))
    return out


# -- CSV -----------------------------------------------------------------------------

def _cell(v):
    if isinstance(v, float):
        return fmt(v)
    return str(v)


def write_records(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for r in records:
            w.writerow([_cell(getattr(r, f)) for f in RECORD_FIELDS])


def read_records(path) -> list[ExperimentRecord]:
    conv = {"algo": str, "eps": float, "K": int, "m": int, "rho": float, "rep": int,
            "global_batch": int, "batch_in_concept": int, "init_surr": float, "conv_surr": float,
            "conv_skm": float, "distances": int, "iterations": int}
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return out
        if tuple(header) != RECORD_FIELDS:
            raise InvalidInputError(f"{path}:1: unexpected header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(RECORD_FIELDS):
                raise InvalidInputError(f"{path}:{lineno}: expected {len(RECORD_FIELDS)} fields, got {len(row)}")
            try:
                vals = {k: conv[k](v) for k, v in zip(RECORD_FIELDS, row)}
            except ValueError as exc:
                raise InvalidInputError(f"{path}:{lineno}: {exc}") from None
            out.append(ExperimentRecord(**vals))
    return out


def write_summary(path_or_file, rows) -> None:
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for r in rows:
            w.writerow([_cell(getattr(r, f)) for f in SUMMARY_FIELDS])
    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            emit(fh)
