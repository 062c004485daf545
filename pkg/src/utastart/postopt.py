"""Exploring the set of (near-)optimal value models.

Two tools are provided:

* ``classical_minmax`` minimises and maximises every ``u_kj(c*)`` under a
  near-optimality bound on the total error and averages the solutions.
* ``mo_simulate`` repeatedly draws criterion weights ``mu``, maximises the
  weighted sum ``sum_j mu_j * sum_k u_kj(c*)`` over the bounded polyhedron
  and records which weight vectors come out, and how often.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import lp as lpmod
from .disagg import (
    SCHEMA_VERSION,
    DisaggConfig,
    FitError,
    RankingChain,
    ValueModel,
    WeightLayout,
    build_program,
)
from .lp import LE, LinearProgram
from .timeseries import MeasureTensor

DEDUP_DECIMALS = 6
DEDUP_TOL = 1e-6


class SimulationError(RuntimeError):
    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message if iteration is None else f"iteration {iteration}: {message}")
        self.iteration = iteration


def bounded_program(
    measures: MeasureTensor, ranking: RankingChain, config: DisaggConfig, z_bound: float
) -> tuple[LinearProgram, WeightLayout]:
    """Disaggregation polyhedron plus ``sum(sigma) <= z_bound``."""
    prog = build_program(measures, ranking, config)
    layout = WeightLayout.of(measures)
    err = np.zeros(prog.n_vars)
    err[layout.total :] = 1.0
    prog.add_constraint(err, LE, z_bound, "error_bound")
    return prog, layout


# -- classical post-optimisation ---------------------------------------------


@dataclass
class MinMaxRow:
    measure: str
    criterion: str
    min: float
    max: float
    average: float


@dataclass
class MinMaxReport:
    rows: list[MinMaxRow]
    solutions: list[np.ndarray]  # 2 * n * h weight vectors, min/max per (k, j)
    average_weights: np.ndarray
    z_bound: float

    def to_dict(self, layout: WeightLayout | None = None) -> dict:
        bounds = []
        for r in self.rows:
            bounds.append({"measure": r.measure, "criterion": r.criterion, "sense": "min", "value": r.min})
            bounds.append({"measure": r.measure, "criterion": r.criterion, "sense": "max", "value": r.max})
        avg = self.average_weights.tolist() if layout is None else layout.nest(self.average_weights)
        return {
            "schema_version": SCHEMA_VERSION,
            "z_bound": self.z_bound,
            "bounds": bounds,
            "averages": [{"measure": r.measure, "criterion": r.criterion, "average": r.average} for r in self.rows],
            "average_weights": avg,
        }


def classical_minmax(
    measures: MeasureTensor, ranking: RankingChain, config: DisaggConfig, fitted: ValueModel
) -> MinMaxReport:
    """Min and max of each ``u_kj(c*)`` with total error at most ``z* (1 + gamma)``.

    The average is taken over all ``2 n h`` solution vectors, as in the
    classical UTA post-optimality analysis.
    """
    z_bound = fitted.z + config.gamma * fitted.z
    prog, layout = bounded_program(measures, ranking, config, z_bound)
    solutions = []
    extremes = []
    for k in range(len(measures.measures)):
        for j in range(len(measures.criteria)):
            c = np.zeros(prog.n_vars)
            c[layout.slice(k, j)] = 1.0
            pair = []
            for sense in (lpmod.MINIMIZE, lpmod.MAXIMIZE):
                sol = lpmod.solve(prog.with_objective(c, sense))
                if not sol.optimal:
                    raise FitError(
                        f"post-optimisation LP ({sense} u[{measures.measures[k]},{measures.criteria[j]}]) "
                        f"returned {sol.status!r}"
                    )
                solutions.append(sol.x[: layout.total].copy())
                pair.append(sol.objective)
            extremes.append((k, j, pair[0], pair[1]))
    avg_w = np.mean(solutions, axis=0)
    rows = [
        MinMaxRow(measures.measures[k], measures.criteria[j], lo, hi, float(avg_w[layout.slice(k, j)].sum()))
        for k, j, lo, hi in extremes
    ]
    return MinMaxReport(rows, solutions, avg_w, z_bound)


# -- weight sampling ----------------------------------------------------------


def iteration_rng(seed: int, iteration: int) -> np.random.Generator:
    """Counter-based stream keyed by (seed, iteration); order-independent."""
    if not (0 <= seed < 2**64 and 0 <= iteration < 2**64):
        raise ValueError("seed and iteration must fit in 64 bits")
    return np.random.Generator(np.random.Philox(key=(seed << 64) | iteration))


def sample_mu(rng: np.random.Generator, n: int) -> np.ndarray:
    """Independent U[0, 1] weight per criterion, not normalised."""
    return rng.random(n)


def order_mu(draws: Sequence[float], order: Sequence[int]) -> np.ndarray:
    """Assign sorted ``draws`` so that ``mu[order[0]] >= mu[order[1]] >= ...``.

    ``order`` lists criterion indices, most relevant first.  Equal draws keep
    their index order.
    """
    draws = np.asarray(draws, dtype=float)
    order = list(order)
    if sorted(order) != list(range(len(draws))):
        raise ValueError("order must be a permutation of the criterion indices")
    ranked = draws[np.argsort(-draws, kind="stable")]
    mu = np.empty_like(draws)
    mu[order] = ranked
    return mu


def sample_mu_ordered(rng: np.random.Generator, order: Sequence[int]) -> np.ndarray:
    return order_mu(rng.random(len(order)), order)


def parse_order(text: str | Sequence[str], criteria: Sequence[str]) -> list[int]:
    """``"c1>c3>c2"`` (or a list of ids) to criterion indices."""
    ids = [s.strip() for s in text.split(">")] if isinstance(text, str) else list(text)
    if sorted(ids) != sorted(criteria) or len(set(ids)) != len(ids):
        raise ValueError(f"criteria order {ids} is not a permutation of {list(criteria)}")
    return [list(criteria).index(c) for c in ids]


# -- weighted-sum multi-objective ---------------------------------------------


def face_tie_break(n_vars: int, n_weights: int) -> list[np.ndarray]:
    """Secondary objectives that pick one vertex per optimal face.

    First the least total error, then a fixed generic weighting of the step
    weights (square roots, so that distinct vertices almost never tie).
    """
    errors = np.zeros(n_vars)
    errors[n_weights:] = 1.0
    generic = np.zeros(n_vars)
    generic[:n_weights] = np.sqrt(np.arange(2, n_weights + 2))
    return [errors, generic]


class MOProblem:
    """The z-bounded polyhedron, built once and re-solved for each ``mu``."""

    def __init__(self, measures: MeasureTensor, ranking: RankingChain, config: DisaggConfig, fitted: ValueModel):
        self.z_bound = fitted.z + config.epsilon
        self.program, self.layout = bounded_program(measures, ranking, config, self.z_bound)
        n = len(measures.criteria)
        self._crit_cols = np.zeros((n, self.program.n_vars))
        for k in range(len(measures.measures)):
            for j in range(n):
                self._crit_cols[j, self.layout.slice(k, j)] = 1.0
        self.tie_break = face_tie_break(self.program.n_vars, self.layout.total)

    def objective_row(self, mu: Sequence[float]) -> np.ndarray:
        mu = np.asarray(mu, dtype=float)
        if mu.shape != (self._crit_cols.shape[0],):
            raise ValueError("one weight per criterion required")
        return mu @ self._crit_cols

    def solve(self, mu: Sequence[float]) -> tuple[np.ndarray, float]:
        sol = self.solve_full(mu)
        if not sol.optimal:
            raise SimulationError(f"weighted-sum LP returned {sol.status!r}")
        w = sol.x[: self.layout.total].copy()
        return w, sol.objective

    def solve_full(self, mu: Sequence[float]) -> lpmod.LpSolution:
        prog = self.program.with_objective(self.objective_row(mu), lpmod.MAXIMIZE)
        return lpmod.solve(prog, tie_break=self.tie_break)

    def full_point(self, w: np.ndarray) -> np.ndarray:
        """Extend ``w`` with zero errors (valid when the stored entry had none)."""
        return np.concatenate([w, np.zeros(self.program.n_vars - w.size)])


def mo_solve(
    measures: MeasureTensor, ranking: RankingChain, config: DisaggConfig, fitted: ValueModel, mu: Sequence[float]
) -> tuple[np.ndarray, float]:
    """Maximise ``sum_j mu_j sum_k u_kj(c*)`` with total error at most ``z* + epsilon``."""
    return MOProblem(measures, ranking, config, fitted).solve(mu)


@dataclass
class EnsembleEntry:
    key: tuple[float, ...]
    w: np.ndarray
    count: int
    objective: float
    mu: np.ndarray
    first_iteration: int


@dataclass
class IterationRecord:
    iteration: int
    mu: np.ndarray
    entry: int
    objective: float
    point: np.ndarray  # full LP point (weights and errors)


@dataclass
class SolutionEnsemble:
    iterations: int
    seed: int
    entries: list[EnsembleEntry]
    layout: WeightLayout
    order: list[str] | None = None
    trace: list[IterationRecord] = field(default_factory=list, repr=False)

    @property
    def weighted_average(self) -> np.ndarray:
        return weighted_average(self)

    @property
    def counts(self) -> list[int]:
        return [e.count for e in self.entries]

    def criterion_totals(self, entry: EnsembleEntry) -> np.ndarray:
        return self.layout.criterion_totals(entry.w)

    def objective_classes(self, decimals: int = 4) -> list[tuple[tuple[float, ...], int]]:
        """Group entries by per-criterion totals ``sum_k u_kj(c*)``.

        Two solutions with equal totals attain the same weighted-sum objective
        for every ``mu``.  Returned in order of first appearance.
        """
        groups: dict[tuple[float, ...], int] = {}
        for e in self.entries:
            key = tuple(float(v) for v in np.round(self.criterion_totals(e), decimals) + 0.0)
            groups[key] = groups.get(key, 0) + e.count
        return list(groups.items())

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "iterations": self.iterations,
            "seed": self.seed,
            "order": self.order,
            "entries": [
                {
                    "w": self.layout.nest(e.w),
                    "count": e.count,
                    "objective": e.objective,
                    "mu": [float(v) for v in e.mu],
                    "first_iteration": e.first_iteration,
                }
                for e in self.entries
            ],
            "weighted_average": self.layout.nest(self.weighted_average),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict, layout: WeightLayout) -> "SolutionEnsemble":
        entries = []
        for e in doc["entries"]:
            w = layout.flatten(e["w"])
            entries.append(
                EnsembleEntry(_dedup_key(w), w, int(e["count"]), float(e["objective"]), np.asarray(e["mu"]), int(e["first_iteration"]))
            )
        return cls(int(doc["iterations"]), int(doc["seed"]), entries, layout, doc.get("order"))


def _dedup_key(w: np.ndarray) -> tuple[float, ...]:
    return tuple(float(v) for v in np.round(w, DEDUP_DECIMALS) + 0.0)


def weighted_average(ensemble: SolutionEnsemble) -> np.ndarray:
    if not ensemble.entries:
        raise ValueError("empty ensemble")
    return average_of([e.w for e in ensemble.entries], [e.count for e in ensemble.entries])


def average_of(vectors: Sequence[Sequence[float]], counts: Sequence[int]) -> np.ndarray:
    """Occurrence-weighted mean of ``vectors``."""
    if len(vectors) == 0:
        raise ValueError("no vectors to average")
    v = np.asarray(vectors, dtype=float)
    c = np.asarray(counts, dtype=float)
    if c.shape != (v.shape[0],) or np.any(c < 0) or c.sum() == 0:
        raise ValueError("need one non-negative count per vector, not all zero")
    return (c[:, None] * v).sum(axis=0) / c.sum()


def _run_chunk(args) -> list[tuple[int, np.ndarray, np.ndarray, float]]:
    problem, seed, order, start, stop = args
    n = problem._crit_cols.shape[0]
    out = []
    for it in range(start, stop):
        rng = iteration_rng(seed, it)
        mu = sample_mu(rng, n) if order is None else sample_mu_ordered(rng, order)
        try:
            sol = problem.solve_full(mu)
        except Exception as exc:  # pragma: no cover - defensive
            raise SimulationError(str(exc), it) from exc
        if not sol.optimal:
            raise SimulationError(f"weighted-sum LP returned {sol.status!r}", it)
        out.append((it, mu, sol.x.copy(), sol.objective))
    return out


def mo_simulate(
    measures: MeasureTensor,
    ranking: RankingChain,
    config: DisaggConfig,
    fitted: ValueModel,
    iterations: int = 1000,
    seed: int = 42,
    order: Sequence[int] | None = None,
    workers: int = 1,
    keep_trace: bool = False,
) -> SolutionEnsemble:
    """Monte Carlo weighted-sum simulation.

    Each iteration draws its weights from a stream keyed by ``(seed, i)`` and
    the results are reduced in iteration order, so the ensemble does not
    depend on ``workers``.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    problem = MOProblem(measures, ranking, config, fitted)
    order = None if order is None else list(order)
    if order is not None and sorted(order) != list(range(len(measures.criteria))):
        raise ValueError("order must be a permutation of the criterion indices")

    if workers <= 1:
        raw = _run_chunk((problem, seed, order, 0, iterations))
    else:
        bounds = np.linspace(0, iterations, workers + 1).astype(int)
        jobs = [(problem, seed, order, int(a), int(b)) for a, b in zip(bounds, bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = [r for chunk in pool.map(_run_chunk, jobs) for r in chunk]

    total = problem.layout.total
    entries: list[EnsembleEntry] = []
    by_key: dict[tuple[float, ...], int] = {}
    trace = []
    for it, mu, x, obj in raw:
        w = x[:total]
        key = _dedup_key(w)
        idx = by_key.get(key)
        if idx is None:
            for n_e, e in enumerate(entries):
                if np.max(np.abs(e.w - w)) <= DEDUP_TOL:
                    idx = n_e
                    break
        if idx is None:
            idx = len(entries)
            entries.append(EnsembleEntry(key, w.copy(), 0, obj, mu, it))
        by_key[key] = idx
        entries[idx].count += 1
        if keep_trace:
            trace.append(IterationRecord(it, mu, idx, obj, x))
    names = None if order is None else [measures.criteria[j] for j in order]
    return SolutionEnsemble(iterations, seed, entries, problem.layout, names, trace)
