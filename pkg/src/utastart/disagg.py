"""UTA / UTASTAR / UTASTAR-T disaggregation programs and fitted value models.

Decision variables are the step weights ``w[k][j][l]``: the increase of the
marginal value of criterion ``j`` under measure ``k`` between breakpoints
``l`` and ``l + 1``.  Monotonicity is therefore just ``w >= 0``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import lp as lpmod
from .lp import EQ, GE, LinearProgram
from .timeseries import MeasureTensor, ScaleGrid, ScalePolicy, locate

UTA = "UTA"
UTASTAR = "UTASTAR"
UTASTAR_T = "UTASTAR-T"
VARIANTS = (UTA, UTASTAR, UTASTAR_T)

STRICT = ">"
INDIFFERENT = "~"

TIE_TOL = 1e-9
SCHEMA_VERSION = 1


class RankingParseError(ValueError):
    def __init__(self, message: str, column: int):
        super().__init__(f"{message} (column {column})")
        self.column = column


class FitError(RuntimeError):
    """The disaggregation LP did not solve; cannot happen for well-formed input."""


@dataclass(frozen=True)
class RankingChain:
    """Weak order over reference alternatives, best first.

    ``relations[i]`` links ``alternatives[i]`` and ``alternatives[i + 1]``.
    """

    alternatives: tuple[str, ...]
    relations: tuple[str, ...]

    def __post_init__(self):
        if len(self.alternatives) < 2:
            raise ValueError("a ranking needs at least 2 alternatives")
        if len(set(self.alternatives)) != len(self.alternatives):
            raise ValueError("alternative listed twice in ranking")
        if len(self.relations) != len(self.alternatives) - 1:
            raise ValueError("need one relation between each consecutive pair")
        bad = set(self.relations) - {STRICT, INDIFFERENT}
        if bad:
            raise ValueError(f"unknown relation(s) {sorted(bad)}")

    @classmethod
    def strict(cls, alternatives: Sequence[str]) -> "RankingChain":
        alts = tuple(alternatives)
        return cls(alts, (STRICT,) * (len(alts) - 1))

    @classmethod
    def parse(cls, text: str) -> "RankingChain":
        """Parse ``MY > RU ~ TR``.  Errors carry a 1-based column."""
        pieces = [(m.group(), m.start() + 1) for m in re.finditer(r"[>~]|[^\s>~]+", text)]
        if not pieces:
            raise RankingParseError("empty ranking", 1)
        alts, rels = [], []
        expect_id = True
        for tok, col in pieces:
            is_op = tok in (STRICT, INDIFFERENT)
            if expect_id and is_op:
                raise RankingParseError(f"expected an alternative, got {tok!r}", col)
            if not expect_id and not is_op:
                raise RankingParseError(f"expected '>' or '~', got {tok!r}", col)
            (rels if is_op else alts).append(tok)
            expect_id = is_op
        if expect_id:
            raise RankingParseError("ranking ends with an operator", pieces[-1][1])
        try:
            return cls(tuple(alts), tuple(rels))
        except ValueError as exc:
            raise RankingParseError(str(exc), 1) from None

    def __str__(self):
        out = [self.alternatives[0]]
        for r, a in zip(self.relations, self.alternatives[1:]):
            out += [r, a]
        return " ".join(out)

    def pairs(self):
        return zip(self.alternatives, self.alternatives[1:], self.relations)

    def classes(self) -> list[list[str]]:
        groups = [[self.alternatives[0]]]
        for _, b, r in self.pairs():
            if r == INDIFFERENT:
                groups[-1].append(b)
            else:
                groups.append([b])
        return groups


@dataclass(frozen=True)
class DisaggConfig:
    delta: float = 0.05
    epsilon: float = 1e-6
    gamma: float = 0.01
    variant: str = UTASTAR_T

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if self.epsilon < 0 or self.gamma < 0:
            raise ValueError("epsilon and gamma must be >= 0")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")

    def to_dict(self) -> dict:
        return {"delta": self.delta, "epsilon": self.epsilon, "gamma": self.gamma, "variant": self.variant}


def weight_name(measures: MeasureTensor, k: int, j: int, l: int) -> str:
    return f"w[{measures.measures[k]},{measures.criteria[j]},{l + 1}]"


@dataclass
class WeightLayout:
    """Flat indexing of the ragged ``w[k][j][l]`` array."""

    sizes: list[list[int]]  # sizes[k][j] = alpha_kj - 1
    offsets: list[list[int]] = field(init=False)
    total: int = field(init=False)

    def __post_init__(self):
        pos = 0
        self.offsets = []
        for row in self.sizes:
            off = []
            for s in row:
                off.append(pos)
                pos += s
            self.offsets.append(off)
        self.total = pos

    @classmethod
    def of(cls, measures: MeasureTensor) -> "WeightLayout":
        return cls([[g.alpha - 1 for g in row] for row in measures.scales])

    def slice(self, k: int, j: int) -> slice:
        o = self.offsets[k][j]
        return slice(o, o + self.sizes[k][j])

    def nest(self, flat: np.ndarray) -> list[list[list[float]]]:
        return [[[float(v) for v in flat[self.slice(k, j)]] for j in range(len(row))] for k, row in enumerate(self.sizes)]

    def flatten(self, nested) -> np.ndarray:
        out = np.zeros(self.total)
        for k, row in enumerate(self.sizes):
            for j, s in enumerate(row):
                vals = np.asarray(nested[k][j], dtype=float)
                if vals.shape != (s,):
                    raise ValueError(f"weights for measure {k}, criterion {j} must have {s} entries")
                out[self.slice(k, j)] = vals
        return out

    def criterion_totals(self, flat: np.ndarray) -> np.ndarray:
        """Sum of weights per criterion over all measures (``sum_k u_kj(c*)``)."""
        n = len(self.sizes[0])
        return np.array([sum(flat[self.slice(k, j)].sum() for k in range(len(self.sizes))) for j in range(n)])


def value_row(measures: MeasureTensor, layout: WeightLayout, x: np.ndarray) -> np.ndarray:
    """Coefficients of the global value of a point ``x[j, k]`` in the weights."""
    row = np.zeros(layout.total)
    for k, srow in enumerate(measures.scales):
        for j, grid in enumerate(srow):
            seg, theta = locate(grid, float(x[j, k]))
            o = layout.offsets[k][j]
            row[o : o + seg - 1] = 1.0
            row[o + seg - 1] += theta
    return row


def _check_variant(measures: MeasureTensor, config: DisaggConfig) -> None:
    if config.variant in (UTA, UTASTAR) and len(measures.measures) != 1:
        raise ValueError(f"{config.variant} works on a single static measure; got h={len(measures.measures)}")


def build_program(measures: MeasureTensor, ranking: RankingChain, config: DisaggConfig) -> LinearProgram:
    """The disaggregation LP: minimise total error subject to the ranking.

    Variable order is all weights (measure-major, then criterion, then step),
    then ``sigma+`` / ``sigma-`` per ranked alternative in ranking order.  The
    UTA variant has no ``sigma+`` columns.
    """
    _check_variant(measures, config)
    for a in ranking.alternatives:
        measures.index(a)
    layout = WeightLayout.of(measures)
    prog = LinearProgram()
    for k in range(len(measures.measures)):
        for j in range(len(measures.criteria)):
            for l in range(layout.sizes[k][j]):
                prog.add_variable(weight_name(measures, k, j, l))
    double = config.variant != UTA
    sp, sm = {}, {}
    for a in ranking.alternatives:
        if double:
            sp[a] = prog.add_variable(f"sigma+[{a}]")
        sm[a] = prog.add_variable(f"sigma-[{a}]")

    nv = prog.n_vars
    rows = {}
    for a in ranking.alternatives:
        r = np.zeros(nv)
        r[: layout.total] = value_row(measures, layout, measures.values[measures.index(a)])
        if double:
            r[sp[a]] = -1.0
        r[sm[a]] = 1.0
        rows[a] = r
    for a, b, rel in ranking.pairs():
        diff = rows[a] - rows[b]
        if rel == STRICT:
            prog.add_constraint(diff, GE, config.delta, f"pref[{a},{b}]")
        else:
            prog.add_constraint(diff, EQ, 0.0, f"indiff[{a},{b}]")
    for k, name in enumerate(measures.measures):
        r = np.zeros(nv)
        for j in range(len(measures.criteria)):
            r[layout.slice(k, j)] = 1.0
        prog.add_constraint(r, EQ, 1.0, f"norm[{name}]")
    obj = np.zeros(nv)
    obj[layout.total :] = 1.0
    prog.set_objective(obj, lpmod.MINIMIZE)
    return prog


@dataclass
class ValueModel:
    measures: list[str]
    criteria: list[str]
    scales: list[list[ScaleGrid]]
    weights: np.ndarray  # flat, see WeightLayout
    sigma_plus: dict[str, float]
    sigma_minus: dict[str, float]
    z: float
    config: DisaggConfig = field(default_factory=DisaggConfig)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (self.layout.total,):
            raise ValueError("weight vector does not match scales")

    @property
    def layout(self) -> WeightLayout:
        return WeightLayout([[g.alpha - 1 for g in row] for row in self.scales])

    def w(self, k: int, j: int) -> np.ndarray:
        return self.weights[self.layout.slice(k, j)]

    def nested_weights(self) -> list[list[list[float]]]:
        return self.layout.nest(self.weights)

    def marginal_function(self, k: int, j: int, normalized: bool = False) -> np.ndarray:
        """Cumulative values at every breakpoint, starting at 0."""
        u = np.concatenate([[0.0], np.cumsum(self.w(k, j))])
        if normalized and u[-1] > 0:
            u = u / u[-1]
        return u

    def marginal_value(self, k: int, j: int, x: float) -> float:
        seg, theta = locate(self.scales[k][j], x)
        w = self.w(k, j)
        return float(w[: seg - 1].sum() + theta * w[seg - 1])

    def global_value(self, measures: MeasureTensor, alternative: str) -> float:
        i = measures.index(alternative)
        return float(
            sum(
                self.marginal_value(k, j, float(measures.values[i, j, k]))
                for k in range(len(self.measures))
                for j in range(len(self.criteria))
            )
        )

    def global_values(self, measures: MeasureTensor) -> dict[str, float]:
        return {a: self.global_value(measures, a) for a in measures.alternatives}

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "measures": list(self.measures),
            "criteria": list(self.criteria),
            "scales": [
                [{"breakpoints": list(g.breakpoints), "policy": str(g.policy)} for g in row] for row in self.scales
            ],
            "weights": self.nested_weights(),
            "sigma_plus": dict(self.sigma_plus),
            "sigma_minus": dict(self.sigma_minus),
            "z": self.z,
            "config": self.config.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict) -> "ValueModel":
        scales = [[ScaleGrid(tuple(g["breakpoints"]), ScalePolicy.parse(g["policy"])) for g in row] for row in doc["scales"]]
        layout = WeightLayout([[g.alpha - 1 for g in row] for row in scales])
        return cls(
            list(doc["measures"]),
            list(doc["criteria"]),
            scales,
            layout.flatten(doc["weights"]),
            dict(doc["sigma_plus"]),
            dict(doc["sigma_minus"]),
            float(doc["z"]),
            DisaggConfig(**doc["config"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "ValueModel":
        return cls.from_dict(json.loads(text))


def model_from_weights(
    measures: MeasureTensor, weights, config: DisaggConfig | None = None, z: float = 0.0
) -> ValueModel:
    """Wrap a given weight vector (flat or nested ``w[k][j][l]``) as a model."""
    layout = WeightLayout.of(measures)
    arr = np.asarray(weights, dtype=float) if np.ndim(weights) == 1 and len(weights) == layout.total else layout.flatten(weights)
    zeros = {a: 0.0 for a in measures.alternatives}
    return ValueModel(
        list(measures.measures), list(measures.criteria), measures.scales, arr, dict(zeros), dict(zeros), z, config or DisaggConfig()
    )


def unpack_solution(
    measures: MeasureTensor, ranking: RankingChain, config: DisaggConfig, x: np.ndarray, z: float
) -> ValueModel:
    layout = WeightLayout.of(measures)
    x = np.where(np.abs(x) < 1e-12, 0.0, x)
    w = x[: layout.total].copy()
    rest = x[layout.total :]
    names = ranking.alternatives
    if config.variant == UTA:
        sp = {a: 0.0 for a in names}
        sm = {a: float(v) for a, v in zip(names, rest)}
    else:
        sp = {a: float(rest[2 * i]) for i, a in enumerate(names)}
        sm = {a: float(rest[2 * i + 1]) for i, a in enumerate(names)}
    return ValueModel(list(measures.measures), list(measures.criteria), measures.scales, w, sp, sm, float(z), config)


def fit(measures: MeasureTensor, ranking: RankingChain, config: DisaggConfig | None = None) -> ValueModel:
    """Solve the disaggregation LP and package the optimal vertex.

    The returned weights are one optimum among possibly many; ``z == 0``
    means the ranking is exactly representable.
    """
    config = config or DisaggConfig()
    prog = build_program(measures, ranking, config)
    sol = lpmod.solve(prog)
    if not sol.optimal:
        raise FitError(f"disaggregation LP returned status {sol.status!r}")
    return unpack_solution(measures, ranking, config, sol.x, sol.objective)


def rank_alternatives(model: ValueModel, measures: MeasureTensor, alternatives: Sequence[str] | None = None) -> list[list[str]]:
    """Equivalence classes in descending global value; values within 1e-9 tie."""
    alts = list(alternatives) if alternatives is not None else list(measures.alternatives)
    vals = {a: model.global_value(measures, a) for a in alts}
    ordered = sorted(alts, key=lambda a: (-vals[a], alts.index(a)))
    classes: list[list[str]] = []
    for a in ordered:
        if classes and abs(vals[classes[-1][0]] - vals[a]) <= TIE_TOL:
            classes[-1].append(a)
        else:
            classes.append([a])
    return classes


@dataclass(frozen=True)
class RankComparison:
    tau: float
    concordant: int
    discordant: int
    ties: int


def _positions(ranking) -> dict[str, int]:
    """Accept a flat id list, tied classes (list of lists) or a RankingChain."""
    if isinstance(ranking, RankingChain):
        ranking = ranking.classes()
    pos = {}
    for r, item in enumerate(ranking):
        group = [item] if isinstance(item, str) else list(item)
        for a in group:
            if a in pos:
                raise ValueError(f"{a!r} appears twice")
            pos[a] = r
    return pos


def compare_rankings(ranking_a, ranking_b) -> RankComparison:
    """Kendall tau over all pairs; pairs tied in either ranking count as ties."""
    pa, pb = _positions(ranking_a), _positions(ranking_b)
    if set(pa) != set(pb):
        raise ValueError("rankings cover different alternatives")
    ids = sorted(pa)
    n = len(ids)
    if n < 2:
        raise ValueError("need at least 2 alternatives")
    conc = disc = ties = 0
    for x in range(n):
        for y in range(x + 1, n):
            da = pa[ids[x]] - pa[ids[y]]
            db = pb[ids[x]] - pb[ids[y]]
            if da == 0 or db == 0:
                ties += 1
            elif (da > 0) == (db > 0):
                conc += 1
            else:
                disc += 1
    return RankComparison((conc - disc) / (n * (n - 1) / 2), conc, disc, ties)


def kendall_tau(ranking_a, ranking_b) -> float:
    return compare_rankings(ranking_a, ranking_b).tau
