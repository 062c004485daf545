"""Dense linear programs and a two-phase tableau simplex.

Sized for the small programs the disaggregation code generates (tens of
variables and rows).  Bland's rule is used throughout, so a given program
always follows the same pivot path and returns the same vertex.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

LE, EQ, GE = "<=", "=", ">="
MINIMIZE, MAXIMIZE = "min", "max"

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL = "numerical_failure"

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-11


@dataclass
class Constraint:
    coeffs: np.ndarray
    relation: str
    rhs: float
    name: str = ""


@dataclass
class LinearProgram:
    """Variables are non-negative, optionally bounded above."""

    variables: list[str] = field(default_factory=list)
    upper: list[float | None] = field(default_factory=list)
    objective: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sense: str = MINIMIZE
    constraints: list[Constraint] = field(default_factory=list)

    def __post_init__(self):
        self._index = {v: i for i, v in enumerate(self.variables)}

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def add_variable(self, name: str, upper: float | None = None) -> int:
        if name in self._index:
            raise ValueError(f"duplicate variable {name!r}")
        if self.constraints:
            raise ValueError("declare all variables before adding constraints")
        self._index[name] = len(self.variables)
        self.variables.append(name)
        self.upper.append(upper)
        self.objective = np.append(self.objective, 0.0)
        return self._index[name]

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}") from None

    def _row(self, coeffs: Mapping[str, float] | Sequence[float] | np.ndarray) -> np.ndarray:
        if isinstance(coeffs, Mapping):
            row = np.zeros(self.n_vars)
            for name, c in coeffs.items():
                row[self.index(name)] += c
        else:
            row = np.array(coeffs, dtype=float)
            if row.shape != (self.n_vars,):
                raise ValueError(f"coefficient row must have length {self.n_vars}")
        if not np.all(np.isfinite(row)):
            raise ValueError("non-finite coefficient")
        return row

    def add_constraint(self, coeffs, relation: str, rhs: float, name: str = "") -> None:
        if relation not in (LE, EQ, GE):
            raise ValueError(f"bad relation {relation!r}")
        if not np.isfinite(rhs):
            raise ValueError("non-finite right-hand side")
        self.constraints.append(Constraint(self._row(coeffs), relation, float(rhs), name))

    def set_objective(self, coeffs, sense: str = MINIMIZE) -> None:
        if sense not in (MINIMIZE, MAXIMIZE):
            raise ValueError(f"bad sense {sense!r}")
        self.objective = self._row(coeffs)
        self.sense = sense

    def copy(self) -> "LinearProgram":
        return LinearProgram(
            list(self.variables),
            list(self.upper),
            self.objective.copy(),
            self.sense,
            [Constraint(c.coeffs.copy(), c.relation, c.rhs, c.name) for c in self.constraints],
        )

    def with_objective(self, coeffs, sense: str = MINIMIZE) -> "LinearProgram":
        """Shallow copy sharing constraint rows, with a new objective."""
        lp = LinearProgram(list(self.variables), list(self.upper), self.objective, self.sense, list(self.constraints))
        lp.set_objective(coeffs, sense)
        return lp

    def dump(self, names: bool = True) -> str:
        """Human-readable listing; with ``names=False`` variables become ``x0, x1, ...``."""
        label = (lambda i: self.variables[i]) if names else (lambda i: f"x{i}")

        def expr(row):
            terms = [f"{c:+.17g} {label(i)}" for i, c in enumerate(row) if c != 0.0]
            return " ".join(terms) if terms else "0"

        lines = [f"{self.sense} {expr(self.objective)}", "subject to"]
        for k, c in enumerate(self.constraints):
            tag = (c.name if names and c.name else f"r{k}") + ": "
            lines.append(f"  {tag}{expr(c.coeffs)} {c.relation} {c.rhs:.17g}")
        lines.append("bounds")
        for i, ub in enumerate(self.upper):
            lines.append(f"  0 <= {label(i)}" + ("" if ub is None else f" <= {ub:.17g}"))
        return "\n".join(lines) + "\n"


@dataclass
class LpSolution:
    status: str
    objective: float = float("nan")
    x: np.ndarray | None = None
    variables: list[str] = field(default_factory=list)
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    @property
    def assignment(self) -> dict[str, float]:
        if self.x is None:
            return {}
        return dict(zip(self.variables, (float(v) for v in self.x)))


def _rows(lp: LinearProgram):
    """All constraints including upper bounds, as (row, relation, rhs) lists."""
    rows = [(c.coeffs, c.relation, c.rhs) for c in lp.constraints]
    for i, ub in enumerate(lp.upper):
        if ub is not None:
            e = np.zeros(lp.n_vars)
            e[i] = 1.0
            rows.append((e, LE, float(ub)))
    return rows


def check_feasible(lp: LinearProgram, assignment, tol: float = FEAS_TOL) -> tuple[bool, float]:
    """Return ``(feasible, worst_violation)``.

    Violations are measured relative to each row's scale (largest absolute
    coefficient or right-hand side, at least 1).  ``assignment`` is a mapping
    of variable names or a full-length vector.
    """
    if isinstance(assignment, Mapping):
        unknown = set(assignment) - set(lp.variables)
        if unknown:
            raise KeyError(f"unknown variables in assignment: {sorted(unknown)}")
        missing = set(lp.variables) - set(assignment)
        if missing:
            raise KeyError(f"assignment missing variables: {sorted(missing)}")
        x = np.array([assignment[v] for v in lp.variables], dtype=float)
    else:
        x = np.asarray(assignment, dtype=float)
        if x.shape != (lp.n_vars,):
            raise ValueError(f"assignment must have length {lp.n_vars}")
    worst = max(0.0, float(-x.min())) if x.size else 0.0
    for row, rel, rhs in _rows(lp):
        scale = max(1.0, float(np.abs(row).max(initial=0.0)), abs(rhs))
        lhs = float(row @ x)
        if rel == LE:
            viol = lhs - rhs
        elif rel == GE:
            viol = rhs - lhs
        else:
            viol = abs(lhs - rhs)
        worst = max(worst, viol / scale)
    return worst <= tol, worst


class _Tableau:
    """Row-major tableau ``[A | b]`` with an explicit basis list."""

    def __init__(self, A: np.ndarray, b: np.ndarray, basis: list[int]):
        self.T = np.hstack([A, b[:, None]])
        self.basis = basis
        self.pivots = 0

    def pivot(self, r: int, c: int) -> None:
        T = self.T
        T[r] /= T[r, c]
        col = T[:, c].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        T[np.abs(T) < 1e-14] = 0.0
        self.basis[r] = c
        self.pivots += 1

    def reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        return cost - cost[self.basis] @ self.T[:, :-1]

    def run(self, cost: np.ndarray, allowed: np.ndarray, max_iter: int) -> str:
        """Minimise ``cost @ x`` over the current tableau with Bland's rule."""
        T = self.T
        while True:
            if self.pivots > max_iter:
                return NUMERICAL
            reduced = self.reduced_costs(cost)
            candidates = np.flatnonzero((reduced < -OPT_TOL) & allowed)
            if candidates.size == 0:
                return OPTIMAL
            c = int(candidates[0])
            col = T[:, c]
            pos = np.flatnonzero(col > PIVOT_TOL)
            if pos.size == 0:
                return UNBOUNDED
            ratios = T[pos, -1] / col[pos]
            best = ratios.min()
            ties = pos[ratios <= best + 1e-12 * max(1.0, abs(best))]
            # Bland: leaving row is the one whose basic variable has the smallest index
            r = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(r, c)


def solve(lp: LinearProgram, tie_break: Sequence[np.ndarray] = (), max_iter: int | None = None) -> LpSolution:
    """Two-phase simplex.  Status is one of optimal / infeasible / unbounded / numerical_failure.

    ``tie_break`` is a sequence of secondary cost vectors, minimised in turn
    over the optimal face of everything before them (lexicographic simplex).
    Only columns with zero reduced cost may enter, so the primary objective
    value does not move.  With a generic tie-break the returned vertex depends
    only on the optimal face, not on the pivot path that reached it.
    """
    n = lp.n_vars
    rows = _rows(lp)
    m = len(rows)
    sign = 1.0 if lp.sense == MINIMIZE else -1.0
    cost_x = sign * lp.objective

    if m == 0:
        if np.any(cost_x < -OPT_TOL):
            return LpSolution(UNBOUNDED, variables=list(lp.variables))
        x = np.zeros(n)
        return LpSolution(OPTIMAL, float(lp.objective @ x), x, list(lp.variables))

    # standard form: every row scaled to unit max coefficient, rhs >= 0
    A = np.zeros((m, n))
    b = np.zeros(m)
    rels = []
    for i, (row, rel, rhs) in enumerate(rows):
        scale = float(np.abs(row).max(initial=0.0))
        if scale == 0.0:
            scale = 1.0
        row, rhs = row / scale, rhs / scale
        if rhs < 0:
            row, rhs = -row, -rhs
            rel = {LE: GE, GE: LE, EQ: EQ}[rel]
        A[i], b[i] = row, rhs
        rels.append(rel)

    n_slack = sum(rel != EQ for rel in rels)
    n_art = sum(rel != LE for rel in rels)
    total = n + n_slack + n_art
    full = np.zeros((m, total))
    full[:, :n] = A
    basis = [0] * m
    s = n
    a = n + n_slack
    art_cols = []
    for i, rel in enumerate(rels):
        if rel == LE:
            full[i, s] = 1.0
            basis[i] = s
            s += 1
        elif rel == GE:
            full[i, s] = -1.0
            s += 1
            full[i, a] = 1.0
            basis[i] = a
            art_cols.append(a)
            a += 1
        else:
            full[i, a] = 1.0
            basis[i] = a
            art_cols.append(a)
            a += 1

    if max_iter is None:
        max_iter = 50 * (m + total) + 1000
    tab = _Tableau(full, b, basis)
    is_art = np.zeros(total, dtype=bool)
    is_art[art_cols] = True

    if art_cols:
        cost1 = np.zeros(total)
        cost1[is_art] = 1.0
        status = tab.run(cost1, np.ones(total, dtype=bool), max_iter)
        if status == NUMERICAL:
            return LpSolution(NUMERICAL, variables=list(lp.variables), iterations=tab.pivots)
        infeas = float(tab.T[[i for i, j in enumerate(tab.basis) if is_art[j]], -1].sum())
        if infeas > FEAS_TOL * max(1.0, float(b.max(initial=0.0))):
            return LpSolution(INFEASIBLE, variables=list(lp.variables), iterations=tab.pivots)
        # drive remaining (zero-level) artificials out of the basis
        redundant = []
        for r in range(m):
            if not is_art[tab.basis[r]]:
                continue
            row = tab.T[r, :total]
            cand = np.flatnonzero((np.abs(row) > 1e-9) & ~is_art)
            if cand.size:
                tab.pivot(r, int(cand[0]))
            else:
                redundant.append(r)
        if redundant:
            keep = [r for r in range(m) if r not in redundant]
            tab.T = tab.T[keep]
            tab.basis = [tab.basis[r] for r in keep]

    cost2 = np.zeros(total)
    cost2[:n] = cost_x
    allowed = ~is_art
    status = tab.run(cost2, allowed, max_iter)
    if status != OPTIMAL:
        return LpSolution(status, variables=list(lp.variables), iterations=tab.pivots)
    cost = cost2
    for extra in tie_break:
        extra = np.asarray(extra, dtype=float)
        if extra.shape != (n,):
            raise ValueError(f"tie-break vector must have length {n}")
        allowed = allowed & (np.abs(tab.reduced_costs(cost)) <= OPT_TOL)
        cost = np.zeros(total)
        cost[:n] = extra
        if tab.run(cost, allowed, max_iter) != OPTIMAL:
            # bounded face: only a numerical breakdown can get here
            return LpSolution(NUMERICAL, variables=list(lp.variables), iterations=tab.pivots)

    xfull = np.zeros(total)
    xfull[tab.basis] = tab.T[:, -1]
    x = xfull[:n]
    x[np.abs(x) < 1e-13] = 0.0
    ok, worst = check_feasible(lp, x)
    if not ok:
        return LpSolution(NUMERICAL, variables=list(lp.variables), iterations=tab.pivots)
    return LpSolution(OPTIMAL, float(lp.objective @ x), x, list(lp.variables), tab.pivots)
