"""Time-series tensor, descriptive measures and evaluation scales.

The raw input is a dense ``m x n x T`` tensor of performances.  Each
(alternative, criterion) series is summarised by one or more descriptive
measures (mean, OLS slope), giving an ``m x n x h`` measure tensor.  Every
(measure, criterion) pair then gets its own breakpoint grid.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

MAXIMIZE = "max"
MINIMIZE = "min"

OBSERVED = "observed"
EQUAL_INTERVAL = "equal"


class TensorError(ValueError):
    """Malformed time-series input."""


class ScaleError(ValueError):
    """A scale grid cannot be built or queried."""


@dataclass(frozen=True)
class CriterionSpec:
    id: str
    direction: str = MAXIMIZE

    def __post_init__(self):
        if self.direction not in (MAXIMIZE, MINIMIZE):
            raise ValueError(f"criterion {self.id!r}: direction must be 'max' or 'min', got {self.direction!r}")


@dataclass(frozen=True)
class ScalePolicy:
    """How breakpoints are chosen: observed distinct values or ``alpha`` equal steps."""

    kind: str = OBSERVED
    alpha: int | None = None

    def __post_init__(self):
        if self.kind == OBSERVED:
            if self.alpha is not None:
                raise ValueError("observed-values policy takes no alpha")
        elif self.kind == EQUAL_INTERVAL:
            if self.alpha is None or self.alpha < 2:
                raise ValueError("equal-interval policy needs alpha >= 2")
        else:
            raise ValueError(f"unknown scale policy {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "ScalePolicy":
        """Parse ``observed`` or ``equal:<alpha>``."""
        text = text.strip()
        if text == OBSERVED:
            return cls()
        if text.startswith(EQUAL_INTERVAL + ":"):
            try:
                alpha = int(text.split(":", 1)[1])
            except ValueError:
                raise ValueError(f"bad scale policy {text!r}") from None
            return cls(EQUAL_INTERVAL, alpha)
        raise ValueError(f"bad scale policy {text!r}; expected 'observed' or 'equal:<alpha>'")

    def __str__(self):
        return OBSERVED if self.kind == OBSERVED else f"{EQUAL_INTERVAL}:{self.alpha}"


@dataclass(frozen=True)
class ScaleGrid:
    breakpoints: tuple[float, ...]
    policy: ScalePolicy = field(default_factory=ScalePolicy)

    def __post_init__(self):
        bp = self.breakpoints
        if len(bp) < 2:
            raise ScaleError("a scale needs at least 2 breakpoints")
        if any(b <= a for a, b in zip(bp, bp[1:])):
            raise ScaleError("breakpoints must be strictly increasing")

    @property
    def alpha(self) -> int:
        return len(self.breakpoints)

    @property
    def worst(self) -> float:
        return self.breakpoints[0]

    @property
    def best(self) -> float:
        return self.breakpoints[-1]

    def locate(self, x: float) -> tuple[int, float]:
        return locate(self, x)


@dataclass
class TimeSeriesTensor:
    alternatives: list[str]
    criteria: list[CriterionSpec]
    values: np.ndarray  # shape (m, n, T)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        m, n = len(self.alternatives), len(self.criteria)
        if self.values.ndim != 3 or self.values.shape[:2] != (m, n):
            raise TensorError(f"values must have shape ({m}, {n}, T), got {self.values.shape}")
        if self.values.shape[2] < 2:
            raise TensorError("need at least 2 time samples")
        if m < 1 or n < 1:
            raise TensorError("need at least one alternative and one criterion")
        if len(set(self.alternatives)) != m:
            raise TensorError("duplicate alternative identifier")
        if len({c.id for c in self.criteria}) != n:
            raise TensorError("duplicate criterion identifier")
        if not np.all(np.isfinite(self.values)):
            raise TensorError("non-finite value in tensor")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    @property
    def criterion_ids(self) -> list[str]:
        return [c.id for c in self.criteria]

    def series(self, alternative: str, criterion: str) -> np.ndarray:
        i = self.alternatives.index(alternative)
        j = self.criterion_ids.index(criterion)
        return self.values[i, j]

    def with_directions(self, directions: Mapping[str, str]) -> "TimeSeriesTensor":
        unknown = set(directions) - set(self.criterion_ids)
        if unknown:
            raise TensorError(f"direction given for unknown criteria: {sorted(unknown)}")
        crit = [CriterionSpec(c.id, directions.get(c.id, c.direction)) for c in self.criteria]
        return TimeSeriesTensor(list(self.alternatives), crit, self.values.copy())


def load_tensor(
    source: str | Path | Iterable[Mapping[str, str]],
    directions: Mapping[str, str] | None = None,
) -> TimeSeriesTensor:
    """Build a dense tensor from ``alternative,criterion,t,value`` records.

    ``source`` is a CSV path or an iterable of dict-like records.  Alternatives
    and criteria keep their first-appearance order; ``t`` is 1-based and must
    cover ``1..T`` for every (alternative, criterion) pair.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            records = list(csv.DictReader(fh))
    else:
        records = list(source)

    alts: dict[str, None] = {}
    crits: dict[str, None] = {}
    cells: dict[tuple[str, str, int], float] = {}
    for lineno, rec in enumerate(records, start=2):
        try:
            a, c, t_raw, v_raw = (str(rec[k]).strip() for k in ("alternative", "criterion", "t", "value"))
        except KeyError as exc:
            raise TensorError(f"record {lineno}: missing field {exc.args[0]!r}") from None
        try:
            t = int(t_raw)
        except ValueError:
            raise TensorError(f"record {lineno}: t must be an integer, got {t_raw!r}") from None
        try:
            v = float(v_raw)
        except ValueError:
            raise TensorError(f"record {lineno}: non-numeric value {v_raw!r}") from None
        if not math.isfinite(v):
            raise TensorError(f"record {lineno}: non-finite value {v_raw!r}")
        if t < 1:
            raise TensorError(f"record {lineno}: t must be >= 1")
        key = (a, c, t)
        if key in cells:
            raise TensorError(f"record {lineno}: duplicate cell ({a}, {c}, t={t})")
        cells[key] = v
        alts.setdefault(a)
        crits.setdefault(c)

    if not cells:
        raise TensorError("no records")
    T = max(t for _, _, t in cells)
    if T < 2:
        raise TensorError("need at least 2 time samples")
    alt_ids, crit_ids = list(alts), list(crits)
    values = np.empty((len(alt_ids), len(crit_ids), T))
    for i, a in enumerate(alt_ids):
        for j, c in enumerate(crit_ids):
            for t in range(1, T + 1):
                try:
                    values[i, j, t - 1] = cells[(a, c, t)]
                except KeyError:
                    raise TensorError(f"missing cell ({a}, {c}, t={t})") from None
    directions = directions or {}
    unknown = set(directions) - set(crit_ids)
    if unknown:
        raise TensorError(f"direction given for unknown criteria: {sorted(unknown)}")
    criteria = [CriterionSpec(c, directions.get(c, MAXIMIZE)) for c in crit_ids]
    return TimeSeriesTensor(alt_ids, criteria, values)


def tensor_to_csv(tensor: TimeSeriesTensor) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alternative", "criterion", "t", "value"])
    for i, a in enumerate(tensor.alternatives):
        for j, c in enumerate(tensor.criterion_ids):
            for t, v in enumerate(tensor.values[i, j], start=1):
                w.writerow([a, c, t, repr(float(v))])
    return buf.getvalue()


def mean_measure(series: Sequence[float]) -> float:
    s = np.asarray(series, dtype=float)
    if s.size == 0:
        raise ValueError("mean of an empty series")
    return float(s.mean())


def slope_measure(series: Sequence[float]) -> float:
    """OLS slope of the series against the time index ``t = 1..T``."""
    s = np.asarray(series, dtype=float)
    if s.size < 2:
        raise ValueError("slope needs at least 2 samples")
    t = np.arange(1, s.size + 1, dtype=float)
    dt = t - t.mean()
    return float(np.dot(s - s.mean(), dt) / np.dot(dt, dt))


MEASURES: dict[str, Callable[[Sequence[float]], float]] = {
    "mean": mean_measure,
    "slope": slope_measure,
}


def build_scale(values: Sequence[float], policy: ScalePolicy | None = None) -> ScaleGrid:
    policy = policy or ScalePolicy()
    v = np.asarray(values, dtype=float)
    distinct = np.unique(v)
    if distinct.size < 2:
        raise ScaleError("degenerate scale: fewer than 2 distinct values")
    if policy.kind == OBSERVED:
        bp = tuple(float(x) for x in distinct)
    else:
        lo, hi = float(distinct[0]), float(distinct[-1])
        bp = tuple(float(x) for x in np.linspace(lo, hi, policy.alpha))
        # linspace endpoints are exact, but keep them pinned to the data
        bp = (lo,) + bp[1:-1] + (hi,)
    return ScaleGrid(bp, policy)


def locate(grid: ScaleGrid, x: float) -> tuple[int, float]:
    """Return ``(segment, theta)`` with ``x = c[seg] + theta * (c[seg+1] - c[seg])``.

    Segments are 1-based, ``1 <= seg <= alpha - 1``.  The right endpoint maps to
    ``(alpha - 1, 1.0)``.
    """
    bp = grid.breakpoints
    if not (bp[0] <= x <= bp[-1]):
        raise ScaleError(f"value {x!r} outside scale [{bp[0]!r}, {bp[-1]!r}]")
    if x == bp[-1]:
        return len(bp) - 1, 1.0
    seg = int(np.searchsorted(bp, x, side="right"))  # bp[seg-1] <= x < bp[seg]
    lo, hi = bp[seg - 1], bp[seg]
    return seg, (x - lo) / (hi - lo)


@dataclass
class MeasureTensor:
    alternatives: list[str]
    criteria: list[str]
    measures: list[str]
    values: np.ndarray  # shape (m, n, h)
    scales: list[list[ScaleGrid]]  # scales[k][j]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        m, n, h = len(self.alternatives), len(self.criteria), len(self.measures)
        if h < 1:
            raise ValueError("need at least one measure")
        if self.values.shape != (m, n, h):
            raise ValueError(f"values must have shape ({m}, {n}, {h}), got {self.values.shape}")
        if len(self.scales) != h or any(len(row) != n for row in self.scales):
            raise ValueError("need one scale per (measure, criterion)")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    def index(self, alternative: str) -> int:
        try:
            return self.alternatives.index(alternative)
        except ValueError:
            raise KeyError(f"unknown alternative {alternative!r}") from None

    def value(self, alternative: str, k: int, j: int) -> float:
        return float(self.values[self.index(alternative), j, k])

    @classmethod
    def from_static(
        cls,
        alternatives: Sequence[str],
        criteria: Sequence[str],
        performances: np.ndarray,
        policy: ScalePolicy | None = None,
        measure: str = "value",
    ) -> "MeasureTensor":
        """Single-measure tensor from a static ``m x n`` performance table."""
        perf = np.asarray(performances, dtype=float)
        values = perf[:, :, None]
        scales = [[build_scale(values[:, j, 0], policy) for j in range(len(criteria))]]
        return cls(list(alternatives), list(criteria), [measure], values, scales)


def extract_measures(
    tensor: TimeSeriesTensor,
    measures: Sequence[str] = ("mean", "slope"),
    policy: ScalePolicy | None = None,
) -> MeasureTensor:
    if not measures:
        raise ValueError("need at least one measure")
    for name in measures:
        if name not in MEASURES:
            raise ValueError(f"unknown measure {name!r}; available: {sorted(MEASURES)}")
    m, n, _ = tensor.shape
    sign = np.array([-1.0 if c.direction == MINIMIZE else 1.0 for c in tensor.criteria])
    raw = tensor.values * sign[None, :, None]
    out = np.empty((m, n, len(measures)))
    for k, name in enumerate(measures):
        fn = MEASURES[name]
        for i in range(m):
            for j in range(n):
                out[i, j, k] = fn(raw[i, j])
    scales = []
    for k, name in enumerate(measures):
        row = []
        for j, c in enumerate(tensor.criterion_ids):
            try:
                row.append(build_scale(out[:, j, k], policy))
            except ScaleError as exc:
                raise ScaleError(f"measure {name!r}, criterion {c!r}: {exc}") from None
        scales.append(row)
    return MeasureTensor(list(tensor.alternatives), tensor.criterion_ids, list(measures), out, scales)
