"""Independent reference computations used by the test-suite.

Nothing here imports the package under test.
"""

from __future__ import annotations

import itertools

import numpy as np


def enumerate_vertices(A, rel, b, n):
    """All feasible basic points of {x >= 0, A x (rel) b} by brute force.

    Every vertex of the polyhedron is the unique solution of some ``n``
    linearly independent active constraints taken from the rows and the
    non-negativity bounds.
    """
    A = np.asarray(A, dtype=float).reshape(-1, n)
    b = np.asarray(b, dtype=float)
    hyper = [(A[i], b[i]) for i in range(len(b))]
    hyper += [(np.eye(n)[i], 0.0) for i in range(n)]
    pts = []
    for combo in itertools.combinations(range(len(hyper)), n):
        M = np.array([hyper[i][0] for i in combo])
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, np.array([hyper[i][1] for i in combo]))
        if np.any(x < -1e-9):
            continue
        lhs = A @ x
        ok = True
        for i, r in enumerate(rel):
            if r == "<=" and lhs[i] > b[i] + 1e-9:
                ok = False
            elif r == ">=" and lhs[i] < b[i] - 1e-9:
                ok = False
            elif r == "=" and abs(lhs[i] - b[i]) > 1e-9:
                ok = False
        if ok:
            pts.append(x)
    return pts


def brute_force_lp(c, A, rel, b, sense="min"):
    """Optimal objective over the vertices, or None if there are none."""
    n = len(c)
    pts = enumerate_vertices(A, rel, b, n)
    if not pts:
        return None
    vals = [float(np.dot(c, p)) for p in pts]
    return min(vals) if sense == "min" else max(vals)


def ols_slope(series):
    """Closed-form slope against t = 1..T, written out longhand."""
    T = len(series)
    t_bar = (T + 1) / 2.0
    p_bar = sum(series) / T
    num = 0.0
    den = 0.0
    for t, p in enumerate(series, start=1):
        num += (p - p_bar) * (t - t_bar)
        den += (t - t_bar) ** 2
    return num / den


def arithmetic_mean(series):
    total = 0.0
    for p in series:
        total += p
    return total / len(series)


def kendall_by_pairs(a, b):
    pos_b = {x: i for i, x in enumerate(b)}
    conc = disc = 0
    for i in range(len(a)):
        for j in range(i + 1, len(a)):
            if pos_b[a[i]] < pos_b[a[j]]:
                conc += 1
            else:
                disc += 1
    return (conc - disc) / (len(a) * (len(a) - 1) / 2)
