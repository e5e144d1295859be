"""Brute-force reference solvers shared by the test modules."""

import itertools

import numpy as np

from orderfill.lpsolve import LpProblem


def lp_vertices(p: LpProblem) -> list[np.ndarray]:
    """Every basic feasible point of {A x <= b, 0 <= x <= upper}."""
    n = p.num_vars
    rows = [p.A[i] for i in range(p.A.shape[0])]
    rhs = list(p.b)
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        rows.append(-e)
        rhs.append(0.0)
        if np.isfinite(p.upper[i]):
            rows.append(e)
            rhs.append(p.upper[i])
    G, h = np.array(rows), np.array(rhs)
    out = []
    for active in itertools.combinations(range(len(rows)), n):
        sub = G[list(active)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        x = np.linalg.solve(sub, h[list(active)])
        if np.all(G @ x <= h + 1e-9):
            out.append(x)
    return out


def vertex_enumeration(p: LpProblem) -> float:
    """Best objective over all basic feasible points."""
    return max((float(p.c @ x) for x in lp_vertices(p)), default=-np.inf)


def optimal_vertices(p: LpProblem, tol: float = 1e-9) -> list[np.ndarray]:
    pts = lp_vertices(p)
    best = max(float(p.c @ x) for x in pts)
    return [x for x in pts if float(p.c @ x) >= best - tol]
