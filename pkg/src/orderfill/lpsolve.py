"""Small dense LP solver with a duality certificate, plus the packing LP used for look-ahead.

Two solvers share the look-ahead problem: ``solve_lp`` (tableau simplex, Bland's rule)
is the reference; ``nested_greedy_batch`` exploits the staircase capacity structure and
is what the simulator calls millions of times. Both report a duality gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import ProblemSpec

FEAS_TOL = 1e-9
GAP_TOL = 1e-8
PIVOT_TOL = 1e-12
MAX_ITER = 10_000


class LpError(RuntimeError):
    def __init__(self, message: str, dump: str = ""):
        super().__init__(message + ("\n" + dump if dump else ""))
        self.dump = dump


@dataclass(frozen=True)
class LpProblem:
    """maximize c.x  subject to  A x <= b,  0 <= x <= upper."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.float64).ravel()
        A = np.asarray(self.A, dtype=np.float64).reshape(-1, c.size)
        b = np.asarray(self.b, dtype=np.float64).ravel()
        u = np.asarray(self.upper, dtype=np.float64).ravel()
        if u.size != c.size or b.size != A.shape[0]:
            raise ValueError("inconsistent LP dimensions")
        if np.any(b < 0):
            raise ValueError("right-hand sides must be nonnegative (origin feasible)")
        if np.any(u < 0):
            raise ValueError("upper bounds must be nonnegative")
        for name, v in (("c", c), ("A", A), ("b", b), ("upper", u)):
            object.__setattr__(self, name, v)

    @property
    def num_vars(self) -> int:
        return self.c.size

    def dump(self) -> str:
        def term(coef, i):
            return f"{coef:+.17g} x{i}"

        lines = ["maximize", "  obj: " + " ".join(term(v, i) for i, v in enumerate(self.c)), "subject to"]
        for r, (row, rhs) in enumerate(zip(self.A, self.b)):
            body = " ".join(term(v, i) for i, v in enumerate(row) if v != 0) or "0"
            lines.append(f"  r{r}: {body} <= {rhs:.17g}")
        lines.append("bounds")
        for i, u in enumerate(self.upper):
            lines.append(f"  0 <= x{i} <= {u:.17g}" if math.isfinite(u) else f"  0 <= x{i}")
        return "\n".join(lines)


@dataclass(frozen=True)
class LpSolution:
    x: np.ndarray
    duals: np.ndarray  # one per row of A
    bound_duals: np.ndarray  # one per variable (zero where the bound is infinite)
    reduced_costs: np.ndarray  # c - A^T y
    objective: float
    dual_objective: float
    duality_gap: float
    iterations: int
    primal_violation: float
    dual_violation: float

    @property
    def certified(self) -> bool:
        return (self.primal_violation <= FEAS_TOL and self.dual_violation <= FEAS_TOL
                and abs(self.duality_gap) <= GAP_TOL * (1 + abs(self.objective)))


def solve_lp(p: LpProblem) -> LpSolution:
    """Primal simplex from the slack basis; Bland's rule fixes every pivot."""
    n = p.num_vars
    bounded = np.flatnonzero(np.isfinite(p.upper))
    rows = [p.A]
    rhs = [p.b]
    if bounded.size:
        B = np.zeros((bounded.size, n))
        B[np.arange(bounded.size), bounded] = 1.0
        rows.append(B)
        rhs.append(p.upper[bounded])
    Afull = np.vstack(rows) if rows else np.zeros((0, n))
    bfull = np.concatenate(rhs)
    m = Afull.shape[0]

    tab = np.zeros((m, n + m + 1))
    tab[:, :n] = Afull
    tab[:, n:n + m] = np.eye(m)
    tab[:, -1] = bfull
    cost = np.zeros(n + m)
    cost[:n] = p.c
    red = cost.copy()  # reduced costs of the current basis, slack basis has c_B = 0
    obj = 0.0
    basis = np.arange(n, n + m)

    it = 0
    while True:
        enter_cands = np.flatnonzero(red > PIVOT_TOL)
        if enter_cands.size == 0:
            break
        if it >= MAX_ITER:
            raise LpError(f"simplex iteration cap {MAX_ITER} reached", p.dump())
        j = int(enter_cands[0])
        col = tab[:, j]
        pos = np.flatnonzero(col > PIVOT_TOL)
        if pos.size == 0:
            raise LpError("LP is unbounded", p.dump())
        ratios = tab[pos, -1] / col[pos]
        best = ratios.min()
        tied = pos[ratios <= best + PIVOT_TOL * (1.0 + abs(best))]
        r = int(tied[np.argmin(basis[tied])])
        piv = tab[r, j]
        tab[r] /= piv
        others = np.flatnonzero(tab[:, j] != 0)
        others = others[others != r]
        if others.size:
            tab[others] -= np.outer(tab[others, j], tab[r])
        step = red[j]
        obj += step * tab[r, -1]
        red = red - step * tab[r, :-1]
        basis[r] = j
        it += 1

    full_x = np.zeros(n + m)
    full_x[basis] = tab[:, -1]
    x = np.clip(full_x[:n], 0.0, None)
    y_all = -red[n:]
    m_a = p.A.shape[0]
    y = y_all[:m_a]
    z = np.zeros(n)
    z[bounded] = y_all[m_a:]
    reduced = p.c - p.A.T @ y
    objective = float(p.c @ x)
    finite_u = np.where(np.isfinite(p.upper), p.upper, 0.0)
    dual_obj = float(p.b @ y + finite_u @ z)
    primal_viol = max(
        float(np.max(p.A @ x - p.b, initial=0.0)),
        float(np.max(np.where(np.isfinite(p.upper), x - p.upper, 0.0), initial=0.0)),
    )
    dual_viol = max(
        float(np.max(-y_all, initial=0.0)),
        float(np.max(p.c - p.A.T @ y - z, initial=0.0)),
    )
    return LpSolution(x=x, duals=y, bound_duals=z, reduced_costs=reduced, objective=objective,
                      dual_objective=dual_obj, duality_gap=dual_obj - objective, iterations=it,
                      primal_violation=primal_viol, dual_violation=dual_viol)


# ---------------------------------------------------------------- look-ahead packing LP


@dataclass(frozen=True)
class LookaheadLp:
    """Packing LP over stages 0..n_tilde (stage 0 is the rest of the current cycle).

    Item (s, j) has weight r_j + (n_tilde - s) h and upper bound ``upper[s, j-1]``;
    constraint k caps the total over stages 0..k by ``caps[k]``.
    """

    n_tilde: int
    weights: np.ndarray  # (n_tilde+1, M)
    upper: np.ndarray  # (n_tilde+1, M)
    caps: np.ndarray  # (n_tilde+1,)
    constant: float  # -h * n_tilde * I_t, dropped from the solve
    index: dict = field(default_factory=dict)  # (stage, j) -> column, j is 1-based

    @property
    def num_types(self) -> int:
        return self.weights.shape[1]

    def to_problem(self) -> LpProblem:
        S1, M = self.weights.shape
        A = np.zeros((S1, S1 * M))
        for (s, j), col in self.index.items():
            A[s:, col] = 1.0
        c = np.zeros(S1 * M)
        u = np.zeros(S1 * M)
        for (s, j), col in self.index.items():
            c[col] = self.weights[s, j - 1]
            u[col] = self.upper[s, j - 1]
        return LpProblem(c, A, self.caps, u)


def stage_weights(rewards: Sequence[float], h: float, n_tilde: int) -> np.ndarray:
    r = np.asarray(rewards, dtype=np.float64)
    return r[None, :] + (n_tilde - np.arange(n_tilde + 1))[:, None] * h


def build_lookahead_lp(spec: ProblemSpec, n_tilde: int, inventory: int,
                       remaining_now: Sequence[float], ctx) -> tuple[LpProblem, dict, LookaheadLp]:
    """Look-ahead packing LP with the rejected mass eliminated (v0 = demand - v).

    Columns: current-cycle types by ascending j, then future cycles ascending i then j.
    Returns the dense problem, the (stage, j) -> column map and the structured form.
    """
    M = spec.num_types
    orders = list(ctx.future_orders[:n_tilde]) + [0] * max(0, n_tilde - len(ctx.future_orders))
    caps = inventory + np.concatenate([[0.0], np.cumsum(np.asarray(orders, dtype=np.float64))])
    upper = np.empty((n_tilde + 1, M))
    upper[0] = np.asarray(remaining_now, dtype=np.float64)
    for i in range(1, n_tilde + 1):
        upper[i] = np.asarray(ctx.expected_demand(i), dtype=np.float64)
    index = {(s, j): s * M + (j - 1) for s in range(n_tilde + 1) for j in range(1, M + 1)}
    lp = LookaheadLp(n_tilde, stage_weights(spec.rewards, spec.holding_cost, n_tilde), upper,
                     caps, -spec.holding_cost * n_tilde * inventory, index)
    return lp.to_problem(), index, lp


def greedy_order(weights: np.ndarray) -> np.ndarray:
    """Flat item order: weight descending, then earlier stage, then lower type."""
    S1, M = weights.shape
    stage = np.repeat(np.arange(S1), M)
    typ = np.tile(np.arange(M), S1)
    return np.lexsort((typ, stage, -weights.ravel()))


@dataclass(frozen=True)
class GreedyResult:
    x: np.ndarray  # (K, S1, M)
    objective: np.ndarray  # (K,)
    dual_objective: np.ndarray  # (K,) nan when not certified
    prices: np.ndarray  # (K, S1) cumulative constraint prices, nan when not certified

    @property
    def gap(self) -> np.ndarray:
        return self.dual_objective - self.objective


def nested_greedy_batch(weights: np.ndarray, upper: np.ndarray, caps: np.ndarray,
                        certify: bool = False, order: np.ndarray | None = None) -> GreedyResult:
    """Solve many staircase packing LPs at once.

    weights (S1, M) shared; upper (K, S1, M); caps (K, S1) nondecreasing.
    The feasible set is a polymatroid, so filling items by descending weight is optimal.
    """
    upper = np.asarray(upper, dtype=np.float64)
    caps = np.asarray(caps, dtype=np.float64)
    K, S1, M = upper.shape
    if order is None:
        order = greedy_order(weights)
    flat_u = upper.reshape(K, S1 * M)
    x = np.zeros((K, S1 * M))
    slack = caps.copy()
    for item in order:
        s = item // M
        room = slack[:, s] if s == S1 - 1 else slack[:, s:].min(axis=1)
        take = np.minimum(flat_u[:, item], np.maximum(room, 0.0))
        x[:, item] = take
        slack[:, s:] -= take[:, None]
    x = x.reshape(K, S1, M)
    objective = np.einsum("ksm,sm->k", x, weights)
    if not certify:
        nan = np.full(K, np.nan)
        return GreedyResult(x, objective, nan, np.full((K, S1), np.nan))
    dual, prices = _staircase_dual(weights, upper, caps, x)
    return GreedyResult(x, objective, dual, prices)


def _staircase_dual(weights, upper, caps, x):
    """Build a dual solution for a staircase packing primal and return its objective.

    Prices are constant between consecutive tight constraints; each block takes the
    smallest price compatible with its unfilled items and with later blocks.
    """
    K, S1, M = x.shape
    used = np.cumsum(x.sum(axis=2), axis=1)
    tight = caps - used <= FEAS_TOL * (1.0 + np.abs(caps))
    not_full = x < upper - FEAS_TOL * (1.0 + np.abs(upper))
    w = np.broadcast_to(weights, x.shape)
    stage_lo = np.where(not_full, w, -np.inf).max(axis=2)  # (K, S1)

    idx = np.arange(S1)
    last_tight = np.where(tight.any(axis=1), np.where(tight, idx, -1).max(axis=1), -1)
    # suffix max of stage_lo restricted to stages <= last_tight
    masked = np.where(idx[None, :] <= last_tight[:, None], stage_lo, -np.inf)
    suffix = np.maximum.accumulate(masked[:, ::-1], axis=1)[:, ::-1]
    # first stage of each stage's block: one past the previous tight constraint
    prev_tight = np.full((K, S1), -1)
    running = np.full(K, -1)
    for s in range(S1):
        prev_tight[:, s] = running
        running = np.where(tight[:, s], s, running)
    first = prev_tight + 1
    prices = np.maximum(np.take_along_axis(suffix, first, axis=1), 0.0)
    prices = np.where(idx[None, :] <= last_tight[:, None], prices, 0.0)

    y = prices - np.concatenate([prices[:, 1:], np.zeros((K, 1))], axis=1)
    z = np.maximum(w - prices[:, :, None], 0.0)
    dual = np.einsum("ks,ks->k", caps, y) + np.einsum("ksm,ksm->k", upper, z)
    return dual, prices
