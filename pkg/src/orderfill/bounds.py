"""Closed-form and root-found quantities: fractiles, cost envelopes, regret bounds.

Single-type cost notation: ``p`` is the per-unit lost-sales penalty (a reward level),
``h`` the holding cost per unit per cycle, ``mu = 1 - lambda_0`` the per-period arrival
probability. Infinite series are cut once a Chernoff-based geometric tail bound drops
below ``SERIES_TOL``; that bound is reported alongside the value.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import DomainError, ProblemSpec, require_valid
from .stochastics import (BinomialLaw, binom_cdf_many, binom_pmf_vector, expected_excess,
                          expected_shortfall, shortfall_many)

SERIES_TOL = 1e-12
BLOCK = 256
MAX_TERMS = 5_000_000
BISECT_TOL = 1e-12
FLOOR_EPS = 1e-9  # guards floor(n*c) against representation error at exact rationals
THETA_POINTS = 200
THETA_DECADES = 6
K2 = 0.5


# ---------------------------------------------------------------- report container


@dataclass
class BoundReport:
    values: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def add(self, name: str, value) -> None:
        self.values[name] = _plain(value)

    def merge(self, other: "BoundReport", prefix: str = "") -> None:
        for k, v in other.values.items():
            self.values[prefix + k] = v
        self.flags.extend(f for f in other.flags if f not in self.flags)

    def flag(self, msg: str) -> None:
        if msg not in self.flags:
            self.flags.append(msg)

    def __getitem__(self, name):
        return self.values[name]

    def to_json(self) -> str:
        return json.dumps({"values": self.values, "flags": self.flags}, sort_keys=True, indent=2,
                          allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, s: str) -> "BoundReport":
        d = json.loads(s)
        return cls(dict(d["values"]), list(d["flags"]))

    def csv_rows(self, T: int) -> list[tuple[int, str, float]]:
        return [(T, k, v) for k, v in sorted(self.values.items()) if isinstance(v, (int, float))]


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in v]
    return v


# ---------------------------------------------------------------- elementary pieces


def bennett(u: float) -> float:
    """h(u) = (1 + u) ln(1 + u) - u."""
    return (1.0 + u) * math.log1p(u) - u


def bernoulli_kl(x: float, p: float) -> float:
    """KL divergence between Bernoulli(x) and Bernoulli(p)."""
    def part(a, b):
        return 0.0 if a == 0 else a * math.log(a / b)
    return part(x, p) + part(1.0 - x, 1.0 - p)


def kingman_expected_inventory(n: int, T: int, no_arrival_prob: float, c: float) -> float:
    """Expected end-of-cycle stock after n cycles of constant orders c served by the
    clairvoyant allocator, starting from c on hand: sum_j (1/j) E[(jc - D_j)^+]."""
    mu = 1.0 - no_arrival_prob
    if c > T * mu:
        raise DomainError(f"order size {c} exceeds mean cycle demand {T * mu}")
    if n < 1:
        raise DomainError("need at least one cycle")
    return math.fsum(expected_shortfall(BinomialLaw(j * T, mu), j * c) / j for j in range(1, n + 1))


def backorder_cdf(law: BinomialLaw) -> np.ndarray:
    cdf = np.minimum(np.cumsum(binom_pmf_vector(law)), 1.0)
    cdf[-1] = 1.0
    return cdf


def backorder_fractile_level(law: BinomialLaw, fractile: float) -> int:
    """Smallest S with Pr(X <= S) >= fractile."""
    if not 0.0 < fractile <= 1.0:
        raise DomainError(f"fractile {fractile} outside (0, 1]")
    cdf = backorder_cdf(law)
    return int(np.searchsorted(cdf, fractile, side="left"))


def backorder_cost(law: BinomialLaw, S: int, h: float, penalty: float) -> float:
    """h E[(S - X)^+] + penalty E[(X - S)^+] for pipeline demand X."""
    return h * expected_shortfall(law, S) + penalty * expected_excess(law, S)


@dataclass(frozen=True)
class CostAtLevel:
    value: float
    level: int
    fractile: float
    penalty: float


def pipeline_law(T: int, L: int, no_arrival_prob: float) -> BinomialLaw:
    return BinomialLaw((L + 1) * T, 1.0 - no_arrival_prob)


def _check_costs(h, p):
    if not (h > 0 and p > 0):
        raise DomainError("holding cost and penalty must be positive")


def a1_upper(T: int, h: float, p: float, L: int, no_arrival_prob: float) -> CostAtLevel:
    """Backorder cost with inflated penalty p + L h at its newsvendor level."""
    _check_costs(h, p)
    law = pipeline_law(T, L, no_arrival_prob)
    pen = p + L * h
    phi = pen / (p + (L + 1) * h)
    S = backorder_fractile_level(law, phi)
    return CostAtLevel(backorder_cost(law, S, h, pen), S, phi, pen)


def a1_lower(T: int, h: float, p: float, L: int, no_arrival_prob: float) -> CostAtLevel:
    """Backorder cost with deflated penalty p / (L + 1) at its newsvendor level."""
    _check_costs(h, p)
    law = pipeline_law(T, L, no_arrival_prob)
    pen = p / (L + 1)
    phi = p / (p + (L + 1) * h)
    S = backorder_fractile_level(law, phi)
    return CostAtLevel(backorder_cost(law, S, h, pen), S, phi, pen)


# ---------------------------------------------------------------- constant-order cost


def _decay_rate(T: int, mu: float, c: float) -> float:
    """rho with Pr(S_n <= n c) <= rho^n (Chernoff), valid for c below the mean T mu."""
    if c >= T * mu:
        return 1.0
    return math.exp(-T * bernoulli_kl(max(c, 0.0) / T, mu))


@dataclass(frozen=True)
class SeriesValue:
    value: float
    terms: int
    tail_bound: float


def _series(term_fn, rho: float, scale: float, stop_above: float | None = None,
            stop_below: float | None = None) -> tuple[SeriesValue, int]:
    """Sum term_fn(n) for n = 1, 2, ... with a certified geometric tail.

    Terms satisfy term_n <= scale * rho^n. Returns (value, decision) where decision is
    +1 / -1 when the partial sum was already known to be above / below a target.
    """
    if rho >= 1.0:
        raise DomainError("series does not converge: order size at or above mean demand")
    parts = []
    n0 = 0
    while True:
        ns = np.arange(n0 + 1, n0 + BLOCK + 1, dtype=np.float64)
        parts.append(math.fsum(term_fn(ns)))
        n0 += BLOCK
        partial = math.fsum(parts)
        tail = scale * rho ** (n0 + 1) / (1.0 - rho)
        if stop_above is not None and partial > stop_above:
            return SeriesValue(partial, n0, tail), 1
        if stop_below is not None and partial + tail < stop_below:
            return SeriesValue(partial, n0, tail), -1
        if tail < SERIES_TOL:
            return SeriesValue(partial, n0, tail), 0
        if n0 >= MAX_TERMS:
            raise DomainError("series needs more than the allowed number of terms")


def foc_sum(T: int, no_arrival_prob: float, c: float, strict: bool = False, target: float | None = None):
    """sum_n Pr(D_1 + ... + D_n <= n c)  (or < n c when strict)."""
    mu = 1.0 - no_arrival_prob

    def term(ns):
        k = np.ceil(ns * c - FLOOR_EPS) - 1 if strict else np.floor(ns * c + FLOOR_EPS)
        return binom_cdf_many(ns * T, k, mu)

    stop = {} if target is None else {"stop_above": target, "stop_below": target}
    return _series(term, _decay_rate(T, mu, c), 1.0, **stop)


@dataclass(frozen=True)
class CStar:
    c: float
    target: float
    residual: float
    bracket: tuple[float, float]
    terms: int
    tail_bound: float


def cstar(T: int, h: float, p: float, no_arrival_prob: float) -> CStar:
    """Order size where the expected-count first-order condition crosses p/h.

    The left side is a nondecreasing step function of c, so the root is the point where
    it first reaches p/h; the residual measures how far p/h sits outside the jump there.
    """
    _check_costs(h, p)
    mu = 1.0 - no_arrival_prob
    target = p / h
    mean = T * mu
    if mean <= 0:
        raise DomainError("no demand: the first-order condition has no root")
    f0, _ = foc_sum(T, no_arrival_prob, 0.0)
    if f0.value >= target:
        raise DomainError(f"p/h = {target:g} is already met at c = 0; no interior root")
    lo, hi = 0.0, mean
    while hi - lo > BISECT_TOL * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        val, side = foc_sum(T, no_arrival_prob, mid, target=target)
        if side == 0:
            side = 1 if val.value >= target else -1
        if side > 0:
            hi = mid
        else:
            lo = mid
    c = _snap_to_jump(lo, hi, T, no_arrival_prob)
    upper, _ = foc_sum(T, no_arrival_prob, c)
    lower, _ = foc_sum(T, no_arrival_prob, c, strict=True)
    residual = max(0.0, lower.value - target, target - upper.value)
    return CStar(c, target, residual, (lo, hi), upper.terms, upper.tail_bound)


def _snap_to_jump(lo: float, hi: float, T: int, no_arrival_prob: float) -> float:
    """The step function jumps only at rationals k/n; return the one with the smallest n in
    the final bracket (up to floor guard), since that jump carries the most mass."""
    mu = 1.0 - no_arrival_prob
    rho = _decay_rate(T, mu, hi)
    # jumps with n beyond this point carry negligible mass
    n_max = min(10_000, max(1, int(math.log(SERIES_TOL) / math.log(rho)) + 1)) if rho < 1 else 10_000
    for n in range(1, n_max + 1):
        k = math.floor(n * hi + FLOOR_EPS)
        if lo - FLOOR_EPS / n < k / n <= hi + FLOOR_EPS / n:
            return k / n
    return hi


def constant_order_cost(T: int, h: float, p: float, no_arrival_prob: float, c: float) -> SeriesValue:
    """Long-run cost per cycle of ordering c each cycle with clairvoyant allocation."""
    mu = 1.0 - no_arrival_prob
    if c < 0:
        raise DomainError("order size must be nonnegative")
    if c >= T * mu:
        return SeriesValue(math.inf, 0, math.inf)

    def term(ns):
        return shortfall_many(ns * T, ns * c, mu) / ns

    holding = _series(term, _decay_rate(T, mu, c), max(c, 1e-300))[0]
    value = h * holding.value + p * T * mu - p * c
    return SeriesValue(value, holding.terms, h * holding.tail_bound)


@dataclass(frozen=True)
class A2Value:
    value: float
    c: CStar
    truncation_bound: float
    terms: int


def a2(T: int, h: float, p: float, no_arrival_prob: float) -> A2Value:
    cs = cstar(T, h, p, no_arrival_prob)
    cost = constant_order_cost(T, h, p, no_arrival_prob, cs.c)
    return A2Value(cost.value, cs, cost.tail_bound, cost.terms)


# ---------------------------------------------------------------- envelopes and constants


def replenishment_gap_envelope(spec: ProblemSpec) -> BoundReport:
    """Bounds on (base-stock profit) - (constant-order profit), both with clairvoyant allocation."""
    require_valid(spec)
    T, h, L, lam0 = spec.T, spec.h, spec.L, spec.no_arrival_prob
    r1, rM = spec.rewards[0], spec.rewards[-1]
    low_cost = a2(T, h, r1, lam0)
    high_cost = a2(T, h, rM, lam0)
    up1 = a1_upper(T, h, rM, L, lam0)
    lo1 = a1_lower(T, h, r1, L, lam0)
    rep = BoundReport()
    rep.add("a2_low_reward", low_cost.value)
    rep.add("a2_high_reward", high_cost.value)
    rep.add("cstar_low_reward", low_cost.c.c)
    rep.add("cstar_high_reward", high_cost.c.c)
    rep.add("cstar_low_reward_residual", low_cost.c.residual)
    rep.add("cstar_high_reward_residual", high_cost.c.residual)
    rep.add("a2_truncation_bound", max(low_cost.truncation_bound, high_cost.truncation_bound))
    rep.add("a1_upper_high_reward", up1.value)
    rep.add("a1_upper_level", up1.level)
    rep.add("a1_lower_low_reward", lo1.value)
    rep.add("a1_lower_level", lo1.level)
    rep.add("envelope_lower", low_cost.value - up1.value)
    rep.add("envelope_upper", high_cost.value - lo1.value)
    return rep


@dataclass(frozen=True)
class GreedyConstants:
    A_k: tuple[float, ...]  # k = 2..M
    A: float
    M1: float
    K2: float = K2


def offline_greedy_constants(spec: ProblemSpec) -> GreedyConstants:
    r = spec.rewards
    lam = spec.arrival_probs
    M = spec.num_types
    A_k = []
    for k in range(2, M + 1):
        tail_r = math.fsum(r[j - 1] * lam[j] for j in range(k, M + 1))
        tail_l = math.fsum(lam[j] for j in range(k, M + 1))
        A_k.append(tail_r - r[k - 2] * tail_l)
    M1 = math.fsum(math.sqrt(l * (1.0 - l)) for l in lam[1:])
    return GreedyConstants(tuple(A_k), min(A_k), M1)


@dataclass(frozen=True)
class GreedyGapBounds:
    upper: float
    lower_all_T: float
    lower_large_T: float


def offline_greedy_bounds(spec: ProblemSpec, delta_off: float, delta_greedy: float,
                          interior_prob: float) -> GreedyGapBounds:
    """Bounds on (clairvoyant allocation) - (greedy allocation) profit under base-stock."""
    if delta_off < 0 or delta_greedy < 0:
        raise DomainError("slack values must be nonnegative")
    if not 0.0 <= interior_prob <= 1.0:
        raise DomainError("interior probability must lie in [0, 1]")
    T, L = spec.T, spec.L
    mu, lam0, lam1 = spec.arrival_rate, spec.no_arrival_prob, spec.arrival_probs[1]
    r1, rM = spec.rewards[0], spec.rewards[-1]
    g = offline_greedy_constants(spec)
    rootT = math.sqrt(T)
    upper = (rM - r1) * ((mu - lam1) / mu) * (delta_off / (L + 1) + (g.K2 + math.sqrt(mu * lam0)) * rootT)
    lower_all = (g.A / mu) * delta_greedy / (4 * (L + 1)) * interior_prob - g.M1 * rootT
    lower_large = g.A / (2 * mu * (L + 1)) * delta_greedy - (g.A * g.K2 / mu + g.M1) * rootT
    return GreedyGapBounds(upper, lower_all, lower_large)


def interior_window(spec: ProblemSpec, delta_greedy: float) -> tuple[float, float]:
    """Start-of-cycle stock range (T lambda_M, T mu - delta / (4 (L + 1))] used by the lower bound."""
    T = spec.T
    return T * spec.arrival_probs[-1], T * spec.arrival_rate - delta_greedy / (4 * (spec.L + 1))


# ---------------------------------------------------------------- regret envelopes


@dataclass(frozen=True)
class RegretModel:
    alpha: float
    C1: float
    C2: float
    C3: float
    K_stability: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError("alpha must lie in [0, 1]")
        if min(self.C1, self.C2, self.C3) <= 0:
            raise DomainError("regret constants must be positive")

    @classmethod
    def bayes_selector(cls, rewards: Sequence[float], arrival_probs: Sequence[float],
                       K_stability: float = 1.0, C2: float | None = None) -> "RegretModel":
        """Constant-regret constants: C1 = 2 r_max e^{-lmin} / lmin^2 with lmin the smallest type probability."""
        flat = np.ravel(np.asarray(rewards, dtype=np.float64))
        lmin = min(arrival_probs[1:])
        if lmin <= 0:
            raise DomainError("every customer type needs a positive arrival probability")
        C1 = 2.0 * float(flat.max()) * math.exp(-lmin) / lmin ** 2
        gaps = np.diff(np.unique(flat))
        dr = float(gaps.min()) if gaps.size else float(flat.max())
        return cls(0.0, C1, C1 / float(flat.min()) if C2 is None else C2, C1 / dr, K_stability)


def theta_grid(delta_c: float, mu: float, points: int = THETA_POINTS, decades: float = THETA_DECADES) -> np.ndarray:
    top = delta_c / (4.0 * mu)
    return top * np.logspace(-decades, 0.0, points)


def log_beta(theta: float, c: float, T: int, no_arrival_prob: float, model: RegretModel) -> float:
    a, C2 = model.alpha, model.C2
    mu = 1.0 - no_arrival_prob
    return (theta * c + theta * C2 * T ** a + 0.5 * C2 * T ** (a - 1.0) * bennett(2.0 * theta * T)
            + 0.5 * T * math.log(no_arrival_prob + mu * math.exp(-2.0 * theta)))


@dataclass(frozen=True)
class StockTerm:
    value: float | None  # min over the grid of -(e theta)^{-1} ln(1 - beta), None if vacuous
    theta: float | None
    beta: float | None


def online_stock_term(c: float, T: int, no_arrival_prob: float, model: RegretModel,
                      grid: Sequence[float] | None = None) -> StockTerm:
    """Best exponential-moment bound on expected leftover stock beyond C2 T^alpha."""
    mu = 1.0 - no_arrival_prob
    if not c < T * mu - model.C2 * T ** model.alpha:
        raise DomainError("order size must sit below T(1-lambda_0) - C2 T^alpha")
    if grid is None:
        grid = theta_grid((T * mu - c) / T, mu)
    best = StockTerm(None, None, None)
    for th in grid:
        lb = log_beta(float(th), c, T, no_arrival_prob, model)
        if lb >= 0:
            continue
        val = -math.log(-math.expm1(lb)) / (math.e * th)
        if best.value is None or val < best.value:
            best = StockTerm(val, float(th), math.exp(lb))
    return best


def offline_stock_bound(T: int, no_arrival_prob: float, delta: float) -> float:
    """Bound on expected total clairvoyant leftover stock under constant orders with slack delta."""
    mu = 1.0 - no_arrival_prob
    if delta <= 0:
        raise DomainError("slack must be positive")
    return -(2.0 * mu / delta) * math.log(-math.expm1(-T * delta ** 2 / (8.0 * mu)))


def regret_envelopes(spec: ProblemSpec, model: RegretModel, c: float | None = None,
                     grid: Sequence[float] | None = None) -> BoundReport:
    T, h, L = spec.T, spec.h, spec.L
    r1, rM = spec.rewards[0], spec.rewards[-1]
    Ta = T ** model.alpha
    rep = BoundReport()
    rep.add("alpha", model.alpha)
    rep.add("C1", model.C1)
    rep.add("C2", model.C2)
    rep.add("base_stock_regret", model.C1 * Ta + h * model.C2 * (L + 1) * Ta)
    rep.add("online_beats_offline_constant", (rM - r1 - h) * model.C2 * Ta)
    rep.add("constant_regret_linear", model.C1 * T + h * model.K_stability * T)
    rep.add("K_stability", model.K_stability)
    rep.flag("constant_regret_linear uses an unquantified stability constant (K_stability)")
    if c is not None:
        rep.add("order_size", c)
        try:
            st = online_stock_term(c, T, spec.no_arrival_prob, model, grid)
        except DomainError as e:
            rep.flag(f"constant_regret not evaluated: {e}")
        else:
            rep.add("theta_star", st.theta)
            rep.add("beta_theta_star", st.beta)
            rep.add("stock_term", st.value)
            if st.value is None:
                rep.flag("constant_regret vacuous at this T: no grid theta gives beta < 1")
                rep.add("constant_regret", None)
            else:
                rep.add("constant_regret", model.C1 * Ta + h * (model.C2 * Ta + st.value))
    return rep


def policy_gap_bounds(spec: ProblemSpec, model: RegretModel, delta_greedy: float, interior_prob: float,
                     c: float | None = None) -> BoundReport:
    """Two-sided bound on (greedy with base-stock) - (online with constant orders)."""
    env = replenishment_gap_envelope(spec)
    g = offline_greedy_bounds(spec, 0.0, delta_greedy, interior_prob)
    T, h = spec.T, spec.h
    r1, rM = spec.rewards[0], spec.rewards[-1]
    Ta = T ** model.alpha
    rep = BoundReport()
    rep.merge(env)
    rep.add("greedy_gap_lower_large_T", g.lower_large_T)
    rep.add("greedy_gap_lower_all_T", g.lower_all_T)
    rep.add("combined_lower", env["envelope_lower"] - g.lower_large_T - (rM - r1 - h) * model.C2 * Ta)
    if model.alpha < 1:
        if c is None:
            c = env["cstar_low_reward"]
        reg = regret_envelopes(spec, model, c)
        rep.merge(reg, "regret_")
        online = reg.values.get("constant_regret")
    else:
        online = model.C1 * T + h * model.K_stability * T
        rep.flag("combined_upper uses an unquantified stability constant (K_stability)")
    rep.add("combined_upper", None if online is None else env["envelope_upper"] - g.lower_all_T + online)
    return rep


def multires_bounds(rewards_matrix, h_vec, L_vec, T: int, no_arrival_prob: float, model: RegretModel,
                    total_order: float | None = None, grid: Sequence[float] | None = None) -> BoundReport:
    R = np.asarray(rewards_matrix, dtype=np.float64)  # (M, d)
    h_vec = np.asarray(h_vec, dtype=np.float64)
    L_vec = np.asarray(L_vec, dtype=np.float64)
    Ta = T ** model.alpha
    r_col_max = R.max(axis=0)
    rep = BoundReport()
    rep.add("r_resource_max", r_col_max.tolist())
    rep.add("r_max", float(R.max()))
    rep.add("h_max", float(h_vec.max()))
    base = (model.C1 * Ta + float(np.sum(r_col_max * L_vec)) * model.C3 * Ta
            + float(np.sum(h_vec * (L_vec ** 2 - L_vec + 2))) * model.C3 * Ta)
    rep.add("base_stock_regret", base)
    if total_order is not None:
        mu = 1.0 - no_arrival_prob
        delta = (T * mu - total_order) / T
        rep.add("slack_per_period", delta)
        if delta <= 0:
            rep.flag("total order at or above mean demand: constant-order bounds not evaluated")
            return rep
        off_stock = offline_stock_bound(T, no_arrival_prob, delta)
        rep.add("offline_stock_bound", off_stock)
        rep.add("constant_regret_linear", model.C1 * T + float(R.max()) * off_stock
                + float(h_vec.max()) * model.K_stability * T)
        rep.flag("constant_regret_linear uses an unquantified stability constant (K_stability)")
        try:
            st = online_stock_term(total_order, T, no_arrival_prob, model, grid)
        except DomainError as e:
            rep.flag(f"constant_regret not evaluated: {e}")
            return rep
        rep.add("theta_star", st.theta)
        rep.add("beta_theta_star", st.beta)
        if st.value is None:
            rep.flag("constant_regret vacuous at this T: no grid theta gives beta < 1")
            rep.add("constant_regret", None)
        else:
            rep.add("constant_regret", model.C1 * Ta + float(R.max()) * off_stock
                    + float(h_vec.max()) * (model.C2 * Ta + st.value))
    return rep


def bound_report(spec: ProblemSpec, model: RegretModel | None = None) -> BoundReport:
    """Everything that needs no simulation input."""
    require_valid(spec)
    if model is None:
        model = RegretModel.bayes_selector(spec.rewards, spec.arrival_probs)
    T, h, L, lam0 = spec.T, spec.h, spec.L, spec.no_arrival_prob
    rep = BoundReport()
    rep.merge(replenishment_gap_envelope(spec))
    for name, p in (("low_reward", spec.rewards[0]), ("high_reward", spec.rewards[-1])):
        up, lo = a1_upper(T, h, p, L, lam0), a1_lower(T, h, p, L, lam0)
        rep.add(f"a1_upper_{name}", up.value)
        rep.add(f"a1_upper_{name}_level", up.level)
        rep.add(f"a1_lower_{name}", lo.value)
        rep.add(f"a1_lower_{name}_level", lo.level)
    g = offline_greedy_constants(spec)
    rep.add("A_k", list(g.A_k))
    rep.add("A", g.A)
    rep.add("M1", g.M1)
    rep.add("K2", g.K2)
    rep.merge(regret_envelopes(spec, model, rep["cstar_low_reward"]), "regret_")
    return rep


def scaling_rows(spec: ProblemSpec, Ts: Sequence[int], p: float | None = None) -> list[tuple[int, str, float]]:
    """(T, name, value) rows for the three cost functions across cycle lengths."""
    p = spec.rewards[-1] if p is None else p
    rows = []
    for T in Ts:
        rows.append((T, "a1_upper", a1_upper(T, spec.h, p, spec.L, spec.no_arrival_prob).value))
        rows.append((T, "a1_lower", a1_lower(T, spec.h, p, spec.L, spec.no_arrival_prob).value))
        rows.append((T, "a2", a2(T, spec.h, p, spec.no_arrival_prob).value))
    return rows
