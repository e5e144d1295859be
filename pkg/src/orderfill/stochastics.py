"""Counter-based arrival sampling and the binomial computations behind the bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .core import ArrivalPath, DomainError, ProblemSpec

MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_K_PATH = np.uint64(0xD1B54A32D192ED03)
_K_CYCLE = np.uint64(0xABC98388FB8FAC03)
_K_PERIOD = np.uint64(0x8CB92BA72F3D8DD7)
_TO_UNIT = 1.0 / (1 << 53)


def _mix(z: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 arithmetic wraps mod 2^64
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class RngStream:
    """A master seed; draws are addressed by (path, cycle, period) coordinates."""

    master_seed: int

    def __post_init__(self):
        object.__setattr__(self, "master_seed", int(self.master_seed) & MASK64)

    def uniforms(self, paths, num_cycles: int, num_periods: int, first_cycle: int = 0) -> np.ndarray:
        """Uniforms in [0,1) of shape (len(paths), num_cycles, num_periods).

        Entry [a, n, t] is a pure function of (seed, paths[a], first_cycle + n, t).
        """
        k = np.asarray(paths, dtype=np.uint64).reshape(-1, 1, 1)
        n = np.arange(first_cycle, first_cycle + num_cycles, dtype=np.uint64).reshape(1, -1, 1)
        t = np.arange(num_periods, dtype=np.uint64).reshape(1, 1, -1)
        with np.errstate(over="ignore"):
            s = _mix(np.uint64(self.master_seed) ^ _GOLDEN)
            hk = _mix(s ^ (k * _K_PATH + np.uint64(1)))
            hn = _mix(hk ^ (n * _K_CYCLE + np.uint64(2)))
            ht = _mix(hn ^ (t * _K_PERIOD + np.uint64(3)))
        return (ht >> np.uint64(11)).astype(np.float64) * _TO_UNIT


def type_thresholds(arrival_probs) -> np.ndarray:
    """Cumulative probabilities over the fixed order (0, 1, ..., M), without the final 1."""
    cum = np.cumsum(np.asarray(arrival_probs, dtype=np.float64))
    return cum[:-1]


def categorical(u: np.ndarray, arrival_probs) -> np.ndarray:
    """Inverse-CDF draw: the type j with cum[j-1] <= u < cum[j]."""
    return np.searchsorted(type_thresholds(arrival_probs), u, side="right").astype(np.int8)


def sample_paths(spec: ProblemSpec, stream: RngStream, paths, num_cycles: int | None = None,
                 first_cycle: int = 0) -> np.ndarray:
    """Arrival grids for many paths at once, int8 array of shape (K, N, T)."""
    n = spec.num_cycles if num_cycles is None else num_cycles
    u = stream.uniforms(paths, n, spec.periods_per_cycle, first_cycle)
    return categorical(u, spec.arrival_probs)


def sample_path(spec: ProblemSpec, stream: RngStream, path_index: int) -> ArrivalPath:
    return ArrivalPath(sample_paths(spec, stream, [path_index])[0])


# ---------------------------------------------------------------- binomial laws


@dataclass(frozen=True)
class BinomialLaw:
    trials: int
    success_prob: float

    def __post_init__(self):
        if self.trials < 0 or not 0.0 <= self.success_prob <= 1.0:
            raise DomainError(f"invalid binomial law {self}")

    @property
    def mean(self) -> float:
        return self.trials * self.success_prob


def binom_log_pmf_vector(law: BinomialLaw, ks: np.ndarray) -> np.ndarray:
    n, p = law.trials, law.success_prob
    ks = np.asarray(ks, dtype=np.float64)
    coef = special.gammaln(n + 1) - special.gammaln(ks + 1) - special.gammaln(n - ks + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(ks > 0, ks * math.log(p), 0.0) if p > 0 else np.where(ks > 0, -np.inf, 0.0)
        b = (np.where(ks < n, (n - ks) * math.log1p(-p), 0.0) if p < 1
             else np.where(ks < n, -np.inf, 0.0))
    return coef + a + b


def binom_pmf_vector(law: BinomialLaw) -> np.ndarray:
    """pmf over the full support 0..trials."""
    return np.exp(binom_log_pmf_vector(law, np.arange(law.trials + 1)))


def binom_pmf(law: BinomialLaw, k: int) -> float:
    if not 0 <= k <= law.trials:
        raise DomainError(f"pmf argument {k} outside 0..{law.trials}")
    return float(np.exp(binom_log_pmf_vector(law, np.array([k]))[0]))


def binom_cdf(law: BinomialLaw, k) -> float:
    """Pr(X <= k), clamped; the shorter tail is summed with fsum."""
    k = math.floor(k)
    n = law.trials
    if k < 0:
        return 0.0
    if k >= n:
        return 1.0
    if k <= n // 2:
        v = math.fsum(np.exp(binom_log_pmf_vector(law, np.arange(0, k + 1))))
    else:
        v = 1.0 - math.fsum(np.exp(binom_log_pmf_vector(law, np.arange(k + 1, n + 1))))
    return min(1.0, max(0.0, v))


def binom_cdf_many(trials, k, p: float) -> np.ndarray:
    """Vectorized Pr(Bin(trials, p) <= k) for long series; clamps outside the support."""
    trials = np.asarray(trials, dtype=np.float64)
    k = np.floor(np.asarray(k, dtype=np.float64))
    out = np.where(k >= trials, 1.0, 0.0)
    inside = (k >= 0) & (k < trials)
    if np.any(inside):
        kk, nn = np.broadcast_arrays(k, trials)
        out = np.array(out, dtype=np.float64)
        out[inside] = special.bdtr(kk[inside].astype(np.int64), nn[inside].astype(np.int64), p)
    return np.clip(out, 0.0, 1.0)


def cum_demand_cdf(n_cycles: int, T: int, no_arrival_prob: float, threshold: float) -> float:
    """Pr(total demand over n_cycles cycles <= floor(threshold))."""
    if n_cycles < 1:
        raise DomainError("n_cycles must be at least 1")
    return binom_cdf(BinomialLaw(n_cycles * T, 1.0 - no_arrival_prob), math.floor(threshold))


def expected_shortfall(law: BinomialLaw, x: float) -> float:
    """E[(x - X)^+] by exact pmf summation."""
    m = math.floor(x)
    if m < 0:
        return 0.0
    m = min(m, law.trials)
    ks = np.arange(0, m + 1)
    return math.fsum((x - ks) * np.exp(binom_log_pmf_vector(law, ks)))


def expected_excess(law: BinomialLaw, x: float) -> float:
    """E[(X - x)^+] by exact pmf summation."""
    lo = max(math.floor(x) + 1, 0)
    if lo > law.trials:
        return 0.0
    ks = np.arange(lo, law.trials + 1)
    return math.fsum((ks - x) * np.exp(binom_log_pmf_vector(law, ks)))


def shortfall_many(trials, x, p: float) -> np.ndarray:
    """Vectorized E[(x - Bin(trials, p))^+] via x*F_n(m) - n*p*F_{n-1}(m-1), m = floor(x)."""
    trials = np.asarray(trials, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    m = np.floor(x)
    f_n = binom_cdf_many(trials, m, p)
    f_prev = np.where(trials >= 1, binom_cdf_many(np.maximum(trials - 1, 0), m - 1, p), 0.0)
    return np.maximum(x * f_n - trials * p * f_prev, 0.0)
