"""Steady-state metrics of the finite-buffer M/M/1/K queue, plus M/M/1 pieces.

Standard birth-death results (see e.g. Gross et al., Fundamentals of
Queueing Theory).  With rho = lambda/mu and a buffer of K jobs total:

    P_block = (1-rho) rho^K / (1 - rho^(K+1))          (1/(K+1) at rho = 1)
    L       = rho/(1-rho) - (K+1) rho^(K+1)/(1-rho^(K+1))   (K/2 at rho = 1)

An admitted arrival that finds k jobs in system waits an Erlang(k+1, mu)
sojourn (the residual service is again exponential), and by PASTA k is
distributed as the stationary queue length conditioned on k < K, which is
geometric with ratio rho over 0..K-1.  That yields the on-time probability
P(W <= l) used by the service-level constraint.

All rate/time arguments accept floats or numpy arrays and broadcast like
ufuncs; K is always a scalar int.  rho is treated as exactly critical when
|rho - 1| <= 1e-9, where the formulas switch to their continuous limits.
Powers of rho are always taken of min(rho, 1/rho) so nothing overflows for
large K or rho.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Width of the rho = 1 branch switch.
RHO_ONE_TOL = 1e-9


def _check_rates(lam, mu: float, K: int) -> None:
    if not mu > 0:
        raise ValueError(f"service rate mu must be positive, got {mu}")
    if not (isinstance(K, (int, np.integer)) and K >= 1):
        raise ValueError(f"capacity K must be an integer >= 1, got {K}")
    if np.any(np.asarray(lam) < 0):
        raise ValueError("arrival rate lambda must be >= 0")


def _ret(x: np.ndarray, scalar: bool):
    return float(x) if scalar else x


def mm1k_blocking(lam, mu: float, K: int):
    """Probability an arrival finds the buffer full and is turned away."""
    _check_rates(lam, mu, K)
    scalar = np.isscalar(lam)
    rho = np.asarray(lam, dtype=float) / mu
    near_one = np.abs(rho - 1.0) <= RHO_ONE_TOL
    # Work with t = min(rho, 1/rho) <= 1: for rho > 1 the blocking probability
    # equals (1 - q)/(1 - q^(K+1)) with q = 1/rho.
    safe = np.where(near_one | (rho == 0.0), 0.5, rho)
    t = np.minimum(safe, 1.0 / safe)
    tk1 = t ** (K + 1)
    num = np.where(rho > 1.0, 1.0 - t, (1.0 - t) * t**K)
    block = np.where(near_one, 1.0 / (K + 1), num / (1.0 - tk1))
    block = np.where(np.asarray(rho == 0.0) & ~near_one, 0.0, block)
    return _ret(block, scalar)


def mm1k_mean_number(lam, mu: float, K: int):
    """Time-average number of jobs in system."""
    _check_rates(lam, mu, K)
    scalar = np.isscalar(lam)
    rho = np.asarray(lam, dtype=float) / mu
    near_one = np.abs(rho - 1.0) <= RHO_ONE_TOL
    safe = np.where(near_one | (rho == 0.0), 0.5, rho)
    t = np.minimum(safe, 1.0 / safe)
    tk1 = t ** (K + 1)
    # Second term of L: (K+1) rho^(K+1)/(1-rho^(K+1)); for rho > 1 rewrite
    # with q = 1/rho as -(K+1)/(1-q^(K+1)).
    tail = np.where(rho > 1.0, -(K + 1) / (1.0 - tk1), (K + 1) * tk1 / (1.0 - tk1))
    ls = np.where(near_one, K / 2.0, safe / (1.0 - safe) - tail)
    ls = np.where(np.asarray(rho == 0.0) & ~near_one, 0.0, ls)
    return _ret(ls, scalar)


def mm1k_throughput(lam, mu: float, K: int):
    """Effective (admitted) arrival rate lambda * (1 - P_block)."""
    block = mm1k_blocking(lam, mu, K)
    return np.asarray(lam, dtype=float) * (1.0 - block) if not np.isscalar(lam) else lam * (1.0 - block)


def mm1k_mean_sojourn(lam, mu: float, K: int):
    """Mean time in system of an admitted job, L / lambda_eff (Little).

    Undefined at lambda = 0; raises ValueError there.  For K = 1 this is
    identically 1/mu.
    """
    _check_rates(lam, mu, K)
    if np.any(np.asarray(lam) <= 0):
        raise ValueError("mean sojourn undefined at lambda = 0")
    ls = mm1k_mean_number(lam, mu, K)
    leff = mm1k_throughput(lam, mu, K)
    return ls / leff


def mm1k_ontime_prob(lam, mu: float, K: int, l):
    """P(sojourn <= l) for an admitted job in steady state.

    Sum over the k jobs found in system of the Erlang(k+1, mu) cdf at l,
    weighted by the conditional (admitted-arrival) queue-length law
    (1-rho) rho^k / (1-rho^K) for k = 0..K-1, uniform 1/K at rho = 1.
    The Erlang tail terms exp(-mu l)(mu l)^i/i! are built by a running
    product, so the evaluation is stable for K in the hundreds.
    """
    _check_rates(lam, mu, K)
    scalar = np.isscalar(lam) and np.isscalar(l)
    rho = np.asarray(lam, dtype=float)/mu
    lead = np.asarray(l, dtype=float)
    if np.any(lead < 0):
        raise ValueError("lead time l must be >= 0")
    rho, lead = np.broadcast_arrays(rho, lead)
    near_one = np.abs(rho - 1.0) <= RHO_ONE_TOL
    safe = np.where(near_one | (rho == 0.0), 0.5, rho)
    t = np.minimum(safe, 1.0 / safe)
    # Weight at k = 0; successive weights multiply by rho.  For rho > 1 use
    # w_0 = (1-q) q^(K-1) / (1-q^K), q = 1/rho, keeping every power <= 1.
    w0_sub = np.where(
        rho > 1.0,
        (1.0 - t) * t ** (K - 1) / (1.0 - t**K),
        (1.0 - t) / (1.0 - t**K),
    )
    w = np.where(near_one, 1.0 / K, w0_sub)
    w = np.where(np.asarray(rho == 0.0) & ~near_one, 1.0, w)
    ratio = np.where(near_one, 1.0, rho)

    x = mu * lead
    term = np.exp(-x)          # Poisson pmf at i = 0
    erl_tail = term.copy()     # P(Poisson(mu l) <= k), k = 0: survival of Erlang(k+1)
    late = erl_tail * w
    for k in range(1, K):
        term = term * x / k
        erl_tail = erl_tail + term
        w = w * ratio
        late = late + erl_tail * w
    ontime = 1.0 - late
    return _ret(np.clip(ontime, 0.0, 1.0), scalar)


def mm1_ontime_prob(lam, mu: float, l):
    """P(sojourn <= l) = 1 - exp(-(mu-lambda) l) for the stable M/M/1 queue."""
    if not mu > 0:
        raise ValueError(f"service rate mu must be positive, got {mu}")
    if np.any(np.asarray(lam) < 0):
        raise ValueError("arrival rate lambda must be >= 0")
    if np.any(np.asarray(lam) >= mu):
        raise ValueError("unstable queue: lambda must be < mu for the M/M/1 law")
    scalar = np.isscalar(lam) and np.isscalar(l)
    out = 1.0 - np.exp(-(mu - np.asarray(lam, dtype=float)) * np.asarray(l, dtype=float))
    return _ret(out, scalar)


@dataclass(frozen=True)
class QueueMetrics:
    """Bundle of steady-state metrics at one operating point."""

    rho: float
    block_prob: float
    throughput: float
    mean_number: float
    mean_sojourn: float
    ontime_prob: float

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "block_prob": self.block_prob,
            "throughput": self.throughput,
            "mean_number": self.mean_number,
            "mean_sojourn": self.mean_sojourn,
            "ontime_prob": self.ontime_prob,
        }


def mm1k_metrics(lam: float, mu: float, K: int, l: float) -> QueueMetrics:
    """All finite-buffer metrics at (lam, mu, K) with quote l.  Needs lam > 0."""
    if not lam > 0:
        raise ValueError("mm1k_metrics needs lambda > 0 (per-job metrics undefined)")
    return QueueMetrics(
        rho=lam / mu,
        block_prob=mm1k_blocking(lam, mu, K),
        throughput=mm1k_throughput(lam, mu, K),
        mean_number=mm1k_mean_number(lam, mu, K),
        mean_sojourn=mm1k_mean_sojourn(lam, mu, K),
        ontime_prob=mm1k_ontime_prob(lam, mu, K, l),
    )


def erlang_quantile_bracket(mu: float, K: int, s: float) -> float:
    """Crude upper bound for the lead time meeting service level s at any load.

    The worst conditional sojourn is Erlang(K, mu); mean K/mu plus a
    generous multiple of the standard deviation dominates its s-quantile
    for any s < 1.  Used to seed bisection brackets.
    """
    if s <= 0.0:
        return 0.0
    spread = math.sqrt(K) / mu
    return K / mu + (8.0 + 2.0 * math.log(1.0 / (1.0 - s))) * spread
