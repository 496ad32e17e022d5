"""Grid-based solvers: the finite-buffer profit problem, accept-all
baselines, and a brute-force oracle for certifying the closed forms.

All searches share one two-phase engine: a dense coarse grid over
(lambda, u) followed by shrinking local refinements around the incumbent,
where u in [0, 1] parametrizes the quoted lead time between its per-lambda
lower bound (the service-level constraint) and upper bound (nonnegative
price, or a penalty-elimination cap when demand ignores lead time).
Working in (lambda, u) keeps the search box rectangular, so refinement
windows never have to chase the moving l-bounds.

Tie-breaking is deterministic: smallest lambda, then smallest quote, and
the incumbent is only replaced on strict improvement, so results do not
depend on evaluation order and the incumbent profit is monotone across
refinement rounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .closed_form import (
    PENALTY_BINDING,
    PENALTY_ELIMINATION,
    SERVICE_BINDING,
    Solution,
)
from .market import MarketParams, Policy, inverse_price
from .queueing import (
    erlang_quantile_bracket,
    mm1_ontime_prob,
    mm1k_blocking,
    mm1k_mean_number,
    mm1k_ontime_prob,
)

# Mask tolerances used inside objectives: price may undershoot zero and the
# on-time probability may undershoot s by this much before a grid point is
# declared infeasible (bisection leaves ~1e-10 slack on the service bound).
PRICE_SLACK = 1e-12
SERVICE_SLACK = 1e-9

# M/M/1 baselines never evaluate closer to instability than this.
STABILITY_MARGIN = 1e-6

_COARSE_POINTS = 400

ORACLE_MODELS = (
    "mm11-no-costs",
    "mm11-with-costs",
    "mm1-no-costs",
    "mm1-with-costs",
    "mm1k",
)


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the two-phase grid search.

    coarse_step_lambda / coarse_step_l: coarse grid spacing; None picks
    span/400.  Each refinement round shrinks the window by refine_shrink
    and stops early once a round improves the incumbent by less than
    tolerance.
    """

    coarse_step_lambda: float | None = None
    coarse_step_l: float | None = None
    refine_iterations: int = 12
    refine_shrink: float = 0.25
    tolerance: float = 1e-9

    def __post_init__(self) -> None:
        if self.coarse_step_lambda is not None and not self.coarse_step_lambda > 0:
            raise ValueError("coarse_step_lambda must be positive")
        if self.coarse_step_l is not None and not self.coarse_step_l > 0:
            raise ValueError("coarse_step_l must be positive")
        if self.refine_iterations < 0:
            raise ValueError("refine_iterations must be >= 0")
        if not 0.0 < self.refine_shrink < 1.0:
            raise ValueError("refine_shrink must lie in (0, 1)")
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    if hi <= lo:
        return np.array([lo])
    n = int(math.ceil((hi - lo) / step)) + 1
    return np.linspace(lo, hi, max(n, 2))


def _search(objective, lam_lo, lam_hi, l_lo_of, l_hi_of, config: SolverConfig):
    """Maximize objective(lam, l) over the banded box; returns a result dict.

    objective takes broadcastable arrays (lam as a column, l as a matrix)
    and returns profits with -inf marking infeasible points.
    """
    lam_span = max(lam_hi - lam_lo, 0.0)
    step_lam = config.coarse_step_lambda or (lam_span / _COARSE_POINTS if lam_span > 0 else 1.0)
    lam = _axis(lam_lo, lam_hi, step_lam)
    lo = np.asarray(l_lo_of(lam), dtype=float)
    hi = np.asarray(l_hi_of(lam), dtype=float)
    spans = np.maximum(hi - lo, 0.0)
    max_span = float(spans.max()) if spans.size else 0.0
    step_l = config.coarse_step_l or (max_span / _COARSE_POINTS if max_span > 0 else 1.0)
    n_u = int(math.ceil(max_span / step_l)) + 1 if max_span > 0 else 1
    u = np.linspace(0.0, 1.0, max(n_u, 1))

    evals = 0
    best = {"profit": -np.inf, "lam": lam_lo, "l": float(lo[0]), "u": 0.0}

    def consider(lam_vec, u_vec):
        nonlocal evals
        row_lo = np.asarray(l_lo_of(lam_vec), dtype=float)
        row_hi = np.asarray(l_hi_of(lam_vec), dtype=float)
        row_span = np.maximum(row_hi - row_lo, 0.0)
        L = row_lo[:, None] + row_span[:, None] * u_vec[None, :]
        P = objective(lam_vec[:, None], L)
        evals += P.size
        flat = int(np.argmax(P))
        i, j = divmod(flat, P.shape[1])
        value = float(P[i, j])
        if np.isfinite(value) and value > best["profit"]:
            best.update(
                profit=value,
                lam=float(lam_vec[i]),
                l=float(L[i, j]),
                u=float(u_vec[j]),
            )

    consider(lam, u)
    round_profits = [best["profit"]]

    w_lam = step_lam
    w_u = 1.0 / (len(u) - 1) if len(u) > 1 else 0.0
    pts = max(int(round(2.0 / config.refine_shrink)) + 1, 3)
    rounds_used = 0
    for _ in range(config.refine_iterations):
        if not np.isfinite(best["profit"]):
            break
        prev = best["profit"]
        lam_w = np.unique(np.clip(best["lam"] + w_lam * np.linspace(-1.0, 1.0, pts), lam_lo, lam_hi))
        if w_u > 0:
            u_w = np.unique(np.clip(best["u"] + w_u * np.linspace(-1.0, 1.0, pts), 0.0, 1.0))
        else:
            u_w = np.array([best["u"]])
        consider(lam_w, u_w)
        rounds_used += 1
        round_profits.append(best["profit"])
        w_lam *= config.refine_shrink
        w_u *= config.refine_shrink
        if best["profit"] - prev < config.tolerance:
            break

    return {
        "lam": best["lam"],
        "l": best["l"],
        "profit": best["profit"],
        "found": np.isfinite(best["profit"]),
        "evaluations": evals,
        "refine_rounds": rounds_used,
        "round_profits": round_profits,
    }


def min_leadtime_for_service(lam, params: MarketParams, tol: float = 1e-10):
    """Smallest quote meeting the service level at arrival rate lam.

    P(W <= l) is increasing in l for fixed lam, so plain bisection applies;
    vectorized over lam.  Returns 0 when s = 0.
    """
    mu, K, s = params.mu, params.K, params.s
    scalar = np.isscalar(lam)
    arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if s <= 0.0:
        out = np.zeros_like(arr)
        return float(out[0]) if scalar else out
    lo = np.zeros_like(arr)
    hi = np.full_like(arr, erlang_quantile_bracket(mu, K, s))
    for _ in range(60):
        short = mm1k_ontime_prob(arr, mu, K, hi) < s
        if not short.any():
            break
        hi = np.where(short, 2.0 * hi, hi)
    else:
        raise ArithmeticError("could not bracket the service-level quote")
    for _ in range(200):
        if float(np.max(hi - lo)) <= tol:
            break
        mid = 0.5 * (lo + hi)
        ok = mm1k_ontime_prob(arr, mu, K, mid) >= s
        lo = np.where(ok, lo, mid)
        hi = np.where(ok, mid, hi)
    return float(hi[0]) if scalar else hi


def _mm1k_objective(params: MarketParams):
    a, b1, b2, m = params.a, params.b1, params.b2, params.m
    mu, K, s, F, c = params.mu, params.K, params.s, params.F, params.c

    def objective(lam, L):
        p = (a - b2 * L - lam) / b1
        block = mm1k_blocking(lam, mu, K)
        ls = mm1k_mean_number(lam, mu, K)
        leff = lam * (1.0 - block)
        ontime = mm1k_ontime_prob(lam, mu, K, L)
        # Lateness term c * leff * P(late) * W collapses to c * ls * P(late)
        # by Little's law, which stays defined at lambda = 0.
        profit = leff * (p - m) - F * ls - c * ls * (1.0 - ontime)
        ok = (p >= -PRICE_SLACK) & (ontime >= s - SERVICE_SLACK)
        return np.where(ok, profit, -np.inf)

    return objective


def mm1k_profit(policy: Policy, params: MarketParams) -> float:
    """Expected profit rate of the finite-buffer system at a given policy.

    Pure evaluator: the service-level constraint is not checked here.
    """
    if policy.lam < 0:
        raise ValueError("policy demand rate must be >= 0")
    if policy.l < 0:
        raise ValueError("policy lead time must be >= 0")
    lam, mu, K = policy.lam, params.mu, params.K
    if lam == 0.0:
        return 0.0
    block = mm1k_blocking(lam, mu, K)
    ls = mm1k_mean_number(lam, mu, K)
    leff = lam * (1.0 - block)
    ontime = mm1k_ontime_prob(lam, mu, K, policy.l)
    return leff * (policy.p - params.m) - params.F * ls - params.c * ls * (1.0 - ontime)


def _leadtime_cap(lo, rate):
    # Quote beyond which the residual lateness factor exp(-rate*l) is dust.
    return lo + math.log(1.0 / PENALTY_ELIMINATION) / rate


def _numeric_solution(params: MarketParams, result: dict, extra: dict) -> Solution:
    z = params.z
    diagnostics = {"z": z, **extra,
                   "evaluations": result["evaluations"],
                   "refine_rounds": result["refine_rounds"],
                   "round_profits": [float(v) for v in result["round_profits"] if np.isfinite(v)]}
    if not result["found"] or result["profit"] < 0.0:
        policy = Policy(p=params.m, l=z / params.mu, lam=0.0)
        return Solution(policy, 0.0, False, params.s, SERVICE_BINDING, diagnostics)
    lam, l = result["lam"], result["l"]
    p = inverse_price(lam, l, params)
    if extra.get("model") == "mm1":
        attained = mm1_ontime_prob(lam, params.mu, l)
        binding = abs(l - z / (params.mu - lam)) <= 1e-9 * (1.0 + l)
    else:
        attained = mm1k_ontime_prob(lam, params.mu, params.K, l)
        binding = attained <= params.s + 1e-6
    branch = SERVICE_BINDING if binding else PENALTY_BINDING
    return Solution(
        policy=Policy(p=p, l=l, lam=lam),
        profit=result["profit"],
        feasible=True,
        service_level_attained=float(attained),
        branch=branch,
        diagnostics=diagnostics,
    )


def solve_mm1k_numeric(params: MarketParams, config: SolverConfig | None = None) -> Solution:
    """Optimal policy of the finite-buffer system by two-phase grid search.

    The quote ranges from the bisected service-level minimum up to the
    zero-price bound (a - lambda)/b2, or a penalty-elimination cap when
    b2 = 0.  Declared infeasible when no grid point attains nonnegative
    price, the service level, and nonnegative profit.
    """
    config = config or SolverConfig()
    a, b2, mu = params.a, params.b2, params.mu

    def l_lo_of(lam):
        return min_leadtime_for_service(lam, params)

    if b2 > 0:
        def l_hi_of(lam):
            lo = min_leadtime_for_service(lam, params)
            return np.maximum((a - np.asarray(lam, dtype=float)) / b2, lo)
    else:
        def l_hi_of(lam):
            return _leadtime_cap(min_leadtime_for_service(lam, params), mu)

    result = _search(_mm1k_objective(params), 0.0, a, l_lo_of, l_hi_of, config)
    return _numeric_solution(params, result, {"model": "mm1k", "K": params.K})


def mm1_profit(policy: Policy, params: MarketParams, costs_on: bool) -> float:
    """Expected profit rate of the accept-all M/M/1 benchmark at a policy.

    Revenue lambda*(p-m); with costs also holding F*lambda/(mu-lambda) and
    lateness c*lambda*exp(-(mu-lambda)l)/(mu-lambda).  Needs lambda < mu.
    """
    lam, mu = policy.lam, params.mu
    if lam < 0:
        raise ValueError("policy demand rate must be >= 0")
    if lam >= mu:
        raise ValueError("accept-all benchmark needs a stable queue (lambda < mu)")
    profit = lam * (policy.p - params.m)
    if costs_on:
        slack = mu - lam
        profit -= params.F * lam / slack
        profit -= params.c * lam * math.exp(-slack * policy.l) / slack
    return profit


def solve_mm1_baseline(params: MarketParams, costs_on: bool, config: SolverConfig | None = None) -> Solution:
    """Optimal policy of the accept-all M/M/1 benchmark.

    Without costs the service-level quote l = z/(mu-lambda) binds and the
    search is one-dimensional in lambda; with costs the quote is searched
    between the service bound and the zero-price bound.  The search stays
    a stability margin away from lambda = mu.
    """
    config = config or SolverConfig()
    a, b1, b2, m = params.a, params.b1, params.b2, params.m
    mu, F, c, z = params.mu, params.F, params.c, params.z
    lam_hi = min(a, mu - STABILITY_MARGIN)
    extra = {"model": "mm1", "costs_on": costs_on}
    if lam_hi <= 0:
        return _numeric_solution(params, {"found": False, "profit": -np.inf,
                                          "lam": 0.0, "l": z / mu,
                                          "evaluations": 0, "refine_rounds": 0,
                                          "round_profits": []}, extra)

    def l_lo_of(lam):
        return z / (mu - np.asarray(lam, dtype=float))

    if not costs_on:
        l_hi_of = l_lo_of
    elif b2 > 0:
        def l_hi_of(lam):
            lam = np.asarray(lam, dtype=float)
            return np.maximum((a - lam) / b2, z / (mu - lam))
    else:
        def l_hi_of(lam):
            lam = np.asarray(lam, dtype=float)
            lo = z / (mu - lam)
            return lo + math.log(1.0 / PENALTY_ELIMINATION) / (mu - lam)

    def objective(lam, L):
        p = (a - b2 * L - lam) / b1
        profit = lam * (p - m)
        if costs_on:
            slack = mu - lam
            profit = profit - F * lam / slack - c * lam * np.exp(-slack * L) / slack
        return np.where(p >= -PRICE_SLACK, profit, -np.inf)

    result = _search(objective, 0.0, lam_hi, l_lo_of, l_hi_of, config)
    return _numeric_solution(params, result, extra)


def brute_force_oracle(params: MarketParams, model: str, resolution: int = 160,
                       sweep_price: bool = False) -> Solution:
    """Dense two-phase grid search used to certify the closed-form solvers.

    The objectives are written out inline here, independently of the
    closed-form module, so agreement is evidence rather than tautology.
    model picks the system: single-slot with or without costs, accept-all
    benchmark with or without costs, or the general finite-buffer system.
    A fixed 10-round refinement with no early stop makes the oracle's
    accuracy a function of resolution alone.  sweep_price additionally
    frees the price instead of riding the binding demand constraint
    (coarse pass only; for spot checks on small instances).
    """
    if model not in ORACLE_MODELS:
        raise ValueError(f"unknown oracle model {model!r}; pick one of {ORACLE_MODELS}")
    if resolution < 100:
        raise ValueError("oracle resolution must be at least 100")
    a, b1, b2, m = params.a, params.b1, params.b2, params.m
    mu, F, c, z = params.mu, params.F, params.c, params.z

    if model == "mm1k":
        lam_hi = a
        def l_lo_of(lam):
            return min_leadtime_for_service(lam, params)
        if b2 > 0:
            def l_hi_of(lam):
                lo = min_leadtime_for_service(lam, params)
                return np.maximum((a - np.asarray(lam, dtype=float)) / b2, lo)
        else:
            def l_hi_of(lam):
                return _leadtime_cap(min_leadtime_for_service(lam, params), mu)
        objective = _mm1k_objective(params)
    elif model.startswith("mm11"):
        if params.K != 1:
            raise ValueError("single-slot oracle needs K = 1")
        lam_hi = a
        def l_lo_of(lam):
            return np.full_like(np.asarray(lam, dtype=float), z / mu)
        if b2 > 0:
            def l_hi_of(lam):
                lam = np.asarray(lam, dtype=float)
                return np.maximum((a - lam) / b2, z / mu)
        else:
            def l_hi_of(lam):
                return np.full_like(np.asarray(lam, dtype=float), _leadtime_cap(z / mu, mu))
        if model == "mm11-no-costs":
            def objective(lam, L):
                p = (a - b2 * L - lam) / b1
                profit = lam * mu * (p - m) / (mu + lam)
                return np.where(p >= -PRICE_SLACK, profit, -np.inf)
        else:
            def objective(lam, L):
                p = (a - b2 * L - lam) / b1
                profit = lam * (mu * (p - m) - F - c * np.exp(-mu * L)) / (mu + lam)
                return np.where(p >= -PRICE_SLACK, profit, -np.inf)
    else:
        lam_hi = min(a, mu - STABILITY_MARGIN)
        def l_lo_of(lam):
            return z / (mu - np.asarray(lam, dtype=float))
        if model == "mm1-no-costs":
            l_hi_of = l_lo_of
        elif b2 > 0:
            def l_hi_of(lam):
                lam = np.asarray(lam, dtype=float)
                return np.maximum((a - lam) / b2, z / (mu - lam))
        else:
            def l_hi_of(lam):
                lam = np.asarray(lam, dtype=float)
                lo = z / (mu - lam)
                return lo + math.log(1.0 / PENALTY_ELIMINATION) / (mu - lam)
        costs = model == "mm1-with-costs"
        def objective(lam, L):
            p = (a - b2 * L - lam) / b1
            profit = lam * (p - m)
            if costs:
                slack = mu - lam
                profit = profit - F * lam / slack - c * lam * np.exp(-slack * L) / slack
            return np.where(p >= -PRICE_SLACK, profit, -np.inf)

    # Coarse l step: span of the widest band divided by the resolution.
    probe = np.linspace(0.0, lam_hi, 32)
    widest = float(np.max(np.maximum(np.asarray(l_hi_of(probe), dtype=float)
                                     - np.asarray(l_lo_of(probe), dtype=float), 0.0)))
    config = SolverConfig(
        coarse_step_lambda=lam_hi / (resolution - 1) if lam_hi > 0 else 1.0,
        coarse_step_l=widest / (resolution - 1) if widest > 0 else None,
        refine_iterations=10,
        refine_shrink=0.25,
        tolerance=0.0,
    )
    result = _search(objective, 0.0, lam_hi, l_lo_of, l_hi_of, config)
    extra = {"model": "mm1" if model.startswith("mm1-") else ("mm1k" if model == "mm1k" else "mm11"),
             "oracle": model, "resolution": resolution}
    solution = _numeric_solution(params, result, extra)

    if sweep_price and solution.feasible:
        swept = _price_sweep(params, model, objective, l_lo_of, l_hi_of, lam_hi)
        solution.diagnostics["price_sweep_profit"] = swept["profit"]
        solution.diagnostics["price_sweep_p"] = swept["p"]
        solution.diagnostics["price_sweep_binding_p"] = swept["binding_p"]
    return solution


def _price_sweep(params: MarketParams, model: str, banded_objective, l_lo_of, l_hi_of, lam_hi):
    """Coarse 3-D sweep with the price freed and demand as an inequality.

    Checks that the best free price sits on the binding demand constraint.
    """
    a, b1, b2, m = params.a, params.b1, params.b2, params.m
    mu, F, c = params.mu, params.F, params.c
    n = 60
    lam = np.linspace(0.0, lam_hi, n)
    lo = np.asarray(l_lo_of(lam), dtype=float)
    hi = np.asarray(l_hi_of(lam), dtype=float)
    u = np.linspace(0.0, 1.0, n)
    L = lo[:, None] + np.maximum(hi - lo, 0.0)[:, None] * u[None, :]
    p = np.linspace(0.0, a / b1, n)
    lam3 = lam[:, None, None]
    L3 = L[:, :, None]
    p3 = p[None, None, :]
    demand = a - b1 * p3 - b2 * L3
    if model == "mm11-no-costs":
        profit = lam3 * mu * (p3 - m) / (mu + lam3)
    elif model == "mm11-with-costs":
        profit = lam3 * (mu * (p3 - m) - F - c * np.exp(-mu * L3)) / (mu + lam3)
    elif model == "mm1-no-costs":
        profit = lam3 * (p3 - m) * np.ones_like(L3)
    elif model == "mm1-with-costs":
        slack = mu - lam3
        profit = lam3 * (p3 - m) - F * lam3 / slack - c * lam3 * np.exp(-slack * L3) / slack
    else:
        raise ValueError("price sweep supports the single-slot and accept-all models")
    profit = np.where(lam3 <= demand + PRICE_SLACK, profit, -np.inf)
    flat = int(np.argmax(profit))
    i, j, k = np.unravel_index(flat, profit.shape)
    best_lam, best_l, best_p = float(lam[i]), float(L[i, j]), float(p[k])
    return {
        "profit": float(profit[i, j, k]),
        "p": best_p,
        "binding_p": (a - b2 * best_l - best_lam) / b1,
        "lam": best_lam,
        "l": best_l,
    }
