"""Closed-form optimal policies for the single-slot (K = 1) rejection system.

With K = 1 the expected profit rate collapses to an explicit function of
(lambda, l): throughput is lambda*mu/(mu+lambda), the admitted job's sojourn
is Exp(mu), and the lateness exposure factor is exp(-mu*l)/mu.  Both the
cost-free and the costed problems then reduce to a concave quadratic in
lambda once the optimal quote is pinned down:

  * without congestion/lateness costs the service-level constraint binds,
    l* = z/mu with z = ln(1/(1-s));
  * with costs the optimal quote balances the lateness penalty against the
    demand lost to a longer quote, l* = ln(x)/mu with
    x = max{1/(1-s), b1*c/b2}, equivalently an attained service level of
    max{s, s_c} where s_c = 1 - b2/(b1*c) is the critical level at which
    the penalty and demand effects cancel.

In both cases lambda* = -mu + sqrt(mu^2 + R) for the appropriate margin
term R, and the price rides the binding demand constraint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .market import (
    MarketParams,
    Policy,
    feasible_no_costs,
    feasible_with_costs,
    inverse_price,
)

SERVICE_BINDING = "service-binding"
PENALTY_BINDING = "penalty-binding"

# Quote cap when demand ignores lead time (b2 = 0) but lateness is priced:
# the quote grows until the residual penalty factor exp(-mu*l) is this small.
PENALTY_ELIMINATION = 1e-12


@dataclass(frozen=True)
class Solution:
    """Solver output: the policy, its value, and how it was obtained.

    branch records which constraint pinned the quote; diagnostics carries
    named intermediates (z, critical level, quadratic radicand, ...) so a
    solution is auditable without re-deriving it.
    """

    policy: Policy
    profit: float
    feasible: bool
    service_level_attained: float
    branch: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "policy": self.policy.to_dict(),
            "profit": self.profit,
            "feasible": self.feasible,
            "service_level_attained": self.service_level_attained,
            "branch": self.branch,
            "diagnostics": dict(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Solution":
        return cls(
            policy=Policy.from_dict(d["policy"]),
            profit=float(d["profit"]),
            feasible=bool(d["feasible"]),
            service_level_attained=float(d["service_level_attained"]),
            branch=str(d["branch"]),
            diagnostics=dict(d.get("diagnostics", {})),
        )


def _require_single_slot(params: MarketParams, who: str) -> None:
    if params.K != 1:
        raise ValueError(f"{who} applies to the single-slot system only (K = 1), got K = {params.K}")


def _infeasible(params: MarketParams, diagnostics: dict) -> Solution:
    # Null policy: price at cost, quote the minimum service-level lead time.
    z = params.z
    policy = Policy(p=params.m, l=z / params.mu, lam=0.0)
    return Solution(
        policy=policy,
        profit=0.0,
        feasible=False,
        service_level_attained=params.s,
        branch=SERVICE_BINDING,
        diagnostics=diagnostics,
    )


def mm11_profit(policy: Policy, params: MarketParams, costs_on: bool) -> float:
    """Expected profit rate of the single-slot system at a given policy.

    Revenue lambda_eff*(p - m), minus (when costs_on) holding F*L and the
    lateness exposure c*lambda_eff*exp(-mu*l)/mu; all three share the
    denominator mu + lambda.
    """
    _require_single_slot(params, "mm11_profit")
    lam, mu = policy.lam, params.mu
    if lam < 0:
        raise ValueError("policy demand rate must be >= 0")
    if policy.l < 0:
        raise ValueError("policy lead time must be >= 0")
    margin = mu * (policy.p - params.m)
    if costs_on:
        margin -= params.F + params.c * math.exp(-mu * policy.l)
    return lam * margin / (mu + lam)


def critical_service_level(params: MarketParams) -> float:
    """Level s_c = 1 - b2/(b1*c) where lateness penalty and demand-loss
    effects of lengthening the quote cancel.  Needs c > 0."""
    if params.c <= 0:
        raise ValueError("critical service level undefined without a lateness penalty (c > 0)")
    return 1.0 - params.b2 / (params.b1 * params.c)


def solve_mm11_no_costs(params: MarketParams) -> Solution:
    """Optimal policy for the single-slot system, pure revenue objective.

    The service-level constraint binds (l* = z/mu); lambda* solves the
    concave quadratic first-order condition, giving
    lambda* = -mu + sqrt(mu^2 + a*mu - b2*z - m*mu*b1).
    """
    _require_single_slot(params, "solve_mm11_no_costs")
    a, b1, b2, mu, m = params.a, params.b1, params.b2, params.mu, params.m
    z = params.z
    diagnostics = {"z": z}
    if not feasible_no_costs(params):
        return _infeasible(params, diagnostics)
    l_star = z / mu
    radicand = mu * mu + a * mu - b2 * z - m * mu * b1
    diagnostics["discriminant"] = radicand
    if radicand < 0:
        # The feasibility gate guarantees radicand >= mu^2; reaching here
        # means inconsistent inputs, not a case to clamp over.
        raise ArithmeticError(f"negative discriminant {radicand} on a feasible instance")
    lam_star = -mu + math.sqrt(radicand)
    lam_star = max(lam_star, 0.0)
    p_star = inverse_price(lam_star, l_star, params)
    profit = lam_star * mu * (p_star - m) / (mu + lam_star) if lam_star > 0 else 0.0
    return Solution(
        policy=Policy(p=p_star, l=l_star, lam=lam_star),
        profit=profit,
        feasible=True,
        service_level_attained=params.s,
        branch=SERVICE_BINDING,
        diagnostics=diagnostics,
    )


def solve_mm11_with_costs(params: MarketParams) -> Solution:
    """Optimal policy for the single-slot system with holding and lateness costs.

    The quote solves x = max{1/(1-s), b1*c/b2}, l* = ln(x)/mu; whichever
    term wins decides the branch (service-binding vs penalty-binding, the
    latter exactly when s_c > s).  Then
    lambda* = -mu + sqrt(mu^2 + a*mu - mu*b2*l* - mu*b1*m - F*b1 - b1*c*exp(-mu*l*)).
    Degenerate inputs: c = 0 falls back to the service-binding quote; b2 = 0
    (with c > 0) caps the quote at the penalty-elimination point.
    """
    _require_single_slot(params, "solve_mm11_with_costs")
    a, b1, b2, mu, m = params.a, params.b1, params.b2, params.mu, params.m
    F, c, s = params.F, params.c, params.s
    z = params.z
    diagnostics = {"z": z}

    if c <= 0:
        s_c = None
        l_star = z / mu
        attained = s
        branch = SERVICE_BINDING
    elif b2 <= 0:
        # No demand pressure against a long quote: stretch it until the
        # lateness exposure is negligible (or to z/mu if s demands more).
        s_c = None
        l_star = max(z, math.log(1.0 / PENALTY_ELIMINATION)) / mu
        attained = 1.0 - math.exp(-mu * l_star)
        branch = PENALTY_BINDING if l_star > z / mu else SERVICE_BINDING
    else:
        s_c = critical_service_level(params)
        diagnostics["s_c"] = s_c
        x = max(1.0 / (1.0 - s), b1 * c / b2)
        diagnostics["x"] = x
        l_star = math.log(x) / mu
        if s_c > s:
            branch = PENALTY_BINDING
            attained = s_c
        else:
            branch = SERVICE_BINDING
            attained = s

    if not feasible_with_costs(params, l_star):
        return _infeasible(params, diagnostics)

    penalty_residual = c * math.exp(-mu * l_star)
    radicand = mu * mu + a * mu - mu * b2 * l_star - mu * b1 * m - F * b1 - b1 * penalty_residual
    diagnostics["discriminant"] = radicand
    if radicand < 0:
        raise ArithmeticError(f"negative discriminant {radicand} on a feasible instance")
    lam_star = max(-mu + math.sqrt(radicand), 0.0)
    p_star = inverse_price(lam_star, l_star, params)
    profit = (
        lam_star * (mu * (p_star - m) - F - penalty_residual) / (mu + lam_star)
        if lam_star > 0
        else 0.0
    )
    return Solution(
        policy=Policy(p=p_star, l=l_star, lam=lam_star),
        profit=profit,
        feasible=True,
        service_level_attained=attained,
        branch=branch,
        diagnostics=diagnostics,
    )
