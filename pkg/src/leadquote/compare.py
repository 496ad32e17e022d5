"""Rejection-vs-acceptance comparison: relative profit gains over (a, b2) grids.

For each cell the single-slot rejection system is solved in closed form and
the accept-all M/M/1 benchmark numerically, under the same market
parameters; the headline number is the relative profit gain in percent.
Tables are laid out rows = b2 descending, columns = a ascending.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .closed_form import Solution, solve_mm11_no_costs, solve_mm11_with_costs
from .market import MarketParams
from .numeric import SolverConfig, solve_mm1_baseline


def relative_gain(profit_reject: float, profit_accept: float) -> float:
    """Percent change (reject - accept)/accept * 100.  Needs accept > 0."""
    if profit_accept <= 0:
        raise ValueError("relative gain undefined for a nonpositive benchmark profit")
    return 100.0 * (profit_reject - profit_accept) / profit_accept


@dataclass
class GainTable:
    """Grid of relative gains plus the per-cell solutions behind them.

    gains[i][j] corresponds to (b2_values[i], a_values[j]); None marks a
    cell where either side was infeasible or the benchmark made no profit.
    """

    a_values: list
    b2_values: list
    gains: list
    reject: list
    accept: list
    base: MarketParams
    costs_on: bool
    notes: dict = field(default_factory=dict)

    def cell(self, a: float, b2: float):
        i = self.b2_values.index(b2)
        j = self.a_values.index(a)
        return self.gains[i][j]

    def positive_cells(self) -> int:
        return sum(1 for row in self.gains for g in row if g is not None and g > 0)

    def to_csv(self) -> str:
        def num(x):
            return f"{x:g}"

        lines = ["b2," + ",".join(num(a) for a in self.a_values)]
        for b2, row in zip(self.b2_values, self.gains):
            cells = ["n/a" if g is None else f"{g:.2f}" for g in row]
            lines.append(num(b2) + "," + ",".join(cells))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        cells = []
        for i, b2 in enumerate(self.b2_values):
            for j, a in enumerate(self.a_values):
                cells.append(
                    {
                        "a": a,
                        "b2": b2,
                        "gain_percent": self.gains[i][j],
                        "reject": self.reject[i][j].to_dict(),
                        "accept": self.accept[i][j].to_dict(),
                    }
                )
        return {
            "base": self.base.to_dict(),
            "costs_on": self.costs_on,
            "a_values": list(self.a_values),
            "b2_values": list(self.b2_values),
            "gains": [list(r) for r in self.gains],
            "cells": cells,
            "notes": dict(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _solve_cell(args):
    base_dict, a, b2, costs_on, cfg = args
    params = MarketParams.from_dict(base_dict).with_updates(a=a, b2=b2, K=1)
    config = SolverConfig(**cfg) if cfg else None
    if costs_on:
        rej = solve_mm11_with_costs(params)
    else:
        rej = solve_mm11_no_costs(params)
    acc = solve_mm1_baseline(params, costs_on=costs_on, config=config)
    return rej, acc


def sweep(base: MarketParams, a_values, b2_values, costs_on: bool,
          config: SolverConfig | None = None, jobs: int = 1) -> GainTable:
    """Solve both systems on the (a, b2) grid and tabulate relative gains.

    jobs > 1 farms cells out to worker processes; results are identical to
    the serial path since every cell is independent and deterministic.
    """
    a_sorted = sorted(float(a) for a in a_values)
    b2_sorted = sorted((float(b) for b in b2_values), reverse=True)
    cfg = None
    if config is not None:
        cfg = {
            "coarse_step_lambda": config.coarse_step_lambda,
            "coarse_step_l": config.coarse_step_l,
            "refine_iterations": config.refine_iterations,
            "refine_shrink": config.refine_shrink,
            "tolerance": config.tolerance,
        }
    tasks = [
        (base.to_dict(), a, b2, costs_on, cfg)
        for b2 in b2_sorted
        for a in a_sorted
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_solve_cell, tasks, chunksize=4))
    else:
        results = [_solve_cell(t) for t in tasks]

    n_a = len(a_sorted)
    gains, rej_rows, acc_rows = [], [], []
    for i, b2 in enumerate(b2_sorted):
        g_row, r_row, a_row = [], [], []
        for j in range(n_a):
            rej, acc = results[i * n_a + j]
            if rej.feasible and acc.feasible and acc.profit > 0:
                g_row.append(relative_gain(rej.profit, acc.profit))
            else:
                g_row.append(None)
            r_row.append(rej)
            a_row.append(acc)
        gains.append(g_row)
        rej_rows.append(r_row)
        acc_rows.append(a_row)
    return GainTable(
        a_values=a_sorted,
        b2_values=b2_sorted,
        gains=gains,
        reject=rej_rows,
        accept=acc_rows,
        base=base,
        costs_on=costs_on,
    )
