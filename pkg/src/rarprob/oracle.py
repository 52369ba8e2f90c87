"""Concrete prophetic scheduler search on an enrolled model.

For a fixed sample vector the search executes the semantics directly: pick an
initial point and, in every location, a rate and a delay, then a jump. A
stochastic jump is allowed only at the exact instant its delay variable equals
the sample. Rates and initial points come from finite grids and delays from a
delta-grid plus every exact event time (guard entry/exit, expiry), so a
success is always a genuine witness while a failure only means none was found.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .geometry.rational import Q, ZERO, dot, to_q
from .model import EnrolledModel, GoalSpecification


@dataclass(frozen=True)
class StrategySearchConfig:
    time_grid: object = Q(1, 20)
    rate_grid: int = 3
    init_grid: int = 5
    max_jumps: int = 20
    horizon: object = Q(30)  # cap on a single sojourn when nothing else bounds it
    budget: int = 200_000

    def __post_init__(self):
        if to_q(self.time_grid) <= 0:
            raise ValueError("time_grid must be positive")
        if self.rate_grid < 1 or self.init_grid < 1:
            raise ValueError("grids must be nonempty")


@dataclass
class OracleResult:
    reachable: bool
    inconclusive: bool = False
    witness: list = field(default_factory=list)
    expansions: int = 0


def _grid(lo, hi, n):
    if lo is None or hi is None:
        raise ValueError("grid over an unbounded interval")
    if lo == hi or n == 1:
        return [lo]
    return sorted({lo + (hi - lo) * Q(k, n - 1) for k in range(n)})


def _rows(p):
    return list(p.constraints)


def _tau_interval(rows, v, rate, lo, hi):
    """Sub-interval of [lo, hi] on which v + tau*rate satisfies all rows."""
    for a, b in rows:
        base = dot(a, v)
        slope = dot(a, rate)
        if slope == 0:
            if base > b:
                return None
        elif slope > 0:
            hi = min(hi, (b - base) / slope)
        else:
            lo = max(lo, (b - base) / slope)
        if lo > hi:
            return None
    return lo, hi


class _Search:
    def __init__(self, em: EnrolledModel, goal: GoalSpecification, sample, cfg: StrategySearchConfig):
        self.em = em
        self.cfg = cfg
        self.delta = to_q(cfg.time_grid)
        self.sample = [to_q(s) for s in sample]
        self.goal_rows = _rows(goal.region_in(em.dim, em.var_c_dims))
        self.goal = goal
        self.inv = {n: _rows(l.invariant) for n, l in em.locations.items()}
        self.guards = {e.index: _rows(e.guard) for e in em.edges}
        self.expansions = 0
        self.seen = set()
        self.exhausted = False

    def rates(self, loc):
        per_dim = [_grid(lo, hi, self.cfg.rate_grid) for lo, hi in self.em.locations[loc].flow]
        return itertools.product(*per_dim)

    def run(self):
        for loc in self.em.initial_locations():
            init_rows = _rows(loc.init)
            box = [loc.init.bounds(i) for i in range(self.em.dim)]
            pts = itertools.product(*[_grid(lo, hi, self.cfg.init_grid) for lo, hi in box])
            for v in pts:
                if all(dot(a, v) <= b for a, b in init_rows):
                    w = self.visit(loc.name, tuple(v), 0)
                    if w is not None:
                        return w
                    if self.exhausted:
                        return None
        return None

    def visit(self, loc, v, depth):
        key = (loc, v)
        if key in self.seen:
            return None
        self.seen.add(key)
        self.expansions += 1
        if self.expansions > self.cfg.budget:
            self.exhausted = True
            return None
        em = self.em
        node = em.locations[loc]
        # active delays may not run past their samples
        bound_rows = list(self.inv[loc])
        for k, d in enumerate(em.delays):
            if node.flow[d.dim][0] != 0:
                e = [ZERO] * em.dim
                e[d.dim] = Q(1)
                bound_rows.append((tuple(e), self.sample[k]))
        for rate in self.rates(loc):
            span = _tau_interval(bound_rows, v, rate, ZERO, to_q(self.cfg.horizon))
            if span is None:
                continue
            t_max = span[1]
            if self.goal.matches(node.base):
                hit = _tau_interval(self.goal_rows, v, rate, ZERO, t_max)
                if hit is not None:
                    tau = hit[0]
                    return [self._step(loc, v, rate, tau, "goal")]
            if depth >= self.cfg.max_jumps:
                continue
            for edge in em.out_edges(loc):
                target = em.locations[edge.target]
                if edge.kind == "stochastic":
                    d = em.delays[edge.delay]
                    tau = self.sample[edge.delay] - v[d.dim]
                    if tau < 0 or tau > t_max or node.flow[d.dim][0] == 0:
                        continue
                    times = [tau]
                    rows = self.inv[edge.target]
                else:
                    rows = self.guards[edge.index] + self.inv[edge.target]
                    win = _tau_interval(rows, v, rate, ZERO, t_max)
                    if win is None:
                        continue
                    lo, hi = win
                    k0 = -((-lo) // self.delta)  # ceil
                    times = [lo]
                    k = k0
                    while k * self.delta < hi:
                        if k * self.delta > lo:
                            times.append(k * self.delta)
                        k += 1
                    times.append(hi)
                for tau in times:
                    w = tuple(x + tau * r for x, r in zip(v, rate))
                    if not all(dot(a, w) <= b for a, b in rows):
                        continue
                    sub = self.visit(target.name, w, depth + 1)
                    if sub is not None:
                        return [self._step(loc, v, rate, tau, edge.label)] + sub
                    if self.exhausted:
                        return None
        return None

    def _step(self, loc, v, rate, tau, action):
        return {
            "location": loc,
            "valuation": [float(x) for x in v],
            "rate": [float(r) for r in rate],
            "delay": float(tau),
            "action": action,
        }


def can_reach(
    em: EnrolledModel,
    goal: GoalSpecification,
    sample: Sequence,
    cfg: Optional[StrategySearchConfig] = None,
) -> OracleResult:
    """Whether some scheduler that knows ``sample`` reaches the goal (grid search)."""
    cfg = cfg or StrategySearchConfig()
    if len(sample) != em.d_r:
        raise ValueError(f"sample needs {em.d_r} entries")
    if any(to_q(s) < 0 for s in sample):
        raise ValueError("samples must be nonnegative")
    s = _Search(em, goal, sample, cfg)
    witness = s.run()
    return OracleResult(witness is not None, s.exhausted and witness is None, witness or [], s.expansions)
