"""Bounded-horizon polyhedral reachability for rectangular products.

Worklist fixpoint over symbolic states (location, polyhedron): time-elapse
inside the location, then discrete successors, with containment checks
against the accumulated per-location regions.  The match timer ``t`` ticks
at rate 1 in every non-pause location and is never reset, so capping it at
the configured horizon bounds the search; a symbolic-state cap is the
safety valve (hitting it marks the result partial, which is not sound for
range claims and is labeled accordingly).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from collections import deque
from fractions import Fraction
from typing import Optional

from .errors import NonRectangularFlow
from .fa import T_VAR
from .ha import RateInterval
from .linexpr import LinExpr, format_rat, rat_to_decimal
from .lsha import Lsha
from .poly import Polyhedron, row_of


@dataclass(frozen=True)
class SymbolicState:
    loc: str
    region: Polyhedron


@dataclass
class ReachConfig:
    time_horizon: Fraction
    max_symstates: int = 10000


@dataclass
class ReachResult:
    states: list[SymbolicState]
    feature_states: list[SymbolicState]
    fixpoint_reached: bool
    horizon_hit: bool
    partial: bool = False
    symstates_processed: int = 0

    @property
    def complete(self) -> bool:
        return not self.partial


@dataclass
class FeatureRange:
    min_value: Fraction
    max_value: Fraction
    complete: bool
    warnings: list[str] = field(default_factory=list)

    def as_record(self, feature: str, method: str) -> dict:
        return {
            "feature": feature,
            "min": rat_to_decimal(self.min_value),
            "max": rat_to_decimal(self.max_value),
            "exact_min": format_rat(self.min_value),
            "exact_max": format_rat(self.max_value),
            "complete": self.complete,
            "method": method,
        }


def time_elapse(region: Polyhedron, rates: dict[str, RateInterval],
                inv: Polyhedron,
                budget: Optional[Fraction] = None) -> Polyhedron:
    """Forward time closure {x + d*r | x in region, r in rates, 0 <= d}
    intersected with the invariant; `budget` bounds d when given."""
    for v in region.vars:
        r = rates.get(v)
        if not isinstance(r, RateInterval):
            raise NonRectangularFlow(f"variable '{v}' has a non-rectangular "
                                     "flow")
    if all(r.lo == 0 and r.hi == 0 for r in rates.values()):
        return region.intersect(inv)

    pre = {v: f"{v}@0" for v in region.vars}
    dt = "@dt"
    space = list(region.vars) + [pre[v] for v in region.vars] + [dt]
    rows = list(region.rename(pre).embed(space).rows)
    d = LinExpr.var(dt)
    rows.append(row_of(space, -d, "<=", 0))  # d >= 0
    if budget is not None:
        rows.append(row_of(space, d, "<=", budget))
    for v in region.vars:
        r = rates[v]
        delta = LinExpr.var(v) - LinExpr.var(pre[v])
        if r.lo == r.hi:
            rows.append(row_of(space, delta - d.scale(r.lo), "=", 0))
        else:
            rows.append(row_of(space, d.scale(r.lo) - delta, "<=", 0))
            rows.append(row_of(space, delta - d.scale(r.hi), "<=", 0))
    lifted = Polyhedron(space, rows)
    out = lifted.eliminate([pre[v] for v in region.vars] + [dt])
    return out.intersect(inv).reduce()


def discrete_post(state: SymbolicState, edge, inv_dst: Polyhedron
                  ) -> Optional[SymbolicState]:
    """Successor under one edge; None when infeasible."""
    region = state.region.intersect(edge.guard)
    if region.is_empty():
        return None
    region = region.affine_image(dict(edge.reset)).intersect(inv_dst)
    if region.is_empty():
        return None
    return SymbolicState(edge.dst, region.reduce())


def reach(lsha: Lsha, cfg: ReachConfig) -> ReachResult:
    """Worklist reachability; requires a rectangular (hybridized) product."""
    if not lsha.is_rectangular():
        raise NonRectangularFlow("reach requires rate-interval flows; "
                                 "hybridize the model first")
    horizon = rat_if(cfg.time_horizon)
    cap_row = row_of(lsha.variables, LinExpr.var(T_VAR), "<=", horizon)
    invariants: dict[str, Polyhedron] = {}
    for q, loc in lsha.locations.items():
        inv = loc.invariant
        if q not in lsha.pause_locs:
            inv = inv.with_rows([cap_row])
        invariants[q] = inv

    out_edges: dict[str, list] = {q: [] for q in lsha.locations}
    for e in lsha.edges:
        if not e.stutter:
            out_edges[e.src].append(e)

    init = SymbolicState(
        lsha.init_loc,
        lsha.init_region.intersect(invariants[lsha.init_loc]))
    passed: dict[str, list[Polyhedron]] = {q: [] for q in lsha.locations}
    work: deque[SymbolicState] = deque([init])
    processed = 0
    partial = False

    while work:
        if processed >= cfg.max_symstates:
            partial = True
            break
        state = work.popleft()
        processed += 1
        loc = lsha.locations[state.loc]
        region = time_elapse(state.region, dict(loc.flow),
                             invariants[state.loc])
        if region.is_empty():
            continue
        if any(p.contains(region) for p in passed[state.loc]):
            continue
        passed[state.loc].append(region)
        for e in out_edges[state.loc]:
            succ = discrete_post(SymbolicState(state.loc, region), e,
                                 invariants[e.dst])
            if succ is not None:
                work.append(succ)

    states = [SymbolicState(q, r) for q in sorted(passed)
              for r in passed[q]]
    feature_states = [SymbolicState(lsha.final_loc, r)
                      for r in passed[lsha.final_loc]]
    horizon_hit = False
    tvar = LinExpr.var(T_VAR)
    for q in lsha.non_pause_locations():
        for r in passed[q]:
            hi = r.optimize(tvar, "max")
            if hi.status == "optimal" and hi.value >= horizon:
                horizon_hit = True
                break
        if horizon_hit:
            break
    return ReachResult(states, feature_states, not partial, horizon_hit,
                       partial, processed)


def feature_range(result: ReachResult, fname: str
                  ) -> Optional[FeatureRange]:
    """Exact [min, max] of the feature variable over the accepting states;
    None when no accepting state is reachable (no match)."""
    if not result.feature_states:
        return None
    obj = LinExpr.var(fname)
    lo: Optional[Fraction] = None
    hi: Optional[Fraction] = None
    for s in result.feature_states:
        a = s.region.optimize(obj, "min")
        b = s.region.optimize(obj, "max")
        if a.status != "optimal" or b.status != "optimal":
            # feature variable unbounded in an accepting region
            raise ValueError("feature value unbounded in accepting region")
        lo = a.value if lo is None or a.value < lo else lo
        hi = b.value if hi is None or b.value > hi else hi
    warnings = []
    if result.partial:
        warnings.append("partial result: symbolic-state cap hit; range is "
                        "NOT sound for min/max claims")
    if result.horizon_hit:
        warnings.append("time horizon reached; matches beyond the horizon "
                        "are not covered")
    return FeatureRange(lo, hi, result.complete, warnings)


def rat_if(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)
