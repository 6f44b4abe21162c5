"""Product of a hybrid automaton with a feature monitor automaton.

The result is a plain hybrid automaton over X_F = X_H + locals + feature
variable + timers {t, lt} + level.  ``level`` is a rate-0 real variable that
folds match progress: it is 0 initially and is bumped by 1 on every edge
that matches the next sub-expression, so one copy of each model location
serves all levels.

Construction rules:
  * model edges are retained everywhere at level 0, and at level v >= 1
    wherever the pending sub-expression cannot match;
  * where the pending sub-expression's guard region is satisfiable, the
    location is split into a match cell and non-strict-complement cells, the
    match cell keeps only the level-advancing edge, and cell-boundary edges
    let flows enter the match region (first-match semantics);
  * crossing events ``@+(x >= a)`` / ``@+(x <= a)`` anchor on ``x == a``
    with the flow-sign side condition, realized by splitting on the anchor
    plane: the only way past the plane while a match is pending is the
    advancing edge;
  * location-entry events ``@+(state == L)`` ride the model edges into L:
    each such edge gets an advancing copy, and its plain copy is restricted
    to the non-matchable part while the match is pending;
  * ordered resets run through pause locations (all rates 0); the feature
    value is written on the final edge into the accepting location qF.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .errors import BoundViolation, UnsupportedEvent, ValidationError
from .fa import FeatureAutomaton, LT_VAR, T_VAR
from .fia import DelayInterval, Event, Porv, SubExpr, desugar_event
from .ha import AffineRow, Edge, HybridAutomaton, Location, RateInterval
from .linexpr import LinExpr
from .poly import LE, Polyhedron, row_of

LEVEL_VAR = "level"


# --- normalized sub-expression geometry --------------------------------------

@dataclass(frozen=True)
class CrossAlt:
    """Crossing-event alternative: x reaches `bound` moving in `direction`
    (+1 rising, -1 falling)."""
    var: str
    bound: Fraction
    direction: int


@dataclass(frozen=True)
class EntryAlt:
    """Location-entry event alternative: the instant of entering `loc`."""
    loc: str


@dataclass(frozen=True)
class Disjunct:
    loc_filter: Optional[str]
    rows: tuple[tuple[LinExpr, str], ...]  # (expr, rel) meaning expr rel 0
    infeasible: bool = False


@dataclass(frozen=True)
class SubSpec:
    index: int
    disjuncts: tuple[Disjunct, ...]
    alts: tuple  # CrossAlt / EntryAlt, empty when the sub-expression has
    # no event
    timing: Optional[DelayInterval]


@dataclass
class Lsha(HybridAutomaton):
    """The level-sequenced product; a HybridAutomaton plus bookkeeping."""
    final_loc: str = "qF"
    pause_locs: frozenset = frozenset()
    n_levels: int = 0
    feature_name: str = ""
    # product location -> (original model location, pending index, role)
    origin: dict = field(default_factory=dict)
    build_warnings: list = field(default_factory=list)

    def base_of(self, loc: str) -> Optional[str]:
        entry = self.origin.get(loc)
        return entry[0] if entry else None

    def non_pause_locations(self) -> list[str]:
        return [q for q in self.locations
                if q not in self.pause_locs and q != self.final_loc]

    def to_dot(self) -> str:
        lines = ["digraph lsha {", "    rankdir=LR;"]
        for q in self.locations:
            shape = ("doublecircle" if q == self.final_loc
                     else "box" if q in self.pause_locs else "circle")
            lines.append(f'    "{q}" [shape={shape}];')
        for e in self.edges:
            if e.stutter:
                continue
            mark = f" +s{e.advance}" if e.advance else ""
            lines.append(f'    "{e.src}" -> "{e.dst}" '
                         f'[label="{e.label}{mark}"];')
        lines.append("}")
        return "\n".join(lines)


# --- sub-expression normalization ---------------------------------------------

def _normalize_porv_rows(conj: Iterable[Porv], time_sub: Mapping[str, LinExpr]
                         ) -> Disjunct:
    loc: Optional[str] = None
    rows: list[tuple[LinExpr, str]] = []
    infeasible = False
    for pv in conj:
        if pv.is_loc:
            if loc is not None and loc != pv.location:
                infeasible = True
            loc = pv.location
            continue
        expr = pv.expr.substitute(time_sub)
        if pv.rel == "==":
            rows.append((expr, LE))
            rows.append((-expr, LE))
        elif pv.rel in (">=", ">"):
            rows.append((-expr, LE if pv.rel == ">=" else "<"))
        else:
            rows.append((expr, LE if pv.rel == "<=" else "<"))
    return Disjunct(loc, tuple(rows), infeasible)


def _event_alts(ev: Event, variables: tuple[str, ...]) -> tuple:
    alts = []
    for canon in desugar_event(ev):
        if canon.porv.is_loc:
            alts.append(EntryAlt(canon.porv.location))
            continue
        expr = canon.porv.expr
        vs = expr.variables
        if len(vs) != 1:
            raise UnsupportedEvent(
                f"event predicate '{expr} {canon.porv.rel} 0' is not of the "
                "form x ~ a after grounding")
        x = vs[0]
        if x not in variables:
            raise UnsupportedEvent(
                f"event variable '{x}' is not a model variable")
        c = expr.coeff(x)
        bound = -expr.const / c
        rising = (canon.porv.rel == ">=") == (c > 0)
        alts.append(CrossAlt(x, bound, +1 if rising else -1))
    return tuple(alts)


def _normalize_spec(sub: SubExpr, index: int, timing: Optional[DelayInterval],
                    variables: tuple[str, ...]) -> SubSpec:
    time_sub = {"$time": LinExpr.var(T_VAR)}
    if sub.dnf:
        disjuncts = tuple(_normalize_porv_rows(c, time_sub) for c in sub.dnf)
        disjuncts = tuple(d for d in disjuncts if not d.infeasible) \
            or (Disjunct(None, (), True),)
    else:
        disjuncts = (Disjunct(None, ()),)
    alts = _event_alts(sub.event, variables) if sub.event else ()
    return SubSpec(index, disjuncts, alts, timing)


def _timing_rows(timing: Optional[DelayInterval]
                 ) -> tuple[tuple[LinExpr, str], ...]:
    if timing is None:
        return ()
    rows: list[tuple[LinExpr, str]] = []
    lt = LinExpr.var(LT_VAR)
    lo = timing.lo_value()
    if lo != 0:
        rows.append((LinExpr.constant(lo) - lt, LE))  # lt >= lo
    hi = timing.hi_value()
    if hi is not None:
        rows.append((lt - LinExpr.constant(hi), LE))  # lt <= hi
    return tuple(rows)


def _nonstrict_complement(row: tuple[LinExpr, str]) -> tuple[LinExpr, str]:
    expr, _rel = row
    return (-expr, LE)


# --- split planning -----------------------------------------------------------

@dataclass
class CellPlan:
    """How a model location is represented while sub-expression p pends."""
    kind: str  # "porv" | "cross" | "entry" | "none" | "loose"
    pending: int
    cells: dict[str, Polyhedron] = field(default_factory=dict)
    match_cells: tuple[str, ...] = ()      # cells whose exits are deleted
    comp_cells: tuple[str, ...] = ()       # complement / approach cells
    disjunct: Optional[Disjunct] = None
    alt: Optional[CrossAlt] = None


class _Builder:
    def __init__(self, h: HybridAutomaton, fa: FeatureAutomaton):
        self.h = h
        self.fa = fa
        self.decl = fa.decl
        self.n = fa.n_subexprs
        reserved = {T_VAR, LT_VAR, LEVEL_VAR}
        clash = (set(fa.feature_vars) | reserved) & set(h.variables)
        if clash:
            raise ValidationError(
                f"model variables {sorted(clash)} clash with feature/"
                "monitor variables")
        self.xf: tuple[str, ...] = tuple(h.variables) + fa.feature_vars \
            + (T_VAR, LT_VAR, LEVEL_VAR)
        self.specs = [
            _normalize_spec(self.decl.seq[i - 1], i,
                            self.decl.delays[i - 2] if i >= 2 else None,
                            h.variables)
            for i in range(1, self.n + 1)]
        self.warnings: list[str] = []
        self.locations: dict[str, Location] = {}
        self.edges: list[Edge] = []
        self.origin: dict[str, tuple] = {}
        self.pause: set[str] = set()
        self._eid = 0
        self._accepts: dict[str, str] = {}
        self._chains: dict[tuple[str, int], str] = {}

    # --- small helpers ----------------------------------------------------

    def eid(self, tag: str) -> str:
        self._eid += 1
        return f"p{self._eid:04d}_{tag}"

    def poly(self, rows: Iterable[tuple[LinExpr, str]]) -> Polyhedron:
        return Polyhedron(self.xf, [row_of(self.xf, e, rel, 0)
                                    for e, rel in rows])

    def level_eq(self, v: int) -> Polyhedron:
        lv = LinExpr.var(LEVEL_VAR)
        return Polyhedron.from_ineqs(self.xf, [(lv, "=", v)])

    def inv_of(self, q: str) -> Polyhedron:
        return self.h.locations[q].invariant.embed(self.xf)

    def flows_of(self, q: str) -> dict[str, "RateInterval | AffineRow"]:
        flow = dict(self.h.locations[q].flow)
        one = RateInterval(Fraction(1), Fraction(1))
        zero = RateInterval(Fraction(0), Fraction(0))
        for v in self.fa.feature_vars:
            flow[v] = zero
        flow[T_VAR] = one
        flow[LT_VAR] = one
        flow[LEVEL_VAR] = zero
        return flow

    def zero_flows(self) -> dict[str, RateInterval]:
        zero = RateInterval(Fraction(0), Fraction(0))
        return {v: zero for v in self.xf}

    def add_location(self, name: str, inv: Polyhedron,
                     flow, origin: tuple, paused: bool = False) -> None:
        if name in self.locations:
            raise ValidationError(f"duplicate product location '{name}'")
        self.locations[name] = Location(name, inv, flow)
        self.origin[name] = origin
        if paused:
            self.pause.add(name)

    def add_edge(self, tag: str, src: str, dst: str, guard: Polyhedron,
                 reset: Mapping[str, LinExpr], label: str,
                 rate_sign=None, advance=None) -> None:
        self.edges.append(Edge(self.eid(tag), src, dst, label, guard,
                               dict(reset), rate_sign=rate_sign,
                               advance=advance))

    # --- geometry probes ----------------------------------------------------

    def disjunct_feasible(self, q: str, d: Disjunct,
                          extra: Iterable[tuple[LinExpr, str]] = ()) -> bool:
        if d.infeasible:
            return False
        if d.loc_filter is not None and d.loc_filter != q:
            return False
        region = self.inv_of(q).intersect(self.poly(list(d.rows)
                                                    + list(extra)))
        return not region.is_empty()

    def rate_of(self, q: str, x: str) -> "RateInterval | AffineRow":
        return self.h.locations[q].flow[x]

    def cross_sign_state(self, q: str, alt: CrossAlt) -> str:
        """'ok', 'zero' (identically 0 -> warn) or 'impossible'."""
        r = self.rate_of(q, alt.var)
        if isinstance(r, RateInterval):
            if r.lo == 0 and r.hi == 0:
                return "zero"
            if alt.direction > 0:
                return "ok" if r.hi > 0 else "impossible"
            return "ok" if r.lo < 0 else "impossible"
        expr = r.expr
        if expr.is_constant():
            if expr.const == 0:
                return "zero"
            if (expr.const > 0) != (alt.direction > 0):
                return "impossible"
            return "ok"
        return "ok"  # state-dependent sign; admitted via a guard row

    def cross_sign_rows(self, q: str, alt: CrossAlt
                        ) -> tuple[tuple[LinExpr, str], ...]:
        """Widened flow-sign condition for an affine rate (empty for
        rate intervals; those carry Edge.rate_sign instead)."""
        r = self.rate_of(q, alt.var)
        if isinstance(r, RateInterval):
            return ()
        expr = r.expr if alt.direction > 0 else -r.expr
        return ((-expr, LE),)  # expr >= 0, widened from strict

    # --- planning -----------------------------------------------------------

    def plan(self, q: str, p: int) -> CellPlan:
        """Representation of location q while sub-expression p is pending."""
        spec = self.specs[p - 1]
        if p == 1 or p > self.n:
            return CellPlan("none", p)
        trows = _timing_rows(spec.timing)

        if spec.alts and isinstance(spec.alts[0], EntryAlt):
            return CellPlan("entry", p)

        if spec.alts:  # crossing event
            usable = []
            for alt in spec.alts:
                plane = [(LinExpr.var(alt.var)
                          - LinExpr.constant(alt.bound), LE),
                         (LinExpr.constant(alt.bound)
                          - LinExpr.var(alt.var), LE)]
                fits = [d for d in spec.disjuncts
                        if self.disjunct_feasible(q, d, plane)]
                if not fits:
                    continue
                state = self.cross_sign_state(q, alt)
                if state == "zero":
                    msg = (f"event on '{alt.var}' undetectable in "
                           f"location '{q}': flow identically 0")
                    self.warnings.append(msg)
                    warnings.warn(msg)
                    continue
                if state == "impossible":
                    continue
                usable.append((alt, fits))
            if not usable:
                return CellPlan("none", p)
            if len(usable) > 1 or len(usable[0][1]) > 1:
                self.warnings.append(
                    f"first-match splitting skipped at '{q}' for "
                    f"sub-expression {p}: non-convex match geometry")
                return CellPlan("loose", p)
            alt, (disjunct,) = usable[0][0], tuple(usable[0][1])
            inv = self.inv_of(q)
            x = LinExpr.var(alt.var)
            b = LinExpr.constant(alt.bound)
            if alt.direction > 0:
                approach, far = (x - b, LE), (b - x, LE)  # x<=a | x>=a
            else:
                approach, far = (b - x, LE), (x - b, LE)
            cells = {
                f"{q}__s{p}_ap": inv.intersect(self.poly([approach])),
                f"{q}__s{p}_far": inv.intersect(self.poly([far])),
            }
            return CellPlan("cross", p, cells,
                            match_cells=(f"{q}__s{p}_far",),
                            comp_cells=(f"{q}__s{p}_ap",),
                            disjunct=disjunct, alt=alt)

        # pure PORV sub-expression
        fits = [d for d in spec.disjuncts if self.disjunct_feasible(q, d)]
        if not fits:
            return CellPlan("none", p)
        if len(fits) > 1:
            self.warnings.append(
                f"first-match splitting skipped at '{q}' for "
                f"sub-expression {p}: multiple feasible disjuncts")
            return CellPlan("loose", p)
        disjunct = fits[0]
        inv = self.inv_of(q)
        grows: list[tuple[LinExpr, str]] = list(disjunct.rows) + list(trows)
        cells: dict[str, Polyhedron] = {}
        gname = f"{q}__s{p}"
        cells[gname] = inv.intersect(self.poly(grows))
        comp = []
        for j in range(len(grows)):
            prefix = grows[:j] + [_nonstrict_complement(grows[j])]
            cname = f"{q}__s{p}_c{j}"
            cell = inv.intersect(self.poly(prefix))
            if cell.is_empty():
                continue
            cells[cname] = cell
            comp.append(cname)
        if not grows:
            # guard true everywhere in q: no complement, match cell only
            comp = []
        return CellPlan("porv", p, cells, match_cells=(gname,),
                        comp_cells=tuple(comp), disjunct=disjunct, alt=None)


def build_lsha(h: HybridAutomaton, fa: FeatureAutomaton) -> Lsha:
    b = _Builder(h, fa)
    n = b.n

    plans: dict[tuple[str, int], CellPlan] = {}
    for p in range(2, n + 1):
        for q in sorted(h.locations):
            plans[(q, p)] = b.plan(q, p)

    def rep(q: str, level: int) -> list[str]:
        """Product locations that represent model location q at `level`."""
        if level >= n:
            return []
        plan = plans.get((q, level + 1))
        if plan is None or not plan.cells:
            return [q]
        return list(plan.cells)

    # --- locations --------------------------------------------------------
    for q in sorted(h.locations):
        b.add_location(q, b.inv_of(q), b.flows_of(q), (q, None, "base"))
    for (q, p), plan in sorted(plans.items()):
        for name, inv in plan.cells.items():
            role = "match" if name in plan.match_cells else "comp"
            b.add_location(name, inv, b.flows_of(q), (q, p, role))
    b.add_location("qF", Polyhedron.universe(b.xf), b.zero_flows(),
                   (None, None, "final"), paused=True)

    def accept_pause(q: str) -> str:
        name = b._accepts.get(q)
        if name is None:
            name = f"{q}__accept"
            b.add_location(name, Polyhedron.universe(b.xf), b.zero_flows(),
                           (q, n + 1, "accept"), paused=True)
            fexpr = fa.decl.feature_expr.substitute(
                {"$time": LinExpr.var(T_VAR)})
            b.add_edge("feature", name, "qF", Polyhedron.universe(b.xf),
                       {fa.decl.name: fexpr}, "feature")
            b._accepts[q] = name
        return name

    def chain_through(q_exit: str, p: int, extra_first: Mapping[str, LinExpr]
                      ) -> tuple[str, dict[str, LinExpr]]:
        """Destination and first-hop reset for the advancing edge of
        sub-expression p anchored so the model continues at q_exit.

        Returns (dst, first_reset_additions); builds the pause chain on
        demand.  The chain applies the remaining ordered resets and exits to
        the level-(p) representation of q_exit (or the accept pause when p
        is the last sub-expression)."""
        assigns = fa.augmented_assigns(p)
        bump = {LEVEL_VAR: LinExpr.var(LEVEL_VAR) + 1,
                assigns[0][0]: assigns[0][1]}
        bump.update(extra_first)
        k = len(assigns)
        if k == 1:
            if p == n:
                return accept_pause(q_exit), bump
            # direct hop; caller duplicates per representative cell
            return f"@rep:{q_exit}", bump
        key = (q_exit, p)
        first = b._chains.get(key)
        if first is None:
            names = [f"{q_exit}__s{p}_R{j}" for j in range(1, k)]
            for nm in names:
                b.add_location(nm, Polyhedron.universe(b.xf), b.zero_flows(),
                               (q_exit, p, "pause"), paused=True)
            for j in range(1, k):
                reset = {assigns[j][0]: assigns[j][1]}
                src = names[j - 1]
                if j < k - 1:
                    b.add_edge("chain", src, names[j],
                               Polyhedron.universe(b.xf), reset, "tau")
                elif p == n:
                    b.add_edge("chain", src, accept_pause(q_exit),
                               Polyhedron.universe(b.xf), reset, "tau")
                else:
                    for dst in rep(q_exit, p):
                        b.add_edge("chain", src, dst,
                                   Polyhedron.universe(b.xf), reset, "tau")
            first = names[0]
            b._chains[key] = first
        return first, bump

    def emit_advance(tag: str, srcs: list[str], p: int, q_exit: str,
                     guard: Polyhedron, extra_reset: Mapping[str, LinExpr],
                     rate_sign=None) -> None:
        dst, reset = chain_through(q_exit, p, extra_reset)
        targets = rep(q_exit, p) if dst.startswith("@rep:") else [dst]
        for src in srcs:
            for d in targets:
                b.add_edge(tag, src, d, guard, reset, f"s{p}",
                           rate_sign=rate_sign, advance=p)

    def self_ok(d: Disjunct, q: str) -> bool:
        return not d.infeasible and d.loc_filter in (None, q)

    # --- advancing edges per (location, pending sub-expression) ------------
    for p in range(1, n + 1):
        spec = b.specs[p - 1]
        level = p - 1
        lvl = b.level_eq(level)
        trows = _timing_rows(spec.timing)

        if spec.alts and isinstance(spec.alts[0], EntryAlt):
            # rides the model edges into the target location(s)
            for alt in spec.alts:
                L = alt.loc
                if L not in h.locations:
                    continue
                for e in h.edges:
                    if e.stutter or e.dst != L or e.src == L:
                        continue
                    for d in spec.disjuncts:
                        if d.loc_filter not in (None, L) or d.infeasible:
                            continue
                        pulled = [(expr.substitute(e.reset), rel)
                                  for expr, rel in d.rows]
                        guard = e.guard.embed(b.xf) \
                            .intersect(b.poly(list(pulled) + list(trows))) \
                            .intersect(lvl)
                        srcs = [q for q in rep(e.src, level)]
                        emit_advance(f"adv_entry_{e.eid}", srcs, p, L,
                                     guard, dict(e.reset))
            continue

        for q in sorted(h.locations):
            plan = plans.get((q, p), CellPlan("none", p))
            if spec.alts:  # crossing event
                if plan.cells:  # split: single alternative, single disjunct
                    alt, disjunct = plan.alt, plan.disjunct
                    plane = LinExpr.var(alt.var) - LinExpr.constant(alt.bound)
                    rows = [(plane, LE), (-plane, LE)]
                    rows += list(disjunct.rows) + list(trows)
                    rows += list(b.cross_sign_rows(q, alt))
                    guard = b.inv_of(q).intersect(b.poly(rows)) \
                        .intersect(lvl)
                    sign = None
                    if isinstance(b.rate_of(q, alt.var), RateInterval):
                        sign = (alt.var, alt.direction)
                    emit_advance(f"adv_cross_{q}", list(plan.cells), p, q,
                                 guard, {}, rate_sign=sign)
                else:
                    srcs = rep(q, level) if p > 1 else [q]
                    for alt in spec.alts:
                        state = b.cross_sign_state(q, alt)
                        if state != "ok":
                            continue
                        plane = LinExpr.var(alt.var) \
                            - LinExpr.constant(alt.bound)
                        for d in spec.disjuncts:
                            if not self_ok(d, q):
                                continue
                            rows = [(plane, LE), (-plane, LE)]
                            rows += list(d.rows) + list(trows)
                            rows += list(b.cross_sign_rows(q, alt))
                            guard = b.inv_of(q).intersect(b.poly(rows)) \
                                .intersect(lvl)
                            if guard.is_empty():
                                continue
                            sign = None
                            if isinstance(b.rate_of(q, alt.var),
                                          RateInterval):
                                sign = (alt.var, alt.direction)
                            emit_advance(f"adv_cross_{q}", srcs, p, q,
                                         guard, {}, rate_sign=sign)
            else:  # pure PORV
                if plan.cells:
                    disjunct = plan.disjunct
                    rows = list(disjunct.rows) + list(trows)
                    guard = b.inv_of(q).intersect(b.poly(rows)) \
                        .intersect(lvl)
                    emit_advance(f"adv_porv_{q}", list(plan.match_cells),
                                 p, q, guard, {})
                else:
                    srcs = rep(q, level) if p > 1 else [q]
                    for d in spec.disjuncts:
                        if not self_ok(d, q):
                            continue
                        rows = list(d.rows) + list(trows)
                        guard = b.inv_of(q).intersect(b.poly(rows)) \
                            .intersect(lvl)
                        if guard.is_empty():
                            continue
                        emit_advance(f"adv_porv_{q}", srcs, p, q, guard, {})

    # --- retained model edges ----------------------------------------------
    for e in sorted(h.edges, key=lambda e: e.eid):
        if e.stutter:
            continue
        for v in range(0, n):
            p = v + 1
            spec = b.specs[p - 1]
            lvl = b.level_eq(v)
            guard = e.guard.embed(b.xf).intersect(lvl)

            srcs: list[str]
            if v == 0:
                srcs = [e.src]
            else:
                plan = plans.get((e.src, p))
                if plan and plan.cells:
                    srcs = list(plan.comp_cells)
                else:
                    srcs = [e.src]

            # entry-event pending at this level: edges into the event's
            # location are restricted to the non-matchable part.
            stairs: list[list[tuple[LinExpr, str]]] = [[]]
            if v >= 1 and spec.alts and isinstance(spec.alts[0], EntryAlt):
                trows = _timing_rows(spec.timing)
                match_rows: list[list[tuple[LinExpr, str]]] = []
                for alt in spec.alts:
                    if alt.loc != e.dst or e.src == e.dst:
                        continue
                    for d in spec.disjuncts:
                        if d.loc_filter not in (None, e.dst) or d.infeasible:
                            continue
                        pulled = [(expr.substitute(e.reset), rel)
                                  for expr, rel in d.rows]
                        match_rows.append(list(pulled) + list(trows))
                if match_rows:
                    stairs = _complement_product(match_rows)
                    if stairs is None:
                        b.warnings.append(
                            f"entry-event restriction skipped on {e.eid}: "
                            "too many complement combinations")
                        stairs = [[]]

            for srow in stairs:
                g = guard.intersect(b.poly(srow)) if srow else guard
                for src in srcs:
                    for dst in rep(e.dst, v):
                        b.add_edge(f"keep_{e.eid}", src, dst, g,
                                   dict(e.reset), e.label)

    # --- cell boundary edges -------------------------------------------------
    for (q, p), plan in sorted(plans.items()):
        if not plan.cells:
            continue
        lvl = b.level_eq(p - 1)
        univ = Polyhedron.universe(b.xf).intersect(lvl)
        if plan.kind == "porv":
            for c in plan.comp_cells:
                b.add_edge("bound", c, plan.match_cells[0], univ, {}, "tau")
            for c1 in plan.comp_cells:
                for c2 in plan.comp_cells:
                    if c1 != c2:
                        b.add_edge("bound", c1, c2, univ, {}, "tau")
        else:  # cross
            ap, far = plan.comp_cells[0], plan.match_cells[0]
            b.add_edge("bound", far, ap, univ, {}, "tau")
            # pass-through copies: crossings that are not matches; none when
            # every crossing matches (empty blocked set)
            trows = _timing_rows(b.specs[p - 1].timing)
            blocked = list(plan.disjunct.rows) + list(trows)
            if blocked:
                stairs = _complement_product([blocked])
                if stairs is None:
                    b.warnings.append(
                        f"pass-through restriction dropped at '{q}' for "
                        f"sub-expression {p}: too many pieces")
                    stairs = [[]]
                for srow in stairs:
                    g = univ.intersect(b.poly(srow))
                    if not g.is_empty():
                        b.add_edge("bound", ap, far, g, {}, "tau")

    # --- assemble -------------------------------------------------------------
    init_rows = [row_of(b.xf, LinExpr.var(v), "=", 0)
                 for v in b.xf if v not in h.variables]
    init_region = h.init_region.embed(b.xf).with_rows(init_rows)

    lsha = Lsha(b.xf, b.locations, b.edges, h.init_loc, init_region,
                dict(h.params),
                final_loc="qF", pause_locs=frozenset(b.pause),
                n_levels=n, feature_name=fa.decl.name, origin=b.origin,
                build_warnings=b.warnings)
    check_bounds(lsha, h, fa)
    return lsha


def _complement_product(groups: list[list[tuple[LinExpr, str]]],
                        cap: int = 16
                        ) -> Optional[list[list[tuple[LinExpr, str]]]]:
    """Convex pieces of the complement of a union of conjunctions.

    For one group [r1..rm] the staircase is { [r1..r_{j-1}, ~r_j] }; for a
    union, the complement is the cross product of per-group staircases.
    Returns None if the piece count would exceed `cap`.
    """
    pieces: list[list[tuple[LinExpr, str]]] = [[]]
    for rows in groups:
        if not rows:
            return []  # one group is always true: complement empty
        stairs = []
        for j in range(len(rows)):
            stairs.append(list(rows[:j]) + [_nonstrict_complement(rows[j])])
        pieces = [pc + st for pc in pieces for st in stairs]
        if len(pieces) > cap:
            return None
    return pieces


def check_bounds(lsha: Lsha, h: HybridAutomaton, fa: FeatureAutomaton
                 ) -> dict:
    """Verify the structural size bounds of the construction."""
    n_vars = len(lsha.variables)
    expect = len(h.variables) + len(fa.feature_vars) + len(fa.timers) + 1
    if n_vars != expect:
        raise BoundViolation(f"variable count {n_vars} != |X_H|+|V|+|C|+1 "
                             f"= {expect}")
    k = len(h.locations)
    bases = {lsha.origin[q][0] for q in lsha.non_pause_locations()}
    if len(bases) > k:
        raise BoundViolation(f"non-pause cells map onto {len(bases)} "
                             f"originals > k = {k}")
    n = fa.n_subexprs
    max_a = max(len(fa.augmented_assigns(i)) for i in range(1, n + 1))
    chain_pauses = [q for q in lsha.pause_locs
                    if lsha.origin.get(q, (None, None, ""))[2] == "pause"]
    limit = n * k * max(0, max_a - 1)
    if len(chain_pauses) > limit:
        raise BoundViolation(f"{len(chain_pauses)} pause locations exceed "
                             f"bound {limit}")
    return {
        "variables": n_vars,
        "non_pause_locations": len(lsha.non_pause_locations()),
        "base_locations": len(bases),
        "chain_pauses": len(chain_pauses),
        "pause_bound": limit,
        "k": k,
    }
