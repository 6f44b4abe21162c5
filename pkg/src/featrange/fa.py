"""Monitor automaton for a grounded feature declaration.

Locations q_1 .. q_{n+1} track how much of the sequence expression has
matched; q_F is the accepting location.  The assignment list of each
sub-expression is augmented with a leading ``lt := 0`` (so the step timer is
zeroed before user assignments read ``$time``) and serialized through pause
locations, one per assignment beyond the first.  Timers: ``t`` accumulates
global match time, ``lt`` measures time since the previous sub-expression
match; both tick at rate 1 outside pause locations and freeze inside them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import FiaSemanticError
from .fia import Assign, DelayInterval, FeatureDecl, SubExpr, TIME_VAR
from .linexpr import LinExpr

T_VAR = "t"
LT_VAR = "lt"


@dataclass(frozen=True)
class FaEdge:
    src: str
    dst: str
    sub_index: Optional[int]  # 1-based; set on the guarded (first) hop
    guard: Optional[SubExpr]  # None means guard true
    timing: Optional[DelayInterval]  # lt constraint, sub-expressions >= 2
    reset: Optional[tuple[str, LinExpr]]  # single ordered reset
    feature_write: bool = False


@dataclass
class FeatureAutomaton:
    decl: FeatureDecl
    locations: tuple[str, ...]
    pause_set: frozenset[str]
    feature_vars: tuple[str, ...]  # V = locals + feature name
    timers: tuple[str, ...]  # C = (t, lt)
    edges: tuple[FaEdge, ...]
    final_loc: str = "qF"

    @property
    def n_subexprs(self) -> int:
        return len(self.decl.seq)

    def out_edges(self, loc: str) -> list[FaEdge]:
        return [e for e in self.edges if e.src == loc]

    def augmented_assigns(self, i: int) -> list[tuple[str, LinExpr]]:
        """Ordered reset list of sub-expression i (1-based), lt first."""
        out: list[tuple[str, LinExpr]] = [(LT_VAR, LinExpr.constant(0))]
        for a in self.decl.seq[i - 1].assigns:
            out.append((a.local, _compile_time(a.rhs)))
        return out

    def timer_semantics(self) -> dict[str, dict[str, Fraction]]:
        """Per-location rates for every feature-automaton variable."""
        table: dict[str, dict[str, Fraction]] = {}
        for loc in self.locations:
            paused = loc in self.pause_set
            rates = {v: Fraction(0) for v in self.feature_vars}
            clock = Fraction(0) if paused else Fraction(1)
            rates[T_VAR] = clock
            rates[LT_VAR] = clock
            table[loc] = rates
        return table

    def to_dot(self) -> str:
        lines = ["digraph feature_automaton {", "    rankdir=LR;"]
        for loc in self.locations:
            shape = ("doublecircle" if loc == self.final_loc
                     else "box" if loc in self.pause_set else "circle")
            lines.append(f'    "{loc}" [shape={shape}];')
        for e in self.edges:
            bits = []
            if e.guard is not None:
                bits.append(str(e.guard).replace('"', "'"))
            if e.timing is not None:
                bits.append(f"lt in {e.timing}")
            if e.reset is not None:
                bits.append(f"{e.reset[0]} := {e.reset[1]}")
            label = "\\n".join(bits)
            lines.append(f'    "{e.src}" -> "{e.dst}" [label="{label}"];')
        lines.append("}")
        return "\n".join(lines)


def _compile_time(e: LinExpr) -> LinExpr:
    """$time reads the global timer t."""
    return e.substitute({TIME_VAR: LinExpr.var(T_VAR)})


def build_feature_automaton(decl: FeatureDecl) -> FeatureAutomaton:
    """Construct the monitor automaton for a grounded declaration."""
    if not decl.grounded:
        raise FiaSemanticError(
            f"feature '{decl.name}' still has parameters "
            f"{decl.params}; ground it first")
    reserved = {T_VAR, LT_VAR}
    clash = reserved & (set(decl.locals) | {decl.name})
    if clash:
        raise FiaSemanticError(f"identifiers {sorted(clash)} are reserved "
                               "for the monitor timers")

    n = len(decl.seq)
    fa = FeatureAutomaton(decl, (), frozenset(), (), (T_VAR, LT_VAR), ())
    locations = [f"q{i}" for i in range(1, n + 2)]
    pause: list[str] = []
    edges: list[FaEdge] = []

    for i in range(1, n + 1):
        assigns = [(LT_VAR, LinExpr.constant(0))]
        for a in decl.seq[i - 1].assigns:
            assigns.append((a.local, _compile_time(a.rhs)))
        k = len(assigns)
        timing = decl.delays[i - 2] if i >= 2 else None
        guard = decl.seq[i - 1]
        if k == 1:
            edges.append(FaEdge(f"q{i}", f"q{i+1}", i, guard, timing,
                                assigns[0]))
            continue
        chain = [f"q{i}_R{j}" for j in range(1, k)]
        pause.extend(chain)
        hops = [f"q{i}"] + chain + [f"q{i+1}"]
        for j in range(k):
            edges.append(FaEdge(
                hops[j], hops[j + 1],
                i if j == 0 else None,
                guard if j == 0 else None,
                timing if j == 0 else None,
                assigns[j]))

    edges.append(FaEdge(f"q{n+1}", "qF", None, None, None,
                        (decl.name, decl.feature_expr), feature_write=True))

    all_locs = tuple(locations) + tuple(pause) + ("qF",)
    pause_set = frozenset(pause) | {f"q{n+1}", "qF"}
    return FeatureAutomaton(
        decl, all_locs, pause_set,
        tuple(decl.locals) + (decl.name,), (T_VAR, LT_VAR), tuple(edges))
