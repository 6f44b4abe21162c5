"""Hybrid-automaton data model, the `.ha` text format, and hybridization.

The `.ha` format (case-sensitive, `//` comments, `&` between conjuncts):

    var x1 x2;
    param V 4.2;
    location Open {
        inv: x1 >= 0 & x1 <= 15;
        flow: x1' = 38095.23*x2 - 40100.25*x1; x2' = [-1, 1];
    }
    edge Open -> Closed { label a; guard: x2 >= V; reset: x2 := 0; }
    init Closed { x1 = 0 & x2 = 0 }

Parameters are substituted as exact rationals while parsing.  Every location
must declare an invariant and a flow for every variable; each location gets
an implicit stutter self-loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .errors import ModelSyntaxError, UnboundedInvariant, ValidationError
from .linexpr import LinExpr, format_rat, rat
from .poly import Polyhedron, row_of


@dataclass(frozen=True)
class RateInterval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValidationError(f"rate interval [{self.lo}, {self.hi}] "
                                  "has lo > hi")

    def __str__(self) -> str:
        return f"[{format_rat(self.lo)}, {format_rat(self.hi)}]"


@dataclass(frozen=True)
class AffineRow:
    """Flow ``dx/dt = expr`` with expr linear over the model variables."""
    expr: LinExpr

    def __str__(self) -> str:
        return str(self.expr)


Rate = "RateInterval | AffineRow"


@dataclass(frozen=True)
class Location:
    name: str
    invariant: Polyhedron
    flow: Mapping[str, "RateInterval | AffineRow"]

    def is_rectangular(self) -> bool:
        return all(isinstance(r, RateInterval) for r in self.flow.values())


@dataclass(frozen=True)
class Edge:
    eid: str
    src: str
    dst: str
    label: str
    guard: Polyhedron
    reset: Mapping[str, LinExpr]  # missing entries are identity
    stutter: bool = False
    # product metadata (filled by the LSHA construction)
    rate_sign: Optional[tuple[str, int]] = None
    advance: Optional[int] = None  # sub-expression index if level-advancing

    def apply_reset(self, point: Mapping[str, Fraction]
                    ) -> dict[str, Fraction]:
        out = dict(point)
        for v, e in self.reset.items():
            out[v] = e.evaluate(point)
        return out


@dataclass(frozen=True)
class State:
    loc: str
    valuation: Mapping[str, Fraction]


@dataclass
class HybridAutomaton:
    variables: tuple[str, ...]
    locations: dict[str, Location]
    edges: list[Edge]
    init_loc: str
    init_region: Polyhedron
    params: dict[str, Fraction] = field(default_factory=dict)

    def location(self, name: str) -> Location:
        return self.locations[name]

    def out_edges(self, loc: str, with_stutter: bool = False) -> list[Edge]:
        return [e for e in self.edges
                if e.src == loc and (with_stutter or not e.stutter)]

    def in_edges(self, loc: str, with_stutter: bool = False) -> list[Edge]:
        return [e for e in self.edges
                if e.dst == loc and (with_stutter or not e.stutter)]

    def is_rectangular(self) -> bool:
        return all(l.is_rectangular() for l in self.locations.values())


# --- parsing -----------------------------------------------------------------

_RELS = ("<=", ">=", "==", "<", ">", "=")


class _Lexer:
    _PUNCT = ("->", ":=", "<=", ">=", "==", "{", "}", "(", ")", ";", ",",
              "[", "]", ":", "&", "'", "=", "<", ">", "+", "-", "*", "/")

    def __init__(self, text: str):
        self.toks: list[tuple[str, str, int]] = []  # kind, text, line
        i, line, n = 0, 1, len(text)
        while i < n:
            c = text[i]
            if c == "\n":
                line += 1
                i += 1
                continue
            if c.isspace():
                i += 1
                continue
            if text.startswith("//", i):
                while i < n and text[i] != "\n":
                    i += 1
                continue
            if c.isalpha() or c == "_":
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.toks.append(("ident", text[i:j], line))
                i = j
                continue
            if c.isdigit() or (c == "." and i + 1 < n
                               and text[i + 1].isdigit()):
                j = i
                while j < n and (text[j].isdigit() or text[j] == "."):
                    j += 1
                if j < n and text[j] in "eE":
                    k = j + 1
                    if k < n and text[k] in "+-":
                        k += 1
                    if k < n and text[k].isdigit():
                        j = k
                        while j < n and text[j].isdigit():
                            j += 1
                self.toks.append(("number", text[i:j], line))
                i = j
                continue
            for p in self._PUNCT:
                if text.startswith(p, i):
                    self.toks.append(("punct", p, line))
                    i += len(p)
                    break
            else:
                raise ModelSyntaxError(f"unexpected character {c!r}", line)
        self.toks.append(("eof", "", line))
        self.pos = 0

    def peek(self) -> tuple[str, str, int]:
        return self.toks[self.pos]

    def next(self) -> tuple[str, str, int]:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, text: str) -> tuple[str, str, int]:
        t = self.next()
        if t[1] != text:
            raise ModelSyntaxError(f"expected {text!r}, found {t[1]!r}", t[2])
        return t

    def ident(self) -> str:
        t = self.next()
        if t[0] != "ident":
            raise ModelSyntaxError(f"expected identifier, found {t[1]!r}",
                                   t[2])
        return t[1]


class _ModelParser:
    def __init__(self, text: str):
        self.lx = _Lexer(text)
        self.params: dict[str, Fraction] = {}
        self.variables: list[str] = []

    def lin_expr(self) -> LinExpr:
        e = self.lin_term()
        while self.lx.peek()[1] in ("+", "-"):
            op = self.lx.next()[1]
            t = self.lin_term()
            e = e + t if op == "+" else e - t
        return e

    def lin_term(self) -> LinExpr:
        e = self.lin_factor()
        while self.lx.peek()[1] in ("*", "/"):
            op, _, line = self.lx.next()[1], None, self.lx.peek()[2]
            f = self.lin_factor()
            if op == "*":
                if f.is_constant():
                    e = e.scale(f.const)
                elif e.is_constant():
                    e = f.scale(e.const)
                else:
                    raise ModelSyntaxError("nonlinear product", line)
            else:
                if not f.is_constant() or f.const == 0:
                    raise ModelSyntaxError("bad division", line)
                e = e.scale(Fraction(1) / f.const)
        return e

    def lin_factor(self) -> LinExpr:
        kind, text, line = self.lx.peek()
        if text == "(":
            self.lx.next()
            e = self.lin_expr()
            self.lx.expect(")")
            return e
        if text == "-":
            self.lx.next()
            return -self.lin_factor()
        if kind == "number":
            self.lx.next()
            return LinExpr.constant(rat(text))
        if kind == "ident":
            self.lx.next()
            if text in self.params:
                return LinExpr.constant(self.params[text])
            return LinExpr.var(text)
        raise ModelSyntaxError(f"expected expression, found {text!r}", line)

    def conjunction(self, terminators: tuple[str, ...]) -> Polyhedron:
        rows = []
        while True:
            lhs = self.lin_expr()
            kind, rel, line = self.lx.next()
            if rel not in _RELS:
                raise ModelSyntaxError(f"expected relation, found {rel!r}",
                                       line)
            rhs = self.lin_expr()
            rows.append(row_of(self.variables, lhs, rel, rhs))
            if self.lx.peek()[1] == "&":
                self.lx.next()
                continue
            break
        if self.lx.peek()[1] not in terminators:
            k, t, line = self.lx.peek()
            raise ModelSyntaxError(f"unexpected {t!r} in constraint list",
                                   line)
        return Polyhedron(self.variables, rows)


def parse_model(text: str) -> HybridAutomaton:
    """Parse and validate a `.ha` model; synthesizes stutter self-loops."""
    p = _ModelParser(text)
    lx = p.lx
    locations: dict[str, Location] = {}
    edges: list[Edge] = []
    init: Optional[tuple[str, Polyhedron]] = None
    edge_count = 0

    while lx.peek()[0] != "eof":
        kind, word, line = lx.next()
        if word == "var":
            while lx.peek()[1] != ";":
                p.variables.append(lx.ident())
            lx.expect(";")
        elif word == "param":
            name = lx.ident()
            sign = Fraction(1)
            if lx.peek()[1] == "-":
                lx.next()
                sign = Fraction(-1)
            knd, val, vline = lx.next()
            if knd != "number":
                raise ModelSyntaxError("param needs a numeric value", vline)
            p.params[name] = sign * rat(val)
            lx.expect(";")
        elif word == "location":
            name = lx.ident()
            if name in locations:
                raise ValidationError(f"duplicate location '{name}'")
            lx.expect("{")
            inv: Optional[Polyhedron] = None
            flow: dict[str, "RateInterval | AffineRow"] = {}
            while lx.peek()[1] != "}":
                _, section, sline = lx.next()
                if section == "inv":
                    lx.expect(":")
                    inv = p.conjunction((";",))
                    lx.expect(";")
                elif section == "flow":
                    lx.expect(":")
                    while lx.peek()[1] != "}":
                        v = lx.ident()
                        lx.expect("'")
                        lx.expect("=")
                        if lx.peek()[1] == "[":
                            lx.next()
                            lo = p.lin_expr()
                            lx.expect(",")
                            hi = p.lin_expr()
                            lx.expect("]")
                            if not (lo.is_constant() and hi.is_constant()):
                                raise ModelSyntaxError(
                                    "rate interval bounds must be constant",
                                    sline)
                            flow[v] = RateInterval(lo.const, hi.const)
                        else:
                            e = p.lin_expr()
                            if e.is_constant():
                                flow[v] = RateInterval(e.const, e.const)
                            else:
                                flow[v] = AffineRow(e)
                        lx.expect(";")
                else:
                    raise ModelSyntaxError(
                        f"unknown location section {section!r}", sline)
            lx.expect("}")
            if inv is None:
                raise ValidationError(
                    f"location '{name}' lacks an explicit invariant")
            locations[name] = Location(name, inv, flow)
        elif word == "edge":
            src = lx.ident()
            lx.expect("->")
            dst = lx.ident()
            lx.expect("{")
            label = f"a{edge_count}"
            guard = Polyhedron.universe(p.variables)
            reset: dict[str, LinExpr] = {}
            while lx.peek()[1] != "}":
                _, section, sline = lx.next()
                if section == "label":
                    label = lx.ident()
                    lx.expect(";")
                elif section == "guard":
                    lx.expect(":")
                    guard = p.conjunction((";",))
                    lx.expect(";")
                elif section == "reset":
                    lx.expect(":")
                    while True:
                        v = lx.ident()
                        lx.expect(":=")
                        reset[v] = p.lin_expr()
                        if lx.peek()[1] == ",":
                            lx.next()
                            continue
                        break
                    lx.expect(";")
                else:
                    raise ModelSyntaxError(f"unknown edge section "
                                           f"{section!r}", sline)
            lx.expect("}")
            edges.append(Edge(f"e{edge_count:03d}", src, dst, label, guard,
                              reset))
            edge_count += 1
        elif word == "init":
            name = lx.ident()
            lx.expect("{")
            region = p.conjunction(("}",))
            lx.expect("}")
            init = (name, region)
        else:
            raise ModelSyntaxError(f"unknown directive {word!r}", line)

    if not p.variables:
        raise ValidationError("model declares no variables")
    if init is None:
        raise ValidationError("model lacks an init block")
    ha = HybridAutomaton(tuple(p.variables), locations, edges,
                         init[0], init[1], p.params)
    validate(ha)
    _add_stutters(ha)
    return ha


def _add_stutters(ha: HybridAutomaton) -> None:
    for i, (name, loc) in enumerate(sorted(ha.locations.items())):
        ha.edges.append(Edge(f"stut{i:03d}", name, name, "stutter",
                             loc.invariant, {}, stutter=True))


def validate(ha: HybridAutomaton) -> None:
    """Well-formedness: ids resolve, flows complete, init inside invariant."""
    for name, loc in ha.locations.items():
        for v in ha.variables:
            if v not in loc.flow:
                raise ValidationError(
                    f"location '{name}' lacks a flow for '{v}'")
        for v in loc.flow:
            if v not in ha.variables:
                raise ValidationError(
                    f"location '{name}' has a flow for undeclared '{v}'")
        if loc.invariant.is_empty():
            raise ValidationError(f"location '{name}' has an empty "
                                  "invariant")
    for e in ha.edges:
        if e.src not in ha.locations or e.dst not in ha.locations:
            raise ValidationError(f"edge {e.eid} references unknown "
                                  "location")
        for v in e.reset:
            if v not in ha.variables:
                raise ValidationError(
                    f"edge {e.eid} resets undeclared variable '{v}'")
    if ha.init_loc not in ha.locations:
        raise ValidationError(f"init location '{ha.init_loc}' undefined")
    if ha.init_region.is_empty():
        raise ValidationError("init region is empty")
    if not ha.locations[ha.init_loc].invariant.contains(ha.init_region):
        raise ValidationError(
            f"init region is not contained in the invariant of "
            f"'{ha.init_loc}'")


# --- hybridization -----------------------------------------------------------

def hybridize(ha: HybridAutomaton) -> HybridAutomaton:
    """Replace every affine flow row by its exact rate interval over the
    location invariant (LP per row); rectangular rows pass through."""
    new_locs: dict[str, Location] = {}
    for name, loc in ha.locations.items():
        flow: dict[str, "RateInterval | AffineRow"] = {}
        for v, r in loc.flow.items():
            if isinstance(r, RateInterval):
                flow[v] = r
                continue
            lo = loc.invariant.optimize(r.expr, "min")
            hi = loc.invariant.optimize(r.expr, "max")
            if lo.status != "optimal" or hi.status != "optimal":
                raise UnboundedInvariant(name, v)
            flow[v] = RateInterval(lo.value, hi.value)
        new_locs[name] = Location(name, loc.invariant, flow)
    return HybridAutomaton(ha.variables, new_locs, list(ha.edges),
                           ha.init_loc, ha.init_region, dict(ha.params))


# --- emission ----------------------------------------------------------------

def to_model_text(ha: HybridAutomaton) -> str:
    """Emit the `.ha` format (round-trippable through parse_model)."""
    out = [f"var {' '.join(ha.variables)};", ""]
    for name in ha.locations:
        loc = ha.locations[name]
        out.append(f"location {name} {{")
        inv = _poly_text(loc.invariant) or "0 <= 1"
        out.append(f"    inv: {inv};")
        flows = []
        for v in ha.variables:
            flows.append(f"{v}' = {loc.flow[v]};")
        out.append("    flow: " + " ".join(flows))
        out.append("}")
    for e in ha.edges:
        if e.stutter:
            continue
        body = [f"label {e.label};"]
        g = _poly_text(e.guard)
        if g:
            body.append(f"guard: {g};")
        if e.reset:
            rs = ", ".join(f"{v} := {expr}" for v, expr in e.reset.items())
            body.append(f"reset: {rs};")
        out.append(f"edge {e.src} -> {e.dst} {{ " + " ".join(body) + " }")
    out.append(f"init {ha.init_loc} {{ "
               + (_poly_text(ha.init_region) or "0 <= 1") + " }")
    return "\n".join(out) + "\n"


def _poly_text(poly: Polyhedron) -> str:
    parts = []
    for r in poly.rows:
        e = LinExpr.make(dict(zip(poly.vars, r.coeffs)))
        rel = {"<=": "<=", "<": "<", "==": "=="}[r.rel]
        parts.append(f"{e} {rel} {format_rat(r.bound)}")
    return " & ".join(parts)
