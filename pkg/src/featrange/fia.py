"""FIA feature declarations: parsing, validation, desugaring, grounding.

A feature file holds one declaration:

    feature Name(p1, p2);
    begin
        var l1, l2;
        s1 ##[a:b] s2 ... ##[a:$] sn |-> Name = <linear expr>;
    end

where each sub-expression is a Boolean combination of predicates over real
variables (PORVs), location predicates ``state == Loc``, at most one event
``@+/@-/@(...)``, and an optional comma-separated assignment list.  ``$time``
reads the global match timer.  Comments start with ``//``; whitespace and
newlines are insignificant.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .errors import FiaSemanticError, FiaSyntaxError, MissingBinding, \
    UnsupportedEvent
from .linexpr import LinExpr, format_rat, rat

TIME_VAR = "$time"
STATE_VAR = "state"

GE, GT, LEQ, LTQ, EQQ = ">=", ">", "<=", "<", "=="
_COMPLEMENT = {GE: LTQ, GT: LEQ, LEQ: GT, LTQ: GE}


# --- AST --------------------------------------------------------------------

@dataclass(frozen=True)
class Porv:
    """Either a linear predicate ``expr rel 0`` or ``state == location``."""
    expr: Optional[LinExpr] = None
    rel: str = GE
    location: Optional[str] = None

    @property
    def is_loc(self) -> bool:
        return self.location is not None

    def __str__(self) -> str:
        if self.is_loc:
            return f"state == {self.location}"
        return f"{self.expr} {self.rel} 0"


@dataclass(frozen=True)
class Event:
    """``@edge(porv)`` with edge in {+, -, ~}; ~ means either edge."""
    edge: str
    porv: Porv

    def __str__(self) -> str:
        mark = {"+": "@+", "-": "@-", "~": "@"}[self.edge]
        return f"{mark}({self.porv})"


@dataclass(frozen=True)
class DelayInterval:
    """``[lo:hi]``; bounds are linear expressions until grounding makes them
    rational constants; hi None encodes ``$`` (unbounded)."""
    lo: LinExpr
    hi: Optional[LinExpr]

    def lo_value(self) -> Fraction:
        if not self.lo.is_constant():
            raise FiaSemanticError(f"delay bound '{self.lo}' not grounded")
        return self.lo.const

    def hi_value(self) -> Optional[Fraction]:
        if self.hi is None:
            return None
        if not self.hi.is_constant():
            raise FiaSemanticError(f"delay bound '{self.hi}' not grounded")
        return self.hi.const

    def __str__(self) -> str:
        hi = "$" if self.hi is None else str(self.hi)
        return f"[{self.lo}:{hi}]"


@dataclass(frozen=True)
class Assign:
    local: str
    rhs: LinExpr

    def __str__(self) -> str:
        return f"{self.local} = {self.rhs}"


@dataclass(frozen=True)
class SubExpr:
    """``D && E, A``: a DNF over PORVs, an optional event, assignments."""
    dnf: tuple[tuple[Porv, ...], ...]
    event: Optional[Event]
    assigns: tuple[Assign, ...]

    def __str__(self) -> str:
        parts = []
        disj = []
        for conj in self.dnf:
            inner = " && ".join(f"({p})" for p in conj)
            disj.append(f"({inner})" if len(self.dnf) > 1 else inner)
        if disj:
            parts.append(" || ".join(disj))
        if self.event is not None:
            parts.append(str(self.event))
        head = " && ".join(parts) if parts else "(1 >= 0)"
        if self.assigns:
            head += ", " + ", ".join(str(a) for a in self.assigns)
        return head


@dataclass(frozen=True)
class FeatureDecl:
    name: str
    params: tuple[str, ...]
    locals: tuple[str, ...]
    seq: tuple[SubExpr, ...]
    delays: tuple[DelayInterval, ...]
    feature_expr: LinExpr
    source: Optional[str] = field(default=None, compare=False)

    @property
    def grounded(self) -> bool:
        return not self.params

    def pretty(self) -> str:
        lines = [f"feature {self.name}({', '.join(self.params)});", "begin"]
        if self.locals:
            lines.append(f"    var {', '.join(self.locals)};")
        body = []
        for i, s in enumerate(self.seq):
            if i:
                body.append(f"##{self.delays[i-1]}")
            body.append(str(s))
        lines.append("    " + " ".join(body))
        lines.append(f"        |-> {self.name} = {self.feature_expr};")
        lines.append("end")
        return "\n".join(lines)


# --- tokenizer ---------------------------------------------------------------

_PUNCT = ("|->", "##", "@+", "@-", "&&", "||", "==", ">=", "<=", ":=",
          "@", "(", ")", ";", ",", "[", "]", ":", "=", ">", "<", "+",
          "-", "*", "/", "$")


@dataclass
class _Tok:
    kind: str  # ident | number | punct | time | eof
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text.startswith(TIME_VAR, i):
            toks.append(_Tok("time", TIME_VAR, line, col))
            i += len(TIME_VAR)
            col += len(TIME_VAR)
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
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
            toks.append(_Tok("number", text[i:j], line, col))
            col += j - i
            i = j
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                toks.append(_Tok("punct", p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            raise FiaSyntaxError(f"unexpected character {c!r}", line, col)
    toks.append(_Tok("eof", "", line, col))
    return toks


# --- parser ------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.next()
        if t.text != text:
            raise FiaSyntaxError(f"expected {text!r}, found {t.text!r}",
                                 t.line, t.col)
        return t

    def expect_ident(self) -> _Tok:
        t = self.next()
        if t.kind != "ident":
            raise FiaSyntaxError(f"expected identifier, found {t.text!r}",
                                 t.line, t.col)
        return t

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind != "ident" \
            or self.peek().text == text

    # expression parsing (linear arithmetic) -------------------------------

    def lin_expr(self) -> LinExpr:
        e = self.lin_term()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            t = self.lin_term()
            e = e + t if op == "+" else e - t
        return e

    def lin_term(self) -> LinExpr:
        e = self.lin_factor()
        while self.peek().text in ("*", "/"):
            op = self.next()
            f = self.lin_factor()
            if op.text == "*":
                if f.is_constant():
                    e = e.scale(f.const)
                elif e.is_constant():
                    e = f.scale(e.const)
                else:
                    raise FiaSemanticError(
                        f"{op.line}:{op.col}: nonlinear product")
            else:
                if not f.is_constant() or f.const == 0:
                    raise FiaSemanticError(
                        f"{op.line}:{op.col}: division by non-constant")
                e = e.scale(Fraction(1) / f.const)
        return e

    def lin_factor(self) -> LinExpr:
        t = self.peek()
        if t.text == "(":
            self.next()
            e = self.lin_expr()
            self.expect(")")
            return e
        if t.text == "-":
            self.next()
            return -self.lin_factor()
        if t.kind == "number":
            self.next()
            return LinExpr.constant(rat(t.text))
        if t.kind == "time":
            self.next()
            return LinExpr.var(TIME_VAR)
        if t.kind == "ident":
            self.next()
            return LinExpr.var(t.text)
        raise FiaSyntaxError(f"expected expression, found {t.text!r}",
                             t.line, t.col)

    # boolean layer ---------------------------------------------------------

    def bool_or(self) -> "_BoolNode":
        node = self.bool_and()
        while self.peek().text == "||":
            self.next()
            node = _BoolNode("or", (node, self.bool_and()))
        return node

    def bool_and(self) -> "_BoolNode":
        node = self.bool_atom()
        while self.peek().text == "&&":
            self.next()
            node = _BoolNode("and", (node, self.bool_atom()))
        return node

    def bool_atom(self) -> "_BoolNode":
        t = self.peek()
        if t.text in ("@+", "@-", "@"):
            self.next()
            edge = {"@+": "+", "@-": "-", "@": "~"}[t.text]
            self.expect("(")
            porv = self.porv()
            self.expect(")")
            return _BoolNode("event", (), Event(edge, porv))
        if t.text == "(":
            # lookahead: parenthesized boolean vs parenthesized linexpr start
            save = self.pos
            self.next()
            try:
                node = self.bool_or()
                self.expect(")")
                return node
            except (FiaSyntaxError, FiaSemanticError):
                self.pos = save
                return _BoolNode("porv", (), None, self.porv())
        return _BoolNode("porv", (), None, self.porv())

    def porv(self) -> Porv:
        t = self.peek()
        if t.kind == "ident" and t.text == STATE_VAR:
            save = self.pos
            self.next()
            if self.peek().text == "==":
                self.next()
                loc = self.expect_ident()
                return Porv(location=loc.text)
            self.pos = save
        lhs = self.lin_expr()
        op = self.next()
        if op.text not in (GE, GT, LEQ, LTQ, EQQ):
            raise FiaSyntaxError(f"expected relation, found {op.text!r}",
                                 op.line, op.col)
        rhs = self.lin_expr()
        return Porv(expr=lhs - rhs, rel=op.text)


@dataclass(frozen=True)
class _BoolNode:
    op: str  # and | or | event | porv
    kids: tuple = ()
    event: Optional[Event] = None
    porv: Optional[Porv] = None


def _to_dnf(node: _BoolNode) -> list[list[_BoolNode]]:
    if node.op in ("event", "porv"):
        return [[node]]
    left = _to_dnf(node.kids[0])
    right = _to_dnf(node.kids[1])
    if node.op == "or":
        return left + right
    return [a + b for a in left for b in right]


def _normalize_subexpr(node: _BoolNode, assigns: list[Assign],
                       pos: _Tok) -> SubExpr:
    disjuncts = _to_dnf(node)
    event: Optional[Event] = None
    dnf: list[tuple[Porv, ...]] = []
    for i, conj in enumerate(disjuncts):
        porvs = []
        conj_event = None
        for atom in conj:
            if atom.op == "event":
                if conj_event is not None:
                    raise FiaSemanticError(
                        f"{pos.line}:{pos.col}: more than one event in a "
                        "sub-expression")
                conj_event = atom.event
            else:
                porvs.append(atom.porv)
        if i == 0:
            event = conj_event
        elif conj_event != event:
            raise FiaSemanticError(
                f"{pos.line}:{pos.col}: events may not differ across "
                "disjuncts of a sub-expression")
        dnf.append(tuple(porvs))
    if event is not None and event.porv.is_loc and event.edge != "+":
        raise UnsupportedEvent(f"only @+ is supported on location "
                               f"predicates, got @{event.edge}")
    cleaned = tuple(c for c in dnf if c) or ()
    if len(cleaned) != len(dnf):
        # a disjunct with no PORVs (pure event) makes the DNF vacuous
        cleaned = ()
    return SubExpr(cleaned, event, tuple(assigns))


def parse_feature(text: str) -> FeatureDecl:
    """Parse one feature declaration; raises FiaSyntaxError /
    FiaSemanticError with source positions."""
    p = _Parser(text)
    p.expect("feature")
    name = p.expect_ident().text
    p.expect("(")
    params: list[str] = []
    if p.peek().text != ")":
        params.append(p.expect_ident().text)
        while p.peek().text == ",":
            p.next()
            params.append(p.expect_ident().text)
    p.expect(")")
    p.expect(";")
    p.expect("begin")
    locals_: list[str] = []
    if p.peek().text == "var":
        p.next()
        locals_.append(p.expect_ident().text)
        while p.peek().text == ",":
            p.next()
            locals_.append(p.expect_ident().text)
        p.expect(";")

    seq: list[SubExpr] = []
    delays: list[DelayInterval] = []
    while True:
        pos = p.peek()
        node = p.bool_or()
        assigns: list[Assign] = []
        while p.peek().text == ",":
            p.next()
            tgt = p.expect_ident()
            p.expect("=")
            rhs = p.lin_expr()
            assigns.append(Assign(tgt.text, rhs))
        seq.append(_normalize_subexpr(node, assigns, pos))
        if p.peek().text == "##":
            p.next()
            delays.append(_parse_delay(p))
            continue
        break
    p.expect("|->")
    fname_tok = p.expect_ident()
    p.expect("=")
    fexpr = p.lin_expr()
    p.expect(";")
    p.expect("end")

    decl = FeatureDecl(name, tuple(params), tuple(locals_), tuple(seq),
                       tuple(delays), fexpr, source=text)
    _validate(decl, fname_tok)
    return decl


def _parse_delay(p: _Parser) -> DelayInterval:
    tok = p.expect("[")
    lo = p.lin_expr()
    sep = p.next()
    if sep.text not in (":", ","):
        raise FiaSyntaxError(f"expected ':' in delay, found {sep.text!r}",
                             sep.line, sep.col)
    if p.peek().text == "$":
        p.next()
        hi = None
    else:
        hi = p.lin_expr()
    p.expect("]")
    if lo.is_constant() and lo.const < 0:
        raise FiaSemanticError(f"{tok.line}:{tok.col}: negative delay bound")
    if hi is not None and lo.is_constant() and hi.is_constant() \
            and lo.const > hi.const:
        raise FiaSemanticError(f"{tok.line}:{tok.col}: delay lower bound "
                               "exceeds upper bound")
    return DelayInterval(lo, hi)


def _validate(decl: FeatureDecl, fname_tok: _Tok) -> None:
    if len(decl.delays) != len(decl.seq) - 1:
        raise FiaSemanticError(
            f"{len(decl.seq)} sub-expressions need {len(decl.seq)-1} delays,"
            f" found {len(decl.delays)}")
    if fname_tok.text != decl.name:
        raise FiaSemanticError(
            f"{fname_tok.line}:{fname_tok.col}: consequent assigns "
            f"'{fname_tok.text}', expected feature name '{decl.name}'")
    declared = set(decl.locals)
    if len(declared) != len(decl.locals):
        raise FiaSemanticError("duplicate local variable declaration")
    if set(decl.params) & declared:
        raise FiaSemanticError("identifier is both parameter and local")
    assigned: set[str] = set()
    for s in decl.seq:
        for a in s.assigns:
            if a.local not in declared:
                raise FiaSemanticError(
                    f"assignment to undeclared local '{a.local}'")
            for v in a.rhs.variables:
                if v in declared and v not in assigned:
                    raise FiaSemanticError(
                        f"local '{v}' read before assignment")
            assigned.add(a.local)
    for v in decl.feature_expr.variables:
        if v not in declared and v not in decl.params:
            raise FiaSemanticError(
                f"feature expression uses '{v}' which is neither a local "
                "nor a parameter")


# --- desugaring --------------------------------------------------------------

def desugar_event(e: Event) -> tuple[Event, ...]:
    """Canonical positive-edge alternatives of an event.

    ``@-(P)`` rewrites to ``@+(~P)``; ``@(P)`` to both edges; equality
    anchors expand to rising/falling alternatives; strict relations are
    canonicalized to their non-strict crossing anchor.
    """
    if e.porv.is_loc:
        if e.edge != "+":
            raise UnsupportedEvent(
                f"@{e.edge}(state == {e.porv.location}) is not supported")
        return (e,)
    rel = e.porv.rel
    if e.edge == "~":
        if rel == EQQ:
            return desugar_event(Event("+", e.porv))
        comp = Porv(expr=e.porv.expr, rel=_COMPLEMENT[rel])
        return tuple(dict.fromkeys(
            desugar_event(Event("+", e.porv))
            + desugar_event(Event("+", comp))))
    if e.edge == "-":
        if rel == EQQ:
            raise UnsupportedEvent("@-(x == a) has no crossing direction")
        return desugar_event(Event("+", Porv(expr=e.porv.expr,
                                             rel=_COMPLEMENT[rel])))
    if rel == EQQ:
        return (Event("+", Porv(expr=e.porv.expr, rel=GE)),
                Event("+", Porv(expr=e.porv.expr, rel=LEQ)))
    if rel == GT:
        return (Event("+", Porv(expr=e.porv.expr, rel=GE)),)
    if rel == LTQ:
        return (Event("+", Porv(expr=e.porv.expr, rel=LEQ)),)
    return (e,)


# --- grounding ---------------------------------------------------------------

def resolve_params(decl: FeatureDecl,
                   bindings: Mapping[str, "Fraction | int | str"]
                   ) -> FeatureDecl:
    """Substitute parameter values, yielding a grounded declaration."""
    missing = [q for q in decl.params if q not in bindings]
    if missing:
        raise MissingBinding(f"unbound parameter(s): {', '.join(missing)}")
    extra = [q for q in bindings if q not in decl.params]
    if extra:
        warnings.warn(f"ignoring extra binding(s): {', '.join(extra)}",
                      stacklevel=2)
    env = {q: LinExpr.constant(rat(bindings[q])) for q in decl.params}

    def ground_expr(e: LinExpr) -> LinExpr:
        return e.substitute(env)

    def ground_porv(pv: Porv) -> Porv:
        if pv.is_loc:
            return pv
        return Porv(expr=ground_expr(pv.expr), rel=pv.rel)

    seq = []
    for s in decl.seq:
        dnf = tuple(tuple(ground_porv(pv) for pv in conj) for conj in s.dnf)
        ev = None if s.event is None else Event(
            s.event.edge, ground_porv(s.event.porv))
        assigns = tuple(Assign(a.local, ground_expr(a.rhs))
                        for a in s.assigns)
        seq.append(SubExpr(dnf, ev, assigns))
    delays = []
    for d in decl.delays:
        lo = ground_expr(d.lo)
        hi = None if d.hi is None else ground_expr(d.hi)
        if not lo.is_constant() or (hi is not None and not hi.is_constant()):
            raise FiaSemanticError(
                f"delay {d} still symbolic after grounding")
        if lo.const < 0:
            raise FiaSemanticError(f"delay {d}: negative lower bound")
        if hi is not None and lo.const > hi.const:
            raise FiaSemanticError(f"delay {d}: lower bound exceeds upper")
        delays.append(DelayInterval(lo, hi))
    return replace(decl, params=(), seq=tuple(seq), delays=tuple(delays),
                   feature_expr=ground_expr(decl.feature_expr))
