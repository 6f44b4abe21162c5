"""Convex polyhedra over named rational variables.

A `Polyhedron` is a conjunction of linear constraints `coeffs . x rel bound`
with rel in {<=, <, ==}.  Strict constraints are tracked syntactically but
widened to non-strict for every LP question; callers that care about
boundary-degenerate answers re-check strict rows on the returned points.

Everything is exact: emptiness, optimization (simplex), images under affine
maps and existential projection (Fourier-Motzkin with equality
substitution).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Mapping, Optional, Sequence

from .errors import DimensionMismatch
from .linexpr import LinExpr, format_rat, rat
from . import simplex

LE = "<="
LT = "<"
EQ = "=="

_REL_SET = (LE, LT, EQ)


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[Fraction, ...]
    rel: str
    bound: Fraction

    def scale(self, k: Fraction) -> "Constraint":
        """Multiply by k > 0 (keeps orientation)."""
        return Constraint(tuple(c * k for c in self.coeffs), self.rel,
                          self.bound * k)

    def widened(self) -> "Constraint":
        return Constraint(self.coeffs, LE, self.bound) if self.rel == LT \
            else self

    def holds(self, point: Sequence[Fraction]) -> bool:
        lhs = sum((c * x for c, x in zip(self.coeffs, point)), Fraction(0))
        if self.rel == LE:
            return lhs <= self.bound
        if self.rel == LT:
            return lhs < self.bound
        return lhs == self.bound

    def canonical(self) -> "Constraint":
        """Scale to a primitive integer vector (for deduplication)."""
        denom = lcm(self.bound.denominator,
                    *(c.denominator for c in self.coeffs)) \
            if self.coeffs else self.bound.denominator
        ints = [int(c * denom) for c in self.coeffs]
        b = int(self.bound * denom)
        g = 0
        for v in ints:
            g = gcd(g, v)
        g = gcd(g, b) if g == 0 else g
        if g > 1:
            ints = [v // g for v in ints]
            # bound need not stay integral under the coefficient gcd
            return Constraint(tuple(Fraction(v) for v in ints), self.rel,
                              Fraction(int(self.bound * denom), g))
        return Constraint(tuple(Fraction(v) for v in ints), self.rel,
                          Fraction(b))


class Polyhedron:
    """Immutable conjunction of linear constraints over an ordered var list."""

    __slots__ = ("vars", "rows", "_empty_cache")

    def __init__(self, variables: Sequence[str],
                 rows: Iterable[Constraint] = ()):
        object.__setattr__(self, "vars", tuple(variables))
        clean = []
        n = len(self.vars)
        for r in rows:
            if len(r.coeffs) != n:
                raise DimensionMismatch(
                    f"constraint arity {len(r.coeffs)} != {n}")
            if all(c == 0 for c in r.coeffs):
                ok = (r.bound >= 0 if r.rel == LE else
                      r.bound > 0 if r.rel == LT else r.bound == 0)
                if ok:
                    continue  # trivially true row
                clean = [_FALSE_ROW(n)]
                break
            clean.append(r)
        object.__setattr__(self, "rows", tuple(clean))
        object.__setattr__(self, "_empty_cache", None)

    # --- constructors ----------------------------------------------------

    @staticmethod
    def universe(variables: Sequence[str]) -> "Polyhedron":
        return Polyhedron(variables, ())

    @staticmethod
    def from_ineqs(variables: Sequence[str],
                   ineqs: Iterable[tuple[LinExpr, str, "LinExpr | Fraction | int"]]
                   ) -> "Polyhedron":
        """Build from (lhs, rel, rhs) triples; rel may also be >=, >, =."""
        rows = []
        for lhs, rel, rhs in ineqs:
            rows.append(row_of(variables, lhs, rel, rhs))
        return Polyhedron(variables, rows)

    def with_rows(self, extra: Iterable[Constraint]) -> "Polyhedron":
        return Polyhedron(self.vars, list(self.rows) + list(extra))

    # --- basic queries ---------------------------------------------------

    def __len__(self) -> int:
        return len(self.rows)

    def _check_same_space(self, other: "Polyhedron") -> None:
        if self.vars != other.vars:
            raise DimensionMismatch(
                f"variable spaces differ: {self.vars} vs {other.vars}")

    def intersect(self, other: "Polyhedron") -> "Polyhedron":
        self._check_same_space(other)
        return Polyhedron(self.vars, list(self.rows) + list(other.rows))

    def _lp_rows(self) -> tuple[list, list]:
        rows_le, rows_eq = [], []
        for r in self.rows:
            if r.rel == EQ:
                rows_eq.append((list(r.coeffs), r.bound))
            else:
                rows_le.append((list(r.coeffs), r.bound))
        return rows_le, rows_eq

    def is_empty(self) -> bool:
        """Emptiness of the widened (non-strict) polyhedron, via LP."""
        cached = self._empty_cache
        if cached is not None:
            return cached
        rows_le, rows_eq = self._lp_rows()
        res = simplex.solve_lp(len(self.vars), rows_le, rows_eq,
                               [Fraction(0)] * len(self.vars))
        empty = res.status == simplex.INFEASIBLE
        object.__setattr__(self, "_empty_cache", empty)
        return empty

    def feasible_point(self) -> Optional[dict[str, Fraction]]:
        rows_le, rows_eq = self._lp_rows()
        res = simplex.solve_lp(len(self.vars), rows_le, rows_eq,
                               [Fraction(0)] * len(self.vars))
        if res.status != simplex.OPTIMAL:
            return None
        return dict(zip(self.vars, res.point))

    def optimize(self, objective: LinExpr, direction: str
                 ) -> "OptOutcome":
        """Exact optimum of a linear objective; direction 'max' or 'min'."""
        obj_vec = objective.to_vector(self.vars)
        for v in objective.variables:
            if v not in self.vars:
                raise DimensionMismatch(f"objective variable '{v}' not in "
                                        f"space {self.vars}")
        rows_le, rows_eq = self._lp_rows()
        res = simplex.solve_lp(len(self.vars), rows_le, rows_eq, obj_vec,
                               maximize=(direction == "max"))
        if res.status == simplex.INFEASIBLE:
            return OptOutcome("infeasible")
        if res.status == simplex.UNBOUNDED:
            return OptOutcome("unbounded")
        return OptOutcome("optimal", res.value + objective.const,
                          dict(zip(self.vars, res.point)))

    def project_interval(self, var: str) -> Optional[tuple[Optional[Fraction],
                                                           Optional[Fraction]]]:
        """(lo, hi) of a coordinate; None bound = unbounded; None = empty."""
        e = LinExpr.var(var)
        lo = self.optimize(e, "min")
        if lo.status == "infeasible":
            return None
        hi = self.optimize(e, "max")
        return (lo.value if lo.status == "optimal" else None,
                hi.value if hi.status == "optimal" else None)

    def contains(self, other: "Polyhedron") -> bool:
        """other subseteq self, on the widened systems."""
        self._check_same_space(other)
        if other.is_empty():
            return True
        for r in self.rows:
            obj = LinExpr.make(dict(zip(self.vars, r.coeffs)))
            out = other.optimize(obj, "max")
            if out.status == "unbounded":
                return False
            if out.status == "optimal" and out.value > r.bound:
                return False
            if r.rel == EQ:
                out = other.optimize(obj, "min")
                if out.status == "unbounded" or (out.status == "optimal"
                                                 and out.value < r.bound):
                    return False
        return True

    def holds(self, point: Mapping[str, Fraction], widened: bool = False
              ) -> bool:
        vec = [rat(point[v]) for v in self.vars]
        rows = (r.widened() for r in self.rows) if widened else self.rows
        return all(r.holds(vec) for r in rows)

    # --- transformations -------------------------------------------------

    def embed(self, new_vars: Sequence[str]) -> "Polyhedron":
        """Reinterpret in a superspace (missing coordinates unconstrained)."""
        missing = set(self.vars) - set(new_vars)
        if missing:
            raise DimensionMismatch(f"cannot embed, lost vars {missing}")
        idx = {v: i for i, v in enumerate(new_vars)}
        rows = []
        for r in self.rows:
            coeffs = [Fraction(0)] * len(new_vars)
            for v, c in zip(self.vars, r.coeffs):
                coeffs[idx[v]] = c
            rows.append(Constraint(tuple(coeffs), r.rel, r.bound))
        return Polyhedron(new_vars, rows)

    def rename(self, mapping: Mapping[str, str]) -> "Polyhedron":
        return Polyhedron([mapping.get(v, v) for v in self.vars], self.rows)

    def eliminate(self, drop: Sequence[str]) -> "Polyhedron":
        """Existential projection; equality substitution where possible,
        Fourier-Motzkin otherwise."""
        rows = list(self.rows)
        keep_vars = [v for v in self.vars if v not in set(drop)]
        order = list(self.vars)
        for var in drop:
            j = order.index(var)
            rows = _eliminate_one(rows, j)
            for i, r in enumerate(rows):
                rows[i] = Constraint(r.coeffs[:j] + r.coeffs[j + 1:],
                                     r.rel, r.bound)
            order.pop(j)
        assert order == keep_vars
        return Polyhedron(keep_vars, _dedupe(rows))

    def affine_image(self, assignment: Mapping[str, LinExpr]) -> "Polyhedron":
        """Image under the simultaneous update  v := e_v(x)  (identity for
        unmentioned variables)."""
        changed = {v: e for v, e in assignment.items()
                   if e.terms != ((v, Fraction(1)),) or e.const != 0}
        if not changed:
            return self
        for v in changed:
            if v not in self.vars:
                raise DimensionMismatch(f"assigned variable '{v}' not in "
                                        f"space {self.vars}")
        primed = {v: f"{v}'" for v in changed}
        lifted_vars = list(self.vars) + [primed[v] for v in changed]
        rows = [r for r in self.embed(lifted_vars).rows]
        for v, e in changed.items():
            # v' - e(x) == 0
            expr = LinExpr.var(primed[v]) - e
            rows.append(row_of(lifted_vars, expr, EQ, 0))
        lifted = Polyhedron(lifted_vars, rows)
        projected = lifted.eliminate(list(changed))
        return projected.rename({p: v for v, p in primed.items()}) \
                        .reorder(self.vars)

    def reorder(self, variables: Sequence[str]) -> "Polyhedron":
        if set(variables) != set(self.vars):
            raise DimensionMismatch("reorder must keep the same variables")
        idx = [self.vars.index(v) for v in variables]
        rows = [Constraint(tuple(r.coeffs[i] for i in idx), r.rel, r.bound)
                for r in self.rows]
        return Polyhedron(variables, rows)

    def reduce(self) -> "Polyhedron":
        """Drop rows implied by the others (one LP per row)."""
        rows = _dedupe(list(self.rows))
        if self.is_empty():
            return Polyhedron(self.vars, [_FALSE_ROW(len(self.vars))])
        kept: list[Constraint] = []
        for i, r in enumerate(rows):
            if r.rel == EQ:
                kept.append(r)
                continue
            others = [x for k, x in enumerate(rows) if k != i
                      and (x in kept or k > i)]
            test = Polyhedron(self.vars, others)
            obj = LinExpr.make(dict(zip(self.vars, r.coeffs)))
            out = test.optimize(obj, "max")
            if out.status == "optimal" and (
                    out.value < r.bound
                    or (out.value == r.bound and r.rel == LE)):
                continue
            kept.append(r)
        return Polyhedron(self.vars, kept)

    def __str__(self) -> str:
        if not self.rows:
            return "true"
        parts = []
        for r in self.rows:
            e = LinExpr.make(dict(zip(self.vars, r.coeffs)))
            parts.append(f"{e} {r.rel} {format_rat(r.bound)}")
        return " & ".join(parts)

    def __repr__(self) -> str:
        return f"Polyhedron({self})"


@dataclass(frozen=True)
class OptOutcome:
    status: str  # optimal | unbounded | infeasible
    value: Optional[Fraction] = None
    point: Optional[dict[str, Fraction]] = None


def _FALSE_ROW(n: int) -> Constraint:
    return Constraint(tuple([Fraction(0)] * n), LE, Fraction(-1))


def row_of(variables: Sequence[str], lhs: LinExpr, rel: str,
           rhs: "LinExpr | Fraction | int") -> Constraint:
    """Normalize `lhs rel rhs` into coeffs.x rel' bound with rel' canonical."""
    if not isinstance(rhs, LinExpr):
        rhs = LinExpr.constant(rhs)
    diff = lhs - rhs
    flip = {">=": LE, ">": LT, "=": EQ}
    if rel in (">=", ">"):
        diff = -diff
        rel = flip[rel]
    elif rel == "=":
        rel = EQ
    if rel not in _REL_SET:
        raise ValueError(f"unknown relation {rel!r}")
    for v in diff.variables:
        if v not in variables:
            raise DimensionMismatch(f"variable '{v}' not in space "
                                    f"{tuple(variables)}")
    coeffs = tuple(diff.to_vector(variables))
    return Constraint(coeffs, rel, -diff.const)


def _eliminate_one(rows: list[Constraint], j: int) -> list[Constraint]:
    """Eliminate coordinate j (coefficients only; caller strips the column)."""
    pivot = next((r for r in rows if r.rel == EQ and r.coeffs[j] != 0), None)
    if pivot is not None:
        out = []
        for r in rows:
            if r is pivot:
                continue
            cj = r.coeffs[j]
            if cj == 0:
                out.append(r)
                continue
            k = cj / pivot.coeffs[j]
            coeffs = tuple(a - k * b for a, b in zip(r.coeffs, pivot.coeffs))
            out.append(Constraint(coeffs, r.rel, r.bound - k * pivot.bound))
        return out

    zero, upper, lower = [], [], []
    for r in rows:
        split = [r] if r.rel != EQ else [
            Constraint(r.coeffs, LE, r.bound),
            Constraint(tuple(-c for c in r.coeffs), LE, -r.bound)]
        for s in split:
            if s.coeffs[j] == 0:
                zero.append(s)
            elif s.coeffs[j] > 0:
                upper.append(s)
            else:
                lower.append(s)
    out = list(zero)
    for up in upper:
        for lo in lower:
            ku, kl = -lo.coeffs[j], up.coeffs[j]  # both positive
            coeffs = tuple(a * ku + b * kl
                           for a, b in zip(up.coeffs, lo.coeffs))
            rel = LT if LT in (up.rel, lo.rel) else LE
            out.append(Constraint(coeffs, rel,
                                  up.bound * ku + lo.bound * kl))
    return out


def _dedupe(rows: list[Constraint]) -> list[Constraint]:
    seen = {}
    for r in rows:
        c = r.canonical()
        key = (c.coeffs, c.rel)
        prev = seen.get(key)
        if prev is None:
            seen[key] = c
        elif c.rel == EQ and c.bound != prev.bound:
            n = len(c.coeffs)
            return [_FALSE_ROW(n)]  # conflicting equalities
        elif c.bound < prev.bound:
            seen[key] = c
    return list(seen.values())
