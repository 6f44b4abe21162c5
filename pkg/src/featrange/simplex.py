"""Exact two-phase simplex over rationals.

Solves  max/min c.x  subject to  A x (<=|==) b  with sign-free variables.
Input and output are `fractions.Fraction`; internally rows are integer
vectors and pivots use the Edmonds fraction-free Gauss-Jordan update

    new[i][j] = (row[i][j] * p - pivrow[j] * row[i][pj]) // prev

whose division is exact, keeping entries the size of minors of the input
instead of growing multiplicatively.  Both phase cost rows are carried
through every pivot so the scheme applies to them too.  Pivoting uses a
Dantzig-style rule with a Bland fallback, so it terminates and every
optimum, point and infeasibility verdict is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Optional, Sequence

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"

# When enabled (tests), every Bareiss division is checked to be exact.
PARANOID = False


class SimplexInternalError(AssertionError):
    """An internal exactness invariant failed; indicates a solver bug."""


@dataclass
class LpResult:
    status: str
    value: Optional[Fraction] = None
    point: Optional[list[Fraction]] = None


class _Tableau:
    """Integer tableau with fraction-free pivoting.

    `rows` are the constraint rows (last entry = rhs); `costs` is a list of
    objective rows updated alongside.  All rows share the pivot history, the
    precondition for the exact Bareiss division by `prev`.
    """

    def __init__(self, rows: list[list[int]], basis: list[int]):
        self.rows = rows
        self.basis = basis
        self.costs: list[list[int]] = []
        self.prev = 1

    def pivot(self, pi: int, pj: int) -> None:
        rows = self.rows
        if rows[pi][pj] < 0:
            rows[pi] = [-v for v in rows[pi]]
        piv_row = rows[pi]
        p = piv_row[pj]
        prev = self.prev

        if PARANOID:
            def div(x: int) -> int:
                q, r = divmod(x, prev)
                if r:
                    raise SimplexInternalError("inexact Bareiss division")
                return q
        else:
            def div(x: int) -> int:
                return x // prev

        def update(row: list[int]) -> list[int]:
            f = row[pj]
            if f:
                return [div(a * p - b * f) for a, b in zip(row, piv_row)]
            if p != prev:
                return [div(a * p) for a in row]
            return row

        for i in range(len(rows)):
            if i != pi:
                rows[i] = update(rows[i])
        for k in range(len(self.costs)):
            self.costs[k] = update(self.costs[k])
        self.basis[pi] = pj
        self.prev = p

    def basic_value(self, i: int) -> Fraction:
        return Fraction(self.rows[i][-1], self.rows[i][self.basis[i]])

    def optimize(self, ci: int, n_cols: int) -> str:
        """Pivot until cost row `ci` has no negative entry or unboundedness
        shows.  Dantzig's rule on the (positively scaled) cost row, falling
        back to Bland's rule after a pivot budget to guarantee termination.
        """
        rows = self.rows
        budget = 12 * (len(rows) + n_cols) + 200
        pivots = 0
        while True:
            cost = self.costs[ci]  # pivot() rebinds cost rows
            enter = -1
            if pivots < budget:
                best = 0
                for j in range(n_cols):
                    if cost[j] < best:
                        best = cost[j]
                        enter = j
            else:  # Bland: first improving column
                for j in range(n_cols):
                    if cost[j] < 0:
                        enter = j
                        break
            if enter < 0:
                return OPTIMAL
            best_i = -1
            best_num = best_den = 0
            for i, row in enumerate(rows):
                a = row[enter]
                if a > 0:
                    num, den = row[-1], a
                    if best_i < 0 or num * best_den < best_num * den or (
                            num * best_den == best_num * den
                            and self.basis[i] < self.basis[best_i]):
                        best_i, best_num, best_den = i, num, den
            if best_i < 0:
                return UNBOUNDED
            self.pivot(best_i, enter)
            pivots += 1


def _int_row(coeffs: Sequence[Fraction], rhs: Fraction) -> tuple[list[int], int]:
    denom = lcm(rhs.denominator, *(c.denominator for c in coeffs)) \
        if coeffs else rhs.denominator
    return [int(c * denom) for c in coeffs], int(rhs * denom)


def solve_lp(n_vars: int,
             rows_le: Sequence[tuple[Sequence[Fraction], Fraction]],
             rows_eq: Sequence[tuple[Sequence[Fraction], Fraction]],
             objective: Sequence[Fraction],
             maximize: bool = True) -> LpResult:
    """Optimize over {x in Q^n | A_le x <= b_le, A_eq x == b_eq}.

    Variables are unrestricted in sign; internally x_i = u_i - s with a
    single shared shift variable s >= 0 (column n_vars), so each row keeps
    its sparsity instead of doubling.
    """
    n_le = len(rows_le)
    shift_col = n_vars
    n_struct = n_vars + 1 + n_le

    raw: list[list[int]] = []

    def build(coeffs: Sequence[Fraction], rhs: Fraction,
              slack: Optional[int]) -> list[int]:
        icoeffs, irhs = _int_row(list(coeffs), rhs)
        row = [0] * (n_struct + 1)
        total = 0
        for j, c in enumerate(icoeffs):
            if c:
                row[j] = c
                total += c
        row[shift_col] = -total
        if slack is not None:
            row[n_vars + 1 + slack] = 1
        row[-1] = irhs
        return row

    for i, (coeffs, rhs) in enumerate(rows_le):
        raw.append(build(coeffs, rhs, i))
    for coeffs, rhs in rows_eq:
        raw.append(build(coeffs, rhs, None))
    for i, row in enumerate(raw):
        if row[-1] < 0:
            raw[i] = [-v for v in row]

    basis: list[int] = []
    art_rows: list[int] = []
    for i, row in enumerate(raw):
        slack_col = n_vars + 1 + i if i < n_le else -1
        if slack_col >= 0 and row[slack_col] > 0:
            basis.append(slack_col)
        else:
            basis.append(-1)
            art_rows.append(i)

    n_cols = n_struct
    n_art = len(art_rows)
    if n_art:
        art_base = n_cols
        n_cols += n_art
        for row in raw:
            rhs = row.pop()
            row.extend([0] * n_art)
            row.append(rhs)
        for k, i in enumerate(art_rows):
            raw[i][art_base + k] = 1
            basis[i] = art_base + k

    tab = _Tableau(raw, basis)

    # Phase-2 cost row is carried from the start so Bareiss divisibility
    # holds for it; entries at basic columns are zeroed by the pivots.
    obj = [Fraction(c) if maximize else -Fraction(c) for c in objective]
    denom = lcm(1, *(c.denominator for c in obj)) if obj else 1
    cost2 = [0] * (n_cols + 1)
    total = 0
    for j in range(n_vars):
        v = int(obj[j] * denom)
        cost2[j] = -v
        total += v
    cost2[shift_col] = total
    tab.costs.append(cost2)

    if n_art:
        cost1 = [0] * (n_cols + 1)
        for k in range(n_art):
            cost1[art_base + k] = 1
        for i in art_rows:
            # reduce against the unit artificial column (prev == 1 here)
            row = raw[i]
            cost1 = [a - b for a, b in zip(cost1, row)]
        tab.costs.append(cost1)
        status = tab.optimize(1, n_cols)
        tab.costs.pop()
        infeas = Fraction(0)
        for i, b in enumerate(tab.basis):
            if b >= art_base:
                infeas += tab.basic_value(i)
        if status == UNBOUNDED or infeas != 0:
            return LpResult(INFEASIBLE)
        for i in range(len(tab.rows)):
            if tab.basis[i] >= art_base:
                col = next((j for j in range(art_base)
                            if tab.rows[i][j] != 0), None)
                if col is not None:
                    tab.pivot(i, col)
        # forbid artificial columns from re-entering
        n_cols = art_base

    status = tab.optimize(0, n_cols)
    if status == UNBOUNDED:
        return LpResult(UNBOUNDED)

    assign: dict[int, Fraction] = {}
    for i in range(len(tab.rows)):
        assign[tab.basis[i]] = tab.basic_value(i)
    shift = assign.get(shift_col, Fraction(0))
    point = [assign.get(j, Fraction(0)) - shift for j in range(n_vars)]
    value = sum((Fraction(c) * point[j] for j, c in enumerate(objective)),
                Fraction(0))

    # Safety net: the reported point must satisfy the input system exactly.
    for coeffs, rhs in rows_le:
        if _dot(coeffs, point) > rhs:
            raise SimplexInternalError("optimal point violates a <= row")
    for coeffs, rhs in rows_eq:
        if _dot(coeffs, point) != rhs:
            raise SimplexInternalError("optimal point violates an == row")
    return LpResult(OPTIMAL, value, point)


def _dot(coeffs: Sequence[Fraction], point: list[Fraction]) -> Fraction:
    return sum((Fraction(c) * x for c, x in zip(coeffs, point)), Fraction(0))
