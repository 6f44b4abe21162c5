"""Exact linear expressions over named variables.

The whole symbolic side of the toolkit (parsers, product construction,
reachability, corner search) works with `fractions.Fraction` coefficients so
that every guard, reset and optimum is computed without rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Union

Rat = Fraction
RatLike = Union[Fraction, int, str]


def rat(x: RatLike) -> Fraction:
    """Exact conversion; strings may use decimal or scientific notation."""
    if isinstance(x, Fraction):
        return x
    return Fraction(x)


@dataclass(frozen=True)
class LinExpr:
    """Linear map ``sum(coeff * var) + const`` with exact coefficients.

    Immutable; arithmetic returns new expressions.  Variables with a zero
    coefficient are dropped so each variable appears at most once.
    """

    terms: tuple[tuple[str, Fraction], ...] = ()
    const: Fraction = field(default_factory=lambda: Fraction(0))

    @staticmethod
    def make(coeffs: Mapping[str, RatLike] | None = None,
             const: RatLike = 0) -> "LinExpr":
        items = []
        for v, c in (coeffs or {}).items():
            c = rat(c)
            if c != 0:
                items.append((v, c))
        items.sort(key=lambda t: t[0])
        return LinExpr(tuple(items), rat(const))

    @staticmethod
    def var(name: str) -> "LinExpr":
        return LinExpr(((name, Fraction(1)),), Fraction(0))

    @staticmethod
    def constant(value: RatLike) -> "LinExpr":
        return LinExpr((), rat(value))

    def coeff(self, name: str) -> Fraction:
        for v, c in self.terms:
            if v == name:
                return c
        return Fraction(0)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.terms)

    def is_constant(self) -> bool:
        return not self.terms

    def __add__(self, other: "LinExpr | RatLike") -> "LinExpr":
        if not isinstance(other, LinExpr):
            other = LinExpr.constant(other)
        acc = {v: c for v, c in self.terms}
        for v, c in other.terms:
            acc[v] = acc.get(v, Fraction(0)) + c
        return LinExpr.make(acc, self.const + other.const)

    def __neg__(self) -> "LinExpr":
        return self.scale(Fraction(-1))

    def __sub__(self, other: "LinExpr | RatLike") -> "LinExpr":
        if not isinstance(other, LinExpr):
            other = LinExpr.constant(other)
        return self + (-other)

    def scale(self, k: RatLike) -> "LinExpr":
        k = rat(k)
        return LinExpr.make({v: c * k for v, c in self.terms}, self.const * k)

    def substitute(self, env: Mapping[str, "LinExpr"]) -> "LinExpr":
        """Replace variables by expressions (used by resets and grounding)."""
        out = LinExpr.constant(self.const)
        for v, c in self.terms:
            repl = env.get(v)
            out = out + (repl.scale(c) if repl is not None else
                         LinExpr.make({v: c}))
        return out

    def evaluate(self, env: Mapping[str, RatLike]) -> Fraction:
        val = self.const
        for v, c in self.terms:
            if v not in env:
                raise KeyError(f"unbound variable '{v}'")
            val += c * rat(env[v])
        return val

    def evaluate_float(self, env: Mapping[str, float]) -> float:
        val = float(self.const)
        for v, c in self.terms:
            val += float(c) * env[v]
        return val

    def to_vector(self, order: Iterable[str]) -> list[Fraction]:
        lookup = dict(self.terms)
        return [lookup.get(v, Fraction(0)) for v in order]

    def __str__(self) -> str:
        if not self.terms:
            return format_rat(self.const)
        parts: list[str] = []
        for v, c in self.terms:
            if c == 1:
                piece = v
            elif c == -1:
                piece = f"-{v}"
            else:
                piece = f"{format_rat(c)}*{v}"
            if parts and not piece.startswith("-"):
                parts.append("+ " + piece)
            elif parts:
                parts.append("- " + piece[1:])
            else:
                parts.append(piece)
        if self.const != 0:
            sign = "+" if self.const > 0 else "-"
            parts.append(f"{sign} {format_rat(abs(self.const))}")
        return " ".join(parts)


def format_rat(x: Fraction) -> str:
    """Render a rational exactly: integers plainly, otherwise p/q."""
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def rat_to_decimal(x: Fraction, digits: int = 12) -> str:
    """Round-to-nearest decimal string with `digits` significant digits."""
    if x == 0:
        return "0"
    sign = "-" if x < 0 else ""
    x = abs(x)
    exp = 0
    while x >= 10:
        x /= 10
        exp += 1
    while x < 1:
        x *= 10
        exp -= 1
    scaled = x * Fraction(10) ** (digits - 1)
    digits_int = scaled.numerator // scaled.denominator
    if 2 * (scaled - digits_int) >= 1:
        digits_int += 1
    s = str(digits_int)
    if len(s) > digits:  # rounding overflowed, e.g. 9.99 -> 10.0
        exp += len(s) - digits
        s = s[:digits]
    mantissa = s[0] + ("." + s[1:].rstrip("0") if s[1:].rstrip("0") else "")
    if -4 <= exp < digits:
        # expand without exponent
        num = s
        point = exp + 1
        if point >= len(num):
            return sign + num + "0" * (point - len(num))
        if point <= 0:
            return sign + "0." + "0" * (-point) + num.rstrip("0")
        frac = num[point:].rstrip("0")
        return sign + num[:point] + ("." + frac if frac else "")
    return f"{sign}{mantissa}e{exp}"
