"""Exact rational functions in the deformation parameter.

Scalars live in Q(s) with s = q^(1/2).  Every element of Q(q) is an element
of Q(s) with only even powers of s, and the extra square root is what lets a
trace-normalized intertwiner matrix and the normalized conjugate multiplet be
written down exactly (for SU_q(2) the normalizing factor is q^(-1/2)).

A Scalar is stored as ``num/den`` with ``num, den`` integer polynomials in s,
reduced by their polynomial gcd (integer content included) and with the
leading coefficient of ``den`` positive.  That representation is canonical, so
equality and hashing are representational.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import flint

from ..errors import NotASquare, ScalarParseError

_P = flint.fmpz_poly
_ZERO_P = _P([])
_ONE_P = _P([1])


def _canon(num, den):
    if den.is_zero():
        raise ZeroDivisionError("scalar with zero denominator")
    if num.is_zero():
        return _ZERO_P, _ONE_P
    if den.is_one():
        return num, den
    g = num.gcd(den)
    if not g.is_one():
        num = num / g
        den = den / g
    if den.leading_coefficient() < 0:
        num = -num
        den = -den
    return num, den


class Scalar:
    """Element of Q(q^(1/2)); immutable."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num=0, den=None, _reduced=False):
        if isinstance(num, Scalar):
            if den is not None:
                raise TypeError("Scalar(Scalar, den) is not supported")
            self.num, self.den = num.num, num.den
            self._hash = num._hash
            return
        if isinstance(num, Fraction):
            n, d = _P([num.numerator]), _P([num.denominator])
            if den is not None:
                raise TypeError("Scalar(Fraction, den) is not supported")
        elif isinstance(num, int):
            n = _P([num])
            d = _ONE_P
        else:
            n = num
            d = _ONE_P
        if den is not None:
            d = den if not isinstance(den, int) else _P([den])
        if not _reduced:
            n, d = _canon(n, d)
        self.num = n
        self.den = d
        self._hash = None

    # -- constructors -----------------------------------------------------
    @staticmethod
    def _make(num, den):
        s = object.__new__(Scalar)
        s.num, s.den = _canon(num, den)
        s._hash = None
        return s

    @staticmethod
    def q_power(k: int) -> "Scalar":
        """q**k for integer k."""
        return Scalar.s_power(2 * k)

    @staticmethod
    def s_power(k: int) -> "Scalar":
        """q**(k/2) for integer k."""
        if k >= 0:
            return Scalar(_P([0] * k + [1]), _ONE_P, _reduced=True)
        return Scalar(_ONE_P, _P([0] * (-k) + [1]), _reduced=True)

    @staticmethod
    def parse(text: str) -> "Scalar":
        return _parse_cached(text.strip())

    # -- predicates ---------------------------------------------------------
    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_one(self) -> bool:
        return self.num.is_one() and self.den.is_one()

    def is_constant(self) -> bool:
        return self.num.degree() <= 0 and self.den.degree() <= 0

    def __bool__(self):
        return not self.num.is_zero()

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, Scalar):
            other = _coerce(other)
            if other is None:
                return NotImplemented
        if self.den.is_one() and other.den.is_one():
            return Scalar(self.num + other.num, _ONE_P, _reduced=True)
        if self.den == other.den:
            return Scalar._make(self.num + other.num, self.den)
        return Scalar._make(self.num * other.den + other.num * self.den,
                            self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return Scalar(-self.num, self.den, _reduced=True)

    def __sub__(self, other):
        if not isinstance(other, Scalar):
            other = _coerce(other)
            if other is None:
                return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Scalar):
            other = _coerce(other)
            if other is None:
                return NotImplemented
        if self.den.is_one() and other.den.is_one():
            return Scalar(self.num * other.num, _ONE_P, _reduced=True)
        return Scalar._make(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def inverse(self) -> "Scalar":
        if self.num.is_zero():
            raise ZeroDivisionError("inverse of zero scalar")
        return Scalar._make(self.den, self.num)

    def __truediv__(self, other):
        if not isinstance(other, Scalar):
            other = _coerce(other)
            if other is None:
                return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        return Scalar(self.num ** k, self.den ** k, _reduced=True)

    def conj(self) -> "Scalar":
        """Complex conjugation; q is real so this is the identity."""
        return self

    def sqrt(self) -> "Scalar":
        """Exact square root with positive value at q = 1, or NotASquare."""
        if self.is_zero():
            return self
        try:
            n = self.num.sqrt()
        except Exception:
            try:
                n = (-self.num).sqrt()
            except Exception:
                raise NotASquare(str(self)) from None
            raise NotASquare(f"{self} is negative")
        try:
            d = self.den.sqrt()
        except Exception:
            raise NotASquare(str(self)) from None
        root = Scalar._make(n, d)
        if root.evaluate_s(Fraction(1)) < 0:
            root = -root
        return root

    # -- comparison / hashing ------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, Scalar):
            other = _coerce(other)
            if other is None:
                return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((tuple(int(c) for c in self.num.coeffs()),
                      tuple(int(c) for c in self.den.coeffs())))
            self._hash = h
        return h

    # -- evaluation ----------------------------------------------------------
    def evaluate_s(self, s: Fraction) -> Fraction:
        """Value at q^(1/2) = s."""
        s = Fraction(s)
        den = _eval_poly(self.den, s)
        if den == 0:
            raise ZeroDivisionError(f"{self} has a pole at q^(1/2) = {s}")
        return _eval_poly(self.num, s) / den

    def evaluate(self, q: Fraction) -> Fraction:
        """Value at a rational q.

        Odd powers of q^(1/2) need q to be the square of a rational.
        """
        q = Fraction(q)
        if self.uses_half_powers():
            s = rational_sqrt(q)
            if s is None:
                raise NotASquare(f"{self} needs q^(1/2) but q = {q} is not a rational square")
            return self.evaluate_s(s)
        num = _eval_even(self.num, q)
        den = _eval_even(self.den, q)
        if den == 0:
            raise ZeroDivisionError(f"{self} has a pole at q = {q}")
        return num / den

    def uses_half_powers(self) -> bool:
        return any(c != 0 and i % 2 for i, c in enumerate(self.num.coeffs())) or \
            any(c != 0 and i % 2 for i, c in enumerate(self.den.coeffs()))

    def to_fraction(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not a rational constant")
        n = int(self.num.coeffs()[0]) if not self.num.is_zero() else 0
        return Fraction(n, int(self.den.coeffs()[0]))

    # -- printing ------------------------------------------------------------
    def __str__(self):
        num = _poly_str(self.num)
        if self.den.is_one():
            return num
        den = _poly_str(self.den)
        if _needs_parens(self.num):
            num = f"({num})"
        if _needs_parens(self.den) or "*" in den:
            den = f"({den})"
        return f"{num}/{den}"

    def __repr__(self):
        return f"Scalar({str(self)!r})"


def _eval_poly(p, s: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p.coeffs()):
        acc = acc * s + int(c)
    return acc


def _eval_even(p, q: Fraction) -> Fraction:
    coeffs = [int(c) for c in p.coeffs()]
    acc = Fraction(0)
    for c in reversed(coeffs[0::2]):
        acc = acc * q + c
    return acc


def rational_sqrt(x: Fraction):
    """Square root of a nonnegative rational if it is rational, else None."""
    from math import isqrt
    x = Fraction(x)
    if x < 0:
        return None
    n, d = x.numerator, x.denominator
    rn, rd = isqrt(n), isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def _needs_parens(p) -> bool:
    return sum(1 for c in p.coeffs() if c != 0) > 1


def _mono_str(e: int) -> str:
    if e == 0:
        return ""
    if e % 2 == 0:
        k = e // 2
        return "q" if k == 1 else f"q^{k}"
    return f"q^({e}/2)"


def _poly_str(p) -> str:
    coeffs = [int(c) for c in p.coeffs()]
    if not any(coeffs):
        return "0"
    parts = []
    for e, c in enumerate(coeffs):
        if c == 0:
            continue
        mono = _mono_str(e)
        mag = abs(c)
        if mono and mag == 1:
            body = mono
        elif mono:
            body = f"{mag}*{mono}"
        else:
            body = str(mag)
        if not parts:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append((" - " if c < 0 else " + ") + body)
    return "".join(parts)


def _coerce(x):
    if isinstance(x, (int, Fraction)):
        return Scalar(x)
    return None


ZERO = Scalar(0)
ONE = Scalar(1)
Q = Scalar.q_power(1)
S = Scalar.s_power(1)


@lru_cache(maxsize=4096)
def _parse_cached(text: str) -> Scalar:
    import sympy
    from sympy.parsing.sympy_parser import (convert_xor, parse_expr,
                                            standard_transformations)
    if not text:
        raise ScalarParseError("empty scalar string")
    q = sympy.Symbol("q", positive=True)
    s = sympy.Symbol("s", positive=True)
    try:
        expr = parse_expr(text, local_dict={"q": q},
                          transformations=standard_transformations + (convert_xor,),
                          evaluate=True)
    except Exception as exc:
        raise ScalarParseError(f"cannot parse scalar {text!r}: {exc}") from None
    extra = expr.free_symbols - {q}
    if extra:
        raise ScalarParseError(f"scalar {text!r} uses unknown symbols {sorted(map(str, extra))}")
    expr = sympy.together(sympy.powsimp(expr.subs(q, s ** 2), force=True))
    n_expr, d_expr = sympy.fraction(expr)
    try:
        n_poly = sympy.Poly(sympy.expand(n_expr), s, domain="QQ")
        d_poly = sympy.Poly(sympy.expand(d_expr), s, domain="QQ")
    except sympy.PolynomialError:
        raise ScalarParseError(f"scalar {text!r} is not a rational function of q^(1/2)") from None
    n_coeffs = [Fraction(int(c.p), int(c.q)) for c in reversed(n_poly.all_coeffs())]
    d_coeffs = [Fraction(int(c.p), int(c.q)) for c in reversed(d_poly.all_coeffs())]
    from math import lcm
    m = 1
    for c in n_coeffs + d_coeffs:
        m = lcm(m, c.denominator)
    num = _P([int(c * m) for c in n_coeffs])
    den = _P([int(c * m) for c in d_coeffs])
    if den.is_zero():
        raise ScalarParseError(f"scalar {text!r} divides by zero")
    return Scalar._make(num, den)


def as_scalar(x) -> Scalar:
    """Coerce ints, Fractions and scalar strings."""
    if isinstance(x, Scalar):
        return x
    if isinstance(x, (int, Fraction)):
        return Scalar(x)
    if isinstance(x, str):
        return Scalar.parse(x)
    raise TypeError(f"cannot interpret {x!r} as a scalar")
