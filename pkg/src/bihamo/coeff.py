"""Exact rational functions in u1..uN that are polynomial in lambda.

Numerators and denominators are sparse polynomials over QQ (FLINT's
``fmpq_mpoly``, graded-lex order).  The last generator of every ring is
lambda; denominators never contain it.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import flint


class LambdaInDenominator(ArithmeticError):
    pass


class DivisionByZero(ZeroDivisionError):
    pass


def to_fraction(c) -> Fraction:
    """Convert an fmpq to Fraction."""
    return Fraction(int(c.p), int(c.q))


class CoeffRing:
    """The field of u-rational functions with polynomial lambda-dependence."""

    tag = "concrete"

    def __init__(self, N: int):
        if N < 1:
            raise ValueError("N must be positive")
        self.N = N
        names = [f"u{i}" for i in range(1, N + 1)] + ["lambda"]
        self.ctx = flint.fmpq_mpoly_ctx.get(tuple(names), "deglex")
        self.gens = self.ctx.gens()
        self.pzero = self.ctx.constant(0)
        self.pone = self.ctx.constant(1)
        self.zero = CoeffFn(self, self.pzero, self.pone)
        self.one = CoeffFn(self, self.pone, self.pone)

    def __repr__(self):
        return f"CoeffRing(N={self.N})"

    def __reduce__(self):
        return (coeff_ring, (self.N,))

    def u(self, i: int) -> "CoeffFn":
        if not 1 <= i <= self.N:
            raise IndexError(f"u{i} out of range for N={self.N}")
        return CoeffFn(self, self.gens[i - 1], self.pone)

    @property
    def lam(self) -> "CoeffFn":
        return CoeffFn(self, self.gens[self.N], self.pone)

    def convert(self, x) -> "CoeffFn":
        if isinstance(x, CoeffFn):
            if x.ring is not self:
                raise TypeError("coefficient from a different ring")
            return x
        if isinstance(x, Fraction):
            return CoeffFn(self, self.ctx.constant(flint.fmpq(x.numerator, x.denominator)), self.pone)
        if isinstance(x, int):
            return CoeffFn(self, self.ctx.constant(x), self.pone)
        raise TypeError(f"cannot convert {type(x).__name__} to CoeffFn")

    def from_polys(self, num, den=None) -> "CoeffFn":
        """Build a canonical fraction from two ring polynomials."""
        if den is None:
            return CoeffFn(self, num, self.pone)
        return _normalize(self, num, den)


@lru_cache(maxsize=None)
def coeff_ring(N: int) -> CoeffRing:
    return CoeffRing(N)


def _has_lambda(p, N: int) -> bool:
    return bool(p.degrees()[N] > 0) if not p.is_zero() else False


def _cofactors(a, b):
    g = a.gcd(b)
    if g.is_one():
        return g, a, b
    return g, a / g, b / g


def _lc(p):
    return p.leading_coefficient()


def _normalize(ring: CoeffRing, num, den) -> "CoeffFn":
    if not den:
        raise DivisionByZero("zero denominator")
    if not num:
        return ring.zero
    if den.is_constant():
        c = _lc(den)
        if c != 1:
            num = num / c
        return CoeffFn(ring, num, ring.pone)
    g, num, den = _cofactors(num, den)
    if _has_lambda(den, ring.N):
        raise LambdaInDenominator("lambda would appear in a denominator")
    c = _lc(den)
    if c != 1:
        num = num / c
        den = den / c
    return CoeffFn(ring, num, den)


class CoeffFn:
    """An element num/den; immutable, canonical (den monic, coprime to num)."""

    __slots__ = ("ring", "num", "den", "_hash")

    def __init__(self, ring: CoeffRing, num, den):
        self.ring = ring
        self.num = num
        self.den = den
        self._hash = None

    # -- basic protocol -------------------------------------------------
    def __bool__(self):
        return not self.num.is_zero()

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __eq__(self, other):
        if isinstance(other, CoeffFn):
            return self.num == other.num and self.den == other.den
        if isinstance(other, (int, Fraction)):
            return self == self.ring.convert(other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((str(self.num), str(self.den)))
        return self._hash

    def _coerce(self, other):
        if isinstance(other, CoeffFn):
            return other
        if isinstance(other, (int, Fraction)):
            return self.ring.convert(other)
        return None

    def __neg__(self):
        return CoeffFn(self.ring, -self.num, self.den)

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if other.num.is_zero():
            return self
        if self.num.is_zero():
            return other
        if self.den == other.den:
            if self.den.is_one():
                return CoeffFn(self.ring, self.num + other.num, self.den)
            return _normalize(self.ring, self.num + other.num, self.den)
        if other.den.is_one():
            return CoeffFn(self.ring, self.num + other.num * self.den, self.den)
        if self.den.is_one():
            return CoeffFn(self.ring, self.num * other.den + other.num, other.den)
        g, a, b = _cofactors(self.den, other.den)
        num = self.num * b + other.num * a
        return _normalize(self.ring, num, a * other.den)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if self.num.is_zero() or other.num.is_zero():
            return self.ring.zero
        if self.den.is_one() and other.den.is_one():
            return CoeffFn(self.ring, self.num * other.num, self.den)
        # cross-cancel before multiplying
        if other.den.is_one():
            g, a_num, b_den = _cofactors(other.num, self.den)
            return _monic(self.ring, self.num * a_num, b_den)
        if self.den.is_one():
            g, a_num, b_den = _cofactors(self.num, other.den)
            return _monic(self.ring, a_num * other.num, b_den)
        g1, n1, d2 = _cofactors(self.num, other.den)
        g2, n2, d1 = _cofactors(other.num, self.den)
        return _monic(self.ring, n1 * n2, d1 * d2)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if other.num.is_zero():
            raise DivisionByZero("division by zero coefficient")
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other / self

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        return CoeffFn(self.ring, self.num**n, self.den**n)

    def inverse(self) -> "CoeffFn":
        if self.num.is_zero():
            raise DivisionByZero("inverse of zero")
        if _has_lambda(self.num, self.ring.N):
            raise LambdaInDenominator("lambda would appear in a denominator")
        return _monic(self.ring, self.den, self.num)

    # -- calculus -------------------------------------------------------
    def partial(self, j: int) -> "CoeffFn":
        """d/du^j by the quotient rule."""
        if not 1 <= j <= self.ring.N:
            raise IndexError(f"u{j} out of range")
        dn = self.num.derivative(j - 1)
        if self.den.is_constant():
            return CoeffFn(self.ring, dn, self.den) if not dn.is_zero() else self.ring.zero
        dd = self.den.derivative(j - 1)
        if dd.is_zero():
            return _normalize(self.ring, dn, self.den)
        return _normalize(self.ring, dn * self.den - self.num * dd, self.den * self.den)

    def set_lambda(self, i: int) -> "CoeffFn":
        """Substitute lambda -> u^i."""
        if not 1 <= i <= self.ring.N:
            raise IndexError(f"u{i} out of range")
        if not _has_lambda(self.num, self.ring.N):
            return self
        gens = list(self.ring.gens)
        gens[self.ring.N] = gens[i - 1]
        num = self.num.compose(*gens)
        return _normalize(self.ring, num, self.den)

    def coeff_lambda(self, k: int) -> "CoeffFn":
        """Coefficient of lambda^k."""
        N = self.ring.N
        terms = {m[:N] + (0,): c for m, c in self.num.to_dict().items() if m[N] == k}
        if not terms:
            return self.ring.zero
        return _normalize(self.ring, self.ring.ctx.from_dict(terms), self.den)

    def lambda_degree(self) -> int:
        if self.num.is_zero():
            return -1
        return int(self.num.degrees()[self.ring.N])

    def is_polynomial(self) -> bool:
        return self.den.is_constant()

    def total_u_degree(self) -> int:
        """Max u-degree of the numerator (requires a polynomial)."""
        N = self.ring.N
        if self.num.is_zero():
            return -1
        return max(sum(m[:N]) for m in self.num.monoms())

    def poly_terms(self):
        """(u-exponents, lambda-exponent, Fraction) for a polynomial value."""
        if not self.den.is_constant():
            raise ValueError("not a polynomial")
        N = self.ring.N
        for m, c in self.num.to_dict().items():
            yield tuple(m[:N]), m[N], to_fraction(c)

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("not a constant")
        if self.num.is_zero():
            return Fraction(0)
        return to_fraction(self.num.leading_coefficient())

    def depends_on(self, j: int) -> bool:
        return bool(self.partial(j))

    def __str__(self):
        return format_coeff(self)

    def __repr__(self):
        return f"CoeffFn({format_coeff(self)})"


def _monic(ring, num, den):
    if num.is_zero():
        return ring.zero
    c = _lc(den)
    if c != 1:
        num = num / c
        den = den / c
    return CoeffFn(ring, num, den)


def _fmt_poly(p) -> str:
    return "0" if p.is_zero() else str(p)


def format_coeff(c: CoeffFn) -> str:
    num = _fmt_poly(c.num)
    if c.den.is_constant():
        return num
    den = _fmt_poly(c.den)
    if len(c.num) > 1 or "/" in num:
        num = f"({num})"
    return f"{num}/({den})"


def coeff_arith(a: CoeffFn, b: CoeffFn, kind: str) -> CoeffFn:
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        return a * b
    if kind == "div":
        return a / b
    raise ValueError(f"unknown operation {kind!r}")


def coeff_partial(a: CoeffFn, j: int) -> CoeffFn:
    return a.partial(j)


def coeff_set_lambda(a: CoeffFn, i: int) -> CoeffFn:
    return a.set_lambda(i)
