"""Formal Ferapontov coefficients.

A ``FormalScalar`` is  num / den  where ``num`` is one polynomial (FLINT
``fmpq_mpoly``) in the generators

    u1..uN, lambda          coordinates and the pencil parameter
    H_i                     Lame coefficients
    G_i_j_m                 d_j^m gamma_ij   (0 <= m <= MAX_ORDER, i != j)
    HD_i_m                  d_i^m H_i        (1 <= m <= MAX_ORDER)

and ``den`` is an exponent vector over the localized elements H_i and
(u^i - u^j), i < j.  Zero testing is exact without normalization; the
canonical form (no localized factor dividing ``num``) is computed on demand.

Unreduced derivatives d_k(symbol) are built with ``raw_partial`` as
``RawScalar`` trees; ``formal_reduce`` evaluates them.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import flint

from .coeff import CoeffFn, coeff_ring

MAX_ORDER = 10


def _q(x):
    if isinstance(x, Fraction):
        return flint.fmpq(x.numerator, x.denominator)
    return x


class FormalRing:
    tag = "formal"

    def __init__(self, N: int):
        self.N = N
        self.base = coeff_ring(N)
        names = [f"u{i}" for i in range(1, N + 1)] + ["lambda"]
        self.sym_index: dict = {}
        self.index_sym: dict = {}

        def add(sym, name):
            self.sym_index[sym] = len(names)
            self.index_sym[len(names)] = sym
            names.append(name)

        for i in range(1, N + 1):
            add(("H", i), f"H{i}")
        for i in range(1, N + 1):
            for j in range(1, N + 1):
                if i != j:
                    for m in range(MAX_ORDER + 1):
                        add(("G", i, j, m), f"G_{i}_{j}_{m}")
        for i in range(1, N + 1):
            for m in range(1, MAX_ORDER + 1):
                add(("HD", i, m), f"HD_{i}_{m}")
        self.ctx = flint.fmpq_mpoly_ctx.get(tuple(names), "deglex")
        self.gens = self.ctx.gens()
        self.pzero = self.ctx.constant(0)
        self.pone = self.ctx.constant(1)
        # localized factors: H_1..H_N, u^1..u^N, then (u^i - u^j) for i < j
        self.pairs = [(i, j) for i in range(1, N + 1) for j in range(i + 1, N + 1)]
        self.factors = [self.gens[self.sym_index[("H", i)]] for i in range(1, N + 1)]
        self.factors += [self.gens[i] for i in range(N)]
        self.factors += [self.gens[i - 1] - self.gens[j - 1] for i, j in self.pairs]
        self.pair0 = 2 * N
        self.nden = len(self.factors)
        self.den0 = (0,) * self.nden
        self.zero = FormalScalar(self, self.pzero, self.den0)
        self.one = FormalScalar(self, self.pone, self.den0)
        self._dtable: dict = {}
        self._conv: dict = {}
        self._setlam: dict = {}

    def __repr__(self):
        return f"FormalRing(N={self.N})"

    def __reduce__(self):
        return (formal_ring, (self.N,))

    def _check(self, *idx):
        for i in idx:
            if not 1 <= i <= self.N:
                raise IndexError(f"index {i} out of range for N={self.N}")

    def _pair_slot(self, i: int, j: int) -> tuple[int, int]:
        """(den slot, sign) with u^i - u^j = sign * factor."""
        if i < j:
            return self.pair0 + self.pairs.index((i, j)), 1
        return self.pair0 + self.pairs.index((j, i)), -1

    def convert(self, x) -> "FormalScalar":
        if isinstance(x, FormalScalar):
            if x.ring is not self:
                raise TypeError("formal scalar from a different ring")
            return x
        if isinstance(x, CoeffFn):
            return self._from_coeff(x)
        if isinstance(x, (int, Fraction)):
            return FormalScalar(self, self.ctx.constant(_q(x)), self.den0)
        raise TypeError(f"cannot convert {type(x).__name__} to FormalScalar")

    def _from_coeff(self, c: CoeffFn) -> "FormalScalar":
        hit = self._conv.get(c)
        if hit is not None:
            return hit
        if c.ring.N != self.N:
            raise TypeError("coefficient from a different ring")
        num = c.num.project_to_context(self.ctx)
        den = list(self.den0)
        if not c.den.is_constant():
            const, facs = c.den.factor()
            scale = flint.fmpq(1) / const
            for fpoly, e in facs:
                fp = fpoly.project_to_context(self.ctx)
                for slot in range(self.N, self.nden):
                    f = self.factors[slot]
                    if fp == f:
                        den[slot] += e
                        break
                    if fp == -f:
                        den[slot] += e
                        scale = scale * (-1) ** e
                        break
                else:
                    raise ArithmeticError(f"denominator factor {fpoly} is not a diagonal difference")
            num = num * scale
        else:
            num = num / c.den.project_to_context(self.ctx)
        out = FormalScalar(self, num, tuple(den))
        self._conv[c] = out
        return out

    def symbol(self, sym, exp: int = 1) -> "FormalScalar":
        g = self.gens[self.sym_index[sym]]
        if exp >= 0:
            return FormalScalar(self, g**exp, self.den0)
        if sym[0] != "H":
            raise ArithmeticError(f"symbol {sym!r} is not invertible")
        den = list(self.den0)
        den[sym[1] - 1] = -exp
        return FormalScalar(self, self.pone, tuple(den))

    def u(self, i: int) -> "FormalScalar":
        self._check(i)
        return FormalScalar(self, self.gens[i - 1], self.den0)

    @property
    def lam(self) -> "FormalScalar":
        return FormalScalar(self, self.gens[self.N], self.den0)

    def H(self, i: int, exp: int = 1) -> "FormalScalar":
        self._check(i)
        return self.symbol(("H", i), exp) if exp else self.one

    def gamma(self, i: int, j: int, m: int = 0) -> "FormalScalar":
        self._check(i, j)
        if i == j:
            raise ValueError("gamma_ii is not defined")
        if m > MAX_ORDER:
            raise OverflowError(f"derivative order {m} exceeds {MAX_ORDER}")
        return self.symbol(("G", i, j, m))

    def HD(self, i: int, m: int) -> "FormalScalar":
        self._check(i)
        if m < 1:
            raise ValueError("HD needs m >= 1")
        if m > MAX_ORDER:
            raise OverflowError(f"derivative order {m} exceeds {MAX_ORDER}")
        return self.symbol(("HD", i, m))

    def raw_partial(self, k: int, a) -> "RawScalar":
        """The unevaluated derivative d_k of a scalar."""
        self._check(k)
        return RawScalar(self, ("partial", k, _raw(self, a)))

    # -- derivative table ------------------------------------------------
    def symbol_derivative(self, sym, k: int) -> "FormalScalar":
        """d_k of a generator, fully reduced (memoized)."""
        key = (sym, k)
        hit = self._dtable.get(key)
        if hit is not None:
            return hit
        kind = sym[0]
        if kind == "H":
            j = sym[1]
            val = self.HD(j, 1) if k == j else self.gamma(k, j) * self.H(k)
        elif kind == "HD":
            j, m = sym[1], sym[2]
            val = self.HD(j, m + 1) if k == j else _iterate(self.gamma(k, j) * self.H(k), j, m)
        elif kind == "G":
            i, j, m = sym[1], sym[2], sym[3]
            val = self.gamma(i, j, m + 1) if k == j else _iterate(self.gamma_rule(k, i, j), j, m)
        else:
            raise ValueError(f"no derivative rule for {sym!r}")
        self._dtable[key] = val
        return val

    def gamma_rule(self, k: int, i: int, j: int) -> "FormalScalar":
        """Reduced value of d_k gamma_ij for k != j."""
        if k == j or i == j:
            raise ValueError("gamma_rule needs k != j and i != j")
        g = self.gamma
        if k != i:
            return g(i, k) * g(k, j)
        # d_i gamma_ij from the two pair equations:
        #   X + Y + S = 0,  u^i X + u^j Y + T + (gamma_ij + gamma_ji)/2 = 0
        # with X = d_i gamma_ij, Y = d_j gamma_ji, so
        #   X = (u^j S - T - (gamma_ij + gamma_ji)/2) / (u^i - u^j).
        S = self.zero
        T = self.zero
        for l in range(1, self.N + 1):
            if l in (i, j):
                continue
            prod = g(l, i) * g(l, j)
            S = S + prod
            T = T + prod * self.u(l)
        num = S * self.u(j) - T - (g(i, j) + g(j, i)) * Fraction(1, 2)
        return num * self.diff_inverse(i, j)

    def base_factor(self, slot: int) -> CoeffFn:
        """A localized u-factor as a CoeffFn."""
        if slot < self.pair0:
            return self.base.u(slot - self.N + 1)
        i, j = self.pairs[slot - self.pair0]
        return self.base.u(i) - self.base.u(j)

    def diff_inverse(self, i: int, j: int) -> "FormalScalar":
        """1 / (u^i - u^j)."""
        slot, sign = self._pair_slot(i, j)
        den = list(self.den0)
        den[slot] = 1
        return FormalScalar(self, self.ctx.constant(sign), tuple(den))


def _iterate(a: "FormalScalar", j: int, m: int) -> "FormalScalar":
    for _ in range(m):
        a = a.partial(j)
    return a


@lru_cache(maxsize=None)
def formal_ring(N: int) -> FormalRing:
    return FormalRing(N)


def _cancel_monomials(ring, num, den) -> "FormalScalar":
    """Cancel the monomial localized factors (H_i, u^i) against the numerator."""
    if num.is_zero() or not any(den[: ring.pair0]):
        return FormalScalar(ring, num, den)
    content = num.term_content()
    if content.is_constant():
        return FormalScalar(ring, num, den)
    exps = content.monoms()[0]
    den = list(den)
    div = ring.pone
    for slot in range(ring.pair0):
        if den[slot]:
            v = ring.sym_index[("H", slot + 1)] if slot < ring.N else slot - ring.N
            e = min(den[slot], exps[v])
            if e:
                div = div * ring.factors[slot] ** e
                den[slot] -= e
    if not div.is_one():
        num = num / div
    return FormalScalar(ring, num, tuple(den))


def formal_sum(ring: FormalRing, items) -> "FormalScalar":
    """Sum over one common denominator, lifting each summand once."""
    items = [t for t in items if not t.num.is_zero()]
    if not items:
        return ring.zero
    if len(items) == 1:
        return items[0]
    groups: dict = {}
    for t in items:
        g = groups.get(t.den)
        groups[t.den] = t.num if g is None else g + t.num
    if len(groups) == 1:
        ((den, num),) = groups.items()
        return FormalScalar(ring, num, den)
    den = tuple(map(max, *groups))
    num = ring.pzero
    for d, n in groups.items():
        num += FormalScalar(ring, n, d)._lift(den)
    return _cancel_monomials(ring, num, den)


class FormalScalar:
    __slots__ = ("ring", "num", "den")

    def __init__(self, ring: FormalRing, num, den: tuple):
        self.ring = ring
        self.num = num
        self.den = den

    def __bool__(self):
        return not self.num.is_zero()

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def _factor_poly(self, extra: tuple):
        f = self.ring.pone
        for slot, e in enumerate(extra):
            if e:
                f = f * self.ring.factors[slot] ** e
        return f

    def _lift(self, den: tuple):
        """num re-expressed over a larger denominator."""
        if den == self.den:
            return self.num
        return self.num * self._factor_poly(tuple(a - b for a, b in zip(den, self.den)))

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, CoeffFn)):
            other = self.ring.convert(other)
        if not isinstance(other, FormalScalar):
            return NotImplemented
        if other.ring is not self.ring:
            return False
        den = tuple(max(a, b) for a, b in zip(self.den, other.den))
        return self._lift(den) == other._lift(den)

    def normalized(self) -> "FormalScalar":
        """Cancel localized factors that divide the numerator."""
        ring = self.ring
        num = self.num
        if num.is_zero():
            return ring.zero
        n = _cancel_monomials(ring, num, self.den)
        num = n.num
        den = list(n.den)
        for slot in range(ring.pair0, ring.nden):
            while den[slot]:
                q, r = divmod(num, ring.factors[slot])
                if not r.is_zero():
                    break
                num = q
                den[slot] -= 1
        return FormalScalar(ring, num, tuple(den))

    def __hash__(self):
        n = self.normalized()
        return hash((str(n.num), n.den))

    def _coerce(self, other):
        if isinstance(other, FormalScalar):
            return other
        if isinstance(other, (int, Fraction, CoeffFn)):
            return self.ring.convert(other)
        return None

    def __neg__(self):
        return FormalScalar(self.ring, -self.num, self.den)

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if other.num.is_zero():
            return self
        if self.num.is_zero():
            return other
        if self.den == other.den:
            return FormalScalar(self.ring, self.num + other.num, self.den)
        den = tuple(max(a, b) for a, b in zip(self.den, other.den))
        return _cancel_monomials(self.ring, self._lift(den) + other._lift(den), den)

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
        if isinstance(other, (int, Fraction)):
            return FormalScalar(self.ring, self.num * _q(other), self.den)
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if self.num.is_zero() or other.num.is_zero():
            return self.ring.zero
        if other.den == self.ring.den0:
            den = self.den
        elif self.den == self.ring.den0:
            den = other.den
        else:
            den = tuple(a + b for a, b in zip(self.den, other.den))
            return _cancel_monomials(self.ring, self.num * other.num, den)
        return FormalScalar(self.ring, self.num * other.num, den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        """Division by a unit of the localized ring."""
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other * self.inverse()

    def inverse(self) -> "FormalScalar":
        ring = self.ring
        if self.num.is_zero():
            raise ZeroDivisionError("division by zero")
        const, facs = self.num.factor()
        new_den = [0] * ring.nden
        num = ring.pone / const
        for fpoly, e in facs:
            for slot, f in enumerate(ring.factors):
                if fpoly == f or fpoly == -f:
                    new_den[slot] += e
                    if fpoly == -f and e % 2:
                        num = -num
                    break
            else:
                raise ArithmeticError(f"factor {fpoly} is not invertible")
        num = num * self._factor_poly(self.den)
        return FormalScalar(ring, num, tuple(new_den))

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        return FormalScalar(self.ring, self.num**n, tuple(e * n for e in self.den))

    def has_raw(self) -> bool:
        return False

    def symbols(self) -> list:
        """Generators (other than u, lambda) occurring in the numerator."""
        ring = self.ring
        degs = self.num.degrees()
        return [ring.index_sym[v] for v in range(ring.N + 1, len(degs)) if degs[v] > 0]

    def partial(self, k: int) -> "FormalScalar":
        """Formal d_k: Leibniz rule plus the symbol derivative table."""
        ring = self.ring
        ring._check(k)
        num = self.num
        if num.is_zero():
            return ring.zero
        degs = num.degrees()
        # d_k of the numerator, kept over the same denominator
        parts = [FormalScalar(ring, num.derivative(k - 1), self.den)]
        for v in range(ring.N + 1, len(degs)):
            if degs[v] <= 0:
                continue
            ds = ring.symbol_derivative(ring.index_sym[v], k)
            if ds:
                parts.append(FormalScalar(ring, num.derivative(v), self.den) * ds)
        # d_k of 1/den
        for slot, e in enumerate(self.den):
            if not e:
                continue
            if slot < ring.N:
                i = slot + 1
                dH = ring.symbol_derivative(("H", i), k)
                term = FormalScalar(ring, num * (-e), self.den) * dH
                bump = list(term.den)
                bump[slot] += 1
                parts.append(FormalScalar(ring, term.num, tuple(bump)))
            else:
                if slot < ring.pair0:
                    c = 1 if k == slot - ring.N + 1 else 0
                else:
                    i, j = ring.pairs[slot - ring.pair0]
                    c = (1 if k == i else 0) - (1 if k == j else 0)
                if c:
                    bump = list(self.den)
                    bump[slot] += 1
                    parts.append(FormalScalar(ring, num * (-e * c), tuple(bump)))
        return formal_sum(ring, parts)

    def set_lambda(self, i: int) -> "FormalScalar":
        ring = self.ring
        imgs = ring._setlam.get(i)
        if imgs is None:
            imgs = list(ring.gens)
            imgs[ring.N] = ring.gens[i - 1]
            ring._setlam[i] = imgs
        return FormalScalar(ring, self.num.compose(*imgs), self.den)

    def coeff_lambda(self, k: int) -> "FormalScalar":
        ring = self.ring
        L = ring.N
        d = {e: c for e, c in self.num.to_dict().items() if e[L] == k}
        if k:
            d = {e[:L] + (0,) + e[L + 1 :]: c for e, c in d.items()}
        return FormalScalar(ring, ring.ctx.from_dict(d) if d else ring.pzero, self.den)

    def lambda_degree(self) -> int:
        if self.num.is_zero():
            return -1
        return self.num.degrees()[self.ring.N]

    def specialize(self) -> CoeffFn:
        """H -> 1, gamma and H-derivatives -> 0 (the constant-metric value)."""
        ring = self.ring
        base = ring.base
        num = self.num.subs({f"H{i}": 1 for i in range(1, ring.N + 1)})
        out = base.from_polys(num.project_to_context(base.ctx))
        for slot in range(ring.N, ring.nden):
            e = self.den[slot]
            if e:
                out = out / ring.base_factor(slot) ** e
        return out

    @property
    def terms(self) -> dict:
        """Expanded view: symbol monomial -> CoeffFn coefficient."""
        ring = self.ring
        base = ring.base
        n = self.normalized()
        scale = base.one
        for slot, e in enumerate(n.den):
            if e and slot >= ring.N:
                scale = scale / ring.base_factor(slot) ** e
        groups: dict = {}
        for exps, c in n.num.to_dict().items():
            key = []
            for v in range(ring.N + 1, len(exps)):
                if exps[v]:
                    key.append((ring.index_sym[v], exps[v]))
            for i in range(ring.N):
                if n.den[i]:
                    sym = ("H", i + 1)
                    found = [t for t in key if t[0] == sym]
                    if found:
                        key.remove(found[0])
                        e = found[0][1] - n.den[i]
                    else:
                        e = -n.den[i]
                    if e:
                        key.append((sym, e))
            key = tuple(sorted(key))
            groups.setdefault(key, {})[exps[: ring.N + 1]] = c
        out = {}
        for key, d in groups.items():
            c = base.from_polys(base.ctx.from_dict(d)) * scale
            if c:
                out[key] = c
        return out

    def __str__(self):
        return format_formal(self)

    def __repr__(self):
        return f"FormalScalar({format_formal(self)})"


class RawScalar:
    """An expression tree containing unevaluated derivatives."""

    __slots__ = ("ring", "tree")

    def __init__(self, ring: FormalRing, tree):
        self.ring = ring
        self.tree = tree

    def has_raw(self) -> bool:
        return True

    def __add__(self, other):
        return RawScalar(self.ring, ("add", self.tree, _raw(self.ring, other)))

    def __radd__(self, other):
        return RawScalar(self.ring, ("add", _raw(self.ring, other), self.tree))

    def __neg__(self):
        return RawScalar(self.ring, ("mul", ("leaf", self.ring.convert(-1)), self.tree))

    def __sub__(self, other):
        return self + (-_as_raw(self.ring, other))

    def __rsub__(self, other):
        return _as_raw(self.ring, other) + (-self)

    def __mul__(self, other):
        return RawScalar(self.ring, ("mul", self.tree, _raw(self.ring, other)))

    def __rmul__(self, other):
        return RawScalar(self.ring, ("mul", _raw(self.ring, other), self.tree))

    def partial(self, k: int) -> FormalScalar:
        return formal_reduce(self).partial(k)


def _raw(ring, x):
    if isinstance(x, RawScalar):
        return x.tree
    return ("leaf", ring.convert(x))


def _as_raw(ring, x) -> RawScalar:
    return x if isinstance(x, RawScalar) else RawScalar(ring, ("leaf", ring.convert(x)))


def _eval(tree) -> FormalScalar:
    kind = tree[0]
    if kind == "leaf":
        return tree[1]
    if kind == "add":
        return _eval(tree[1]) + _eval(tree[2])
    if kind == "mul":
        return _eval(tree[1]) * _eval(tree[2])
    return _eval(tree[2]).partial(tree[1])


def formal_reduce(a) -> FormalScalar:
    """Eliminate every unevaluated derivative (innermost first); canonical form."""
    if isinstance(a, RawScalar):
        return _eval(a.tree).normalized()
    return a.normalized()


def formal_derive(a, k: int) -> FormalScalar:
    return formal_reduce(a).partial(k)


def formal_mixed_partial_check(a, k: int, l: int) -> bool:
    a = formal_reduce(a)
    return a.partial(l).partial(k) == a.partial(k).partial(l)


def _fmt_sym(s) -> str:
    kind = s[0]
    if kind == "H":
        return f"H{s[1]}"
    if kind == "G":
        i, j, m = s[1:]
        return f"gamma{i}{j}" if m == 0 else f"d{j}^{m}gamma{i}{j}"
    i, m = s[1:]
    return f"d{i}^{m}H{i}"


def format_formal(a: FormalScalar) -> str:
    terms = a.terms
    if not terms:
        return "0"
    parts = []
    for key, c in sorted(terms.items(), key=lambda kv: kv[0]):
        mono = "*".join(_fmt_sym(s) + (f"^{e}" if e != 1 else "") for s, e in key)
        cs = str(c)
        if not mono:
            parts.append(cs)
        elif cs == "1":
            parts.append(mono)
        else:
            parts.append(f"({cs})*{mono}")
    return " + ".join(parts)
