"""Graded super-polynomials in the jet variables u^{i,s} (s >= 1) and theta_i^s.

A monomial is a pair ``(ujets, thetas)``: ``ujets`` is a sorted tuple of
``((i, s), exponent)`` and ``thetas`` a strictly increasing tuple of ``(i, s)``.
The coordinates u^i = u^{i,0} and lambda live in the coefficient.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Iterable, NamedTuple

GRADINGS = ("standard", "theta", "u_count", "theta1", "theta0", "theta_ge2", "lambda_deg")


class RingMismatch(TypeError):
    pass


class NonHomogeneous:
    """Marker returned by degree() for mixed-degree elements."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "NonHomogeneous"


NON_HOMOGENEOUS = NonHomogeneous()


class JetMonomial(NamedTuple):
    u: tuple = ()
    theta: tuple = ()

    def standard_degree(self) -> int:
        return sum(s * e for (_, s), e in self.u) + sum(s for _, s in self.theta)

    def __str__(self):
        return format_monomial(self)


ONE = JetMonomial((), ())


def monomial(ujets: dict | Iterable = (), thetas: Iterable = ()) -> tuple[int, JetMonomial]:
    """Build (sign, monomial) from unsorted data; sign 0 means it vanishes."""
    if isinstance(ujets, dict):
        items = ujets.items()
    else:
        items = ujets
    acc: dict = {}
    for (i, s), e in items:
        if s < 1:
            raise ValueError("u-jets in a monomial need s >= 1")
        if e:
            acc[(i, s)] = acc.get((i, s), 0) + e
    thetas = list(thetas)
    sign = _sort_sign(thetas)
    if sign == 0:
        return 0, ONE
    return sign, JetMonomial(tuple(sorted(acc.items())), tuple(sorted(thetas)))


def _sort_sign(seq: list) -> int:
    """Sign of the permutation sorting seq; 0 if seq has a repeat."""
    if len(set(seq)) != len(seq):
        return 0
    inv = 0
    n = len(seq)
    for a in range(n):
        for b in range(a + 1, n):
            if seq[a] > seq[b]:
                inv += 1
    return -1 if inv & 1 else 1


def _merge_thetas(a: tuple, b: tuple) -> tuple[int, tuple]:
    """Product of two sorted theta strings: (sign, merged)."""
    if not a:
        return 1, b
    if not b:
        return 1, a
    out = []
    inv = 0
    ia = ib = 0
    la, lb = len(a), len(b)
    while ia < la and ib < lb:
        x, y = a[ia], b[ib]
        if x == y:
            return 0, ()
        if x < y:
            out.append(x)
            ia += 1
        else:
            # y jumps over the remaining la - ia factors of a
            inv += la - ia
            out.append(y)
            ib += 1
    out.extend(a[ia:])
    out.extend(b[ib:])
    return (-1 if inv & 1 else 1), tuple(out)


def _merge_u(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    acc = dict(a)
    for k, e in b:
        acc[k] = acc.get(k, 0) + e
    return tuple(sorted(acc.items()))


def mono_mul(m1: JetMonomial, m2: JetMonomial) -> tuple[int, JetMonomial]:
    sign, th = _merge_thetas(m1.theta, m2.theta)
    if not sign:
        return 0, ONE
    return sign, JetMonomial(_merge_u(m1.u, m2.u), th)


class Element:
    """Sparse finite sum of coefficient * monomial over a coefficient ring."""

    __slots__ = ("ring", "terms")

    def __init__(self, ring, terms: dict | None = None):
        self.ring = ring
        self.terms = terms if terms is not None else {}

    # -- constructors ----------------------------------------------------
    @classmethod
    def scalar(cls, ring, c) -> "Element":
        c = ring.convert(c)
        return cls(ring, {ONE: c} if c else {})

    @classmethod
    def mono(cls, ring, m: JetMonomial, c=1) -> "Element":
        c = ring.convert(c)
        return cls(ring, {m: c} if c else {})

    @classmethod
    def theta(cls, ring, i: int, s: int) -> "Element":
        _check_index(ring, i)
        return cls(ring, {JetMonomial((), ((i, s),)): ring.one})

    @classmethod
    def ujet(cls, ring, i: int, s: int, e: int = 1) -> "Element":
        _check_index(ring, i)
        if s == 0:
            return cls.scalar(ring, ring.u(i) ** e)
        return cls(ring, {JetMonomial((((i, s), e),), ()): ring.one})

    # -- protocol ----------------------------------------------------------
    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if isinstance(other, Element):
            return self.ring is other.ring and self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def _same(self, other: "Element"):
        if other.ring is not self.ring:
            raise RingMismatch(f"{self.ring!r} vs {other.ring!r}")

    def __neg__(self):
        return Element(self.ring, {m: -c for m, c in self.terms.items()})

    def __add__(self, other):
        if not isinstance(other, Element):
            if other == 0:
                return self
            return NotImplemented
        self._same(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            _acc(out, m, c)
        return Element(self.ring, out)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Element):
            if other == 0:
                return self
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, Element):
            c = self.ring.convert(other)
            if not c:
                return Element(self.ring)
            return Element(self.ring, {m: v * c for m, v in self.terms.items()})
        self._same(other)
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                sign, m = mono_mul(m1, m2)
                if sign:
                    v = c1 * c2
                    _acc(out, m, v if sign > 0 else -v)
        return Element(self.ring, out)

    def __rmul__(self, other):
        # scalars are even, so left and right multiplication agree
        return self.__mul__(other)

    def scale(self, c) -> "Element":
        return self * c

    def map_coeffs(self, fn) -> "Element":
        out: dict = {}
        for m, c in self.terms.items():
            v = fn(c)
            if v:
                out[m] = v
        return Element(self.ring, out)

    def filter(self, pred) -> "Element":
        return Element(self.ring, {m: c for m, c in self.terms.items() if pred(m)})

    def max_jet(self, i: int) -> int:
        """Largest s with u^{i,s} present (0 if none)."""
        best = 0
        for m in self.terms:
            for (j, s), _ in m.u:
                if j == i and s > best:
                    best = s
        return best

    def max_theta(self, i: int) -> int:
        best = -1
        for m in self.terms:
            for j, s in m.theta:
                if j == i and s > best:
                    best = s
        return best

    def __str__(self):
        return format_element(self)

    def __repr__(self):
        return f"Element({format_element(self)})"


def _check_index(ring, i):
    if not 1 <= i <= ring.N:
        raise IndexError(f"index {i} out of range for N={ring.N}")


def _acc(out: dict, m, c):
    old = out.get(m)
    if old is None:
        if c:
            out[m] = c
        return
    v = old + c
    if v:
        out[m] = v
    else:
        del out[m]


# -- products and derivatives -------------------------------------------------

def elem_mul(a: Element, b: Element) -> Element:
    return a * b


def partial_u(a: Element, i: int, s: int) -> Element:
    """d/du^{i,s}; for s = 0 this differentiates the coefficients."""
    ring = a.ring
    out: dict = {}
    if s == 0:
        for m, c in a.terms.items():
            dc = c.partial(i)
            if dc:
                out[m] = dc
        return Element(ring, out)
    key = (i, s)
    for m, c in a.terms.items():
        for idx, (k, e) in enumerate(m.u):
            if k == key:
                rest = list(m.u)
                if e == 1:
                    del rest[idx]
                else:
                    rest[idx] = (k, e - 1)
                _acc(out, JetMonomial(tuple(rest), m.theta), c * e if e != 1 else c)
                break
    return Element(ring, out)


def partial_theta(a: Element, i: int, s: int) -> Element:
    """Left derivative d/dtheta_i^s."""
    key = (i, s)
    out: dict = {}
    for m, c in a.terms.items():
        th = m.theta
        try:
            pos = th.index(key)
        except ValueError:
            continue
        nm = JetMonomial(m.u, th[:pos] + th[pos + 1:])
        _acc(out, nm, -c if pos & 1 else c)
    return Element(a.ring, out)


def elem_partial(a: Element, var: tuple) -> Element:
    """var = ('u', i, s) or ('theta', i, s)."""
    kind, i, s = var
    if kind == "u":
        return partial_u(a, i, s)
    if kind == "theta":
        return partial_theta(a, i, s)
    raise ValueError(f"unknown generator kind {kind!r}")


def elem_dx(a: Element) -> Element:
    """Total x-derivative, including the chain rule through u^{i,0}."""
    ring = a.ring
    N = ring.N
    out: dict = {}
    for m, c in a.terms.items():
        # coefficient: sum_j d_j c * u^{j,1}
        for j in range(1, N + 1):
            dc = c.partial(j)
            if dc:
                nm = JetMonomial(_merge_u(m.u, (((j, 1), 1),)), m.theta)
                _acc(out, nm, dc)
        for idx, ((i, s), e) in enumerate(m.u):
            rest = list(m.u)
            if e == 1:
                del rest[idx]
            else:
                rest[idx] = ((i, s), e - 1)
            nu = _merge_u(tuple(rest), (((i, s + 1), 1),))
            _acc(out, JetMonomial(nu, m.theta), c * e if e != 1 else c)
        th = m.theta
        for idx, (i, s) in enumerate(th):
            new = (i, s + 1)
            if new in th:
                continue
            lst = list(th)
            lst[idx] = new
            # the raised factor may need to move right past larger factors
            sign = 1
            k = idx
            while k + 1 < len(lst) and lst[k] > lst[k + 1]:
                lst[k], lst[k + 1] = lst[k + 1], lst[k]
                sign = -sign
                k += 1
            _acc(out, JetMonomial(m.u, tuple(lst)), c if sign > 0 else -c)
    return Element(ring, out)


def dx_power(a: Element, n: int) -> Element:
    for _ in range(n):
        a = elem_dx(a)
    return a


# -- gradings -------------------------------------------------------------------

def mono_degree(m: JetMonomial, g: str) -> int:
    if g == "standard":
        return m.standard_degree()
    if g == "theta":
        return len(m.theta)
    if g == "u_count":
        return sum(e for _, e in m.u)
    if g == "theta1":
        return sum(1 for _, s in m.theta if s == 1)
    if g == "theta0":
        return sum(1 for _, s in m.theta if s == 0)
    if g == "theta_ge2":
        return sum(1 for _, s in m.theta if s >= 2)
    if g.startswith("theta1_"):
        i = int(g[7:])
        return 1 if (i, 1) in m.theta else 0
    raise ValueError(f"unknown grading {g!r}")


def term_degree(m: JetMonomial, c, g: str) -> int:
    if g == "lambda_deg":
        return c.lambda_degree()
    return mono_degree(m, g)


def elem_degree(a: Element, g: str):
    """Common degree of all terms, or NON_HOMOGENEOUS; the zero element has degree 0."""
    degs = {term_degree(m, c, g) for m, c in a.terms.items()}
    if g == "lambda_deg":
        # lambda-degree of a coefficient is its top power; homogeneity
        # requires every coefficient to be a pure lambda power
        for c in a.terms.values():
            lo = _lambda_low(c)
            if lo != c.lambda_degree():
                return NON_HOMOGENEOUS
    if not degs:
        return 0
    if len(degs) > 1:
        return NON_HOMOGENEOUS
    return degs.pop()


def _lambda_low(c) -> int:
    d = c.lambda_degree()
    for k in range(d + 1):
        if c.coeff_lambda(k):
            return k
    return d


def homogeneous_component(a: Element, g: str, k: int) -> Element:
    if g == "lambda_deg":
        out: dict = {}
        lam = a.ring.lam
        for m, c in a.terms.items():
            v = c.coeff_lambda(k)
            if v:
                out[m] = v * lam**k if k else v
        return Element(a.ring, out)
    return Element(a.ring, {m: c for m, c in a.terms.items() if mono_degree(m, g) == k})


# -- slice bases -----------------------------------------------------------------

def _partitions(n: int, max_part: int):
    """Multisets of positive integers <= max_part summing to n (non-increasing)."""
    if n == 0:
        yield ()
        return
    for first in range(min(n, max_part), 0, -1):
        for rest in _partitions(n - first, first):
            yield (first,) + rest


def _ujet_monomials(N: int, d: int):
    """All u-jet monomials of standard degree exactly d."""
    gens = [(i, s) for s in range(1, d + 1) for i in range(1, N + 1)]

    def rec(idx: int, remaining: int, acc: list):
        if remaining == 0:
            yield tuple(acc)
            return
        if idx == len(gens):
            return
        i, s = gens[idx]
        # exponent e of this generator
        for e in range(remaining // s, -1, -1):
            if e:
                acc.append(((i, s), e))
            yield from rec(idx + 1, remaining - e * s, acc)
            if e:
                acc.pop()

    for u in rec(0, d, []):
        yield tuple(sorted(u))


def _theta_monomials(N: int, p: int, d: int):
    """Strictly increasing theta strings of length p and standard degree d."""
    gens = sorted((i, s) for i in range(1, N + 1) for s in range(0, d + 1))
    for combo in combinations(gens, p):
        if sum(s for _, s in combo) == d:
            yield combo


def slice_basis(p: int, d: int, N: int) -> list[JetMonomial]:
    """All jet monomials of theta-degree p and standard degree d, in a fixed order."""
    if p < 0 or d < 0:
        return []
    out = []
    for dt in range(0, d + 1):
        thetas = list(_theta_monomials(N, p, dt))
        if not thetas:
            continue
        for um in _ujet_monomials(N, d - dt):
            for th in thetas:
                out.append(JetMonomial(um, th))
    out.sort(key=_mono_sort_key)
    return out


def _mono_sort_key(m: JetMonomial):
    return (m.theta, m.u)


# -- subspace classification and weights ------------------------------------------

def subspace_classify(m: JetMonomial):
    """'C_hat', ('C_i_nt', i) or 'M_hat'."""
    owners = set()
    for (i, s), _ in m.u:
        owners.add(i)
    for i, s in m.theta:
        if s >= 2:
            owners.add(i)
    if not owners:
        return "C_hat"
    if len(owners) == 1:
        return ("C_i_nt", owners.pop())
    return "M_hat"


def weight(m: JetMonomial, i: int) -> Fraction:
    """w_i: u^{i,s} -> s/2 + 1, theta_i^{s-1} -> s/2 - 1, others 0."""
    w = Fraction(0)
    for (j, s), e in m.u:
        if j == i:
            w += e * (Fraction(s, 2) + 1)
    for j, t in m.theta:
        if j == i:
            w += Fraction(t + 1, 2) - 1
    return w


# -- formatting ----------------------------------------------------------------------

def format_monomial(m: JetMonomial) -> str:
    parts = []
    for (i, s), e in m.u:
        parts.append(f"u[{i},{s}]" + (f"^{e}" if e != 1 else ""))
    for i, s in m.theta:
        parts.append(f"theta[{i},{s}]")
    return " ".join(parts) if parts else "1"


def format_element(a: Element) -> str:
    if not a.terms:
        return "0"
    parts = []
    for m in sorted(a.terms, key=_mono_sort_key):
        c = a.terms[m]
        cs = str(c)
        if m == ONE:
            parts.append(f"({cs})")
        elif cs == "1":
            parts.append(format_monomial(m))
        else:
            parts.append(f"({cs})*{format_monomial(m)}")
    return " + ".join(parts)
