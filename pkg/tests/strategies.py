"""Hypothesis strategies for coefficients and jet-algebra elements."""

from fractions import Fraction

from hypothesis import strategies as st

from bihamo.coeff import coeff_ring
from bihamo.formal import FormalRing
from bihamo.jet import Element, slice_basis

small_frac = st.builds(Fraction, st.integers(-5, 5), st.integers(1, 4))


@st.composite
def upoly(draw, N=2, lam=True, max_terms=3, max_deg=2):
    R = coeff_ring(N)
    c = R.zero
    for _ in range(draw(st.integers(0, max_terms))):
        t = R.convert(draw(small_frac))
        for i in range(1, N + 1):
            t = t * R.u(i) ** draw(st.integers(0, max_deg))
        if lam:
            t = t * R.lam ** draw(st.integers(0, 1))
        c = c + t
    return c


@st.composite
def coeff(draw, N=2, lam=True):
    """A rational function with a product of diagonal differences in the denominator."""
    R = coeff_ring(N)
    num = draw(upoly(N, lam))
    den = R.one
    if N >= 2 and draw(st.booleans()):
        den = den * (R.u(1) - R.u(2))
    if draw(st.booleans()):
        den = den * (R.u(1) + 1)
    return num / den


@st.composite
def monomial(draw, N=2, pmax=3, dmax=3):
    while True:
        p = draw(st.integers(0, pmax))
        d = draw(st.integers(0, dmax))
        basis = slice_basis(p, d, N)
        if basis:
            return draw(st.sampled_from(basis))


@st.composite
def element(draw, N=2, pmax=3, dmax=3, max_terms=3, lam=False, p=None):
    R = coeff_ring(N)
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        if p is None:
            m = draw(monomial(N, pmax, dmax))
        else:
            m = draw(st.sampled_from([x for d in range(dmax + 1) for x in slice_basis(p, d, N)]))
        c = draw(upoly(N, lam, max_terms=2))
        if c:
            terms[m] = c
    return Element(R, terms)


def generators(F: FormalRing, order=2):
    N = F.N
    out = [F.u(i) for i in range(1, N + 1)] + [F.lam]
    out += [F.H(i) for i in range(1, N + 1)] + [F.H(i, -1) for i in range(1, N + 1)]
    out += [F.HD(i, m) for i in range(1, N + 1) for m in range(1, order + 1)]
    out += [F.gamma(i, j, m) for i in range(1, N + 1) for j in range(1, N + 1) if i != j
            for m in range(order + 1)]
    return out


@st.composite
def formal_monomial(draw, F: FormalRing, max_deg=2):
    gens = generators(F, order=1)
    a = F.convert(draw(st.builds(Fraction, st.integers(-3, 3).filter(bool), st.integers(1, 3))))
    for _ in range(draw(st.integers(0, max_deg))):
        a = a * draw(st.sampled_from(gens))
    if F.N >= 2 and draw(st.booleans()):
        a = a * F.diff_inverse(1, 2)
    return a
