from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bihamo.coeff import coeff_ring
from bihamo.functionals import (
    DeformationCoeffs,
    Functional,
    NonHomogeneous,
    central_invariants,
    d_lambda_functional,
    is_zero_functional,
    kdv_deformation,
    schouten,
    variational,
)
from bihamo.jet import Element, elem_dx, homogeneous_component
from bihamo.operators import OperatorId, make_operator
from bihamo.pencil import PencilData
from strategies import element

R1 = coeff_ring(1)
R2 = coeff_ring(2)
u1, u2 = R2.u(1), R2.u(2)
P1 = PencilData.constant(1)
P2S = PencilData.concrete(2, [u1**2 + 1, u2**3 + 2 * u2])


def th(R, i, s):
    return Element.theta(R, i, s)


def uj(R, i, s):
    return Element.ujet(R, i, s)


def F(a):
    return Functional(a)


# -- variational derivatives ----------------------------------------------------------------

def test_variational_examples():
    a = uj(R1, 1, 1) * uj(R1, 1, 1) * Fraction(1, 2)
    assert variational(a, ("u", 1)) == -uj(R1, 1, 2)
    b = th(R1, 1, 1) * uj(R1, 1, 1)
    assert variational(b, ("theta", 1)) == -uj(R1, 1, 2)


@settings(max_examples=200)
@given(element(dmax=3), st.sampled_from([("u", 1), ("u", 2), ("theta", 1), ("theta", 2)]))
def test_variational_kills_total_derivatives(b, var):
    assert not variational(elem_dx(b), var)


# -- zero test -------------------------------------------------------------------------------

def test_zero_functional_examples():
    R = R1
    a = uj(R, 1, 1) * th(R, 1, 0) + th(R, 1, 1) * R.u(1)
    assert a == elem_dx(th(R, 1, 0) * R.u(1))
    assert is_zero_functional(F(a))
    assert is_zero_functional(F(uj(R, 1, 1)))
    assert not is_zero_functional(F(th(R, 1, 0)))
    assert not is_zero_functional(F(Element.scalar(R, 3)))


# -- Schouten bracket --------------------------------------------------------------------------

def test_schouten_examples():
    A = F(th(R2, 1, 0) * th(R2, 2, 0))
    B = F(Element.scalar(R2, u1))
    assert is_zero_functional(schouten(A, B) - F(th(R2, 2, 0)))
    assert is_zero_functional(schouten(B, B))
    C = F(th(R2, 1, 0))
    assert is_zero_functional(schouten(C, C))


def test_schouten_needs_homogeneous_first_argument():
    with pytest.raises(NonHomogeneous):
        schouten(F(th(R2, 1, 0) + uj(R2, 1, 1)), F(th(R2, 1, 0)))


def _theta_part(a, p):
    return homogeneous_component(a, "theta", p)


@settings(max_examples=200)
@given(element(dmax=2, max_terms=2), element(dmax=2, max_terms=2), st.integers(0, 2), st.integers(0, 2))
def test_schouten_graded_symmetry(a, b, p, q):
    A = F(_theta_part(a, p))
    B = F(_theta_part(b, q))
    sign = -1 if (p * q) % 2 else 1
    lhs = schouten(A, B)
    rhs = schouten(B, A)
    diff = lhs - rhs if sign > 0 else lhs + rhs
    assert is_zero_functional(diff)


def _jacobi(A, p, B, q, C, r):
    """(-1)^{pr}[[A,B],C] + (-1)^{qp}[[B,C],A] + (-1)^{rq}[[C,A],B], theta-degrees p, q, r."""
    s = lambda n: -1 if n % 2 else 1
    t1 = schouten(schouten(A, B), C).scale(s(p * r))
    t2 = schouten(schouten(B, C), A).scale(s(q * p))
    t3 = schouten(schouten(C, A), B).scale(s(r * q))
    return t1 + t2 + t3


JACOBI_CASES = [
    ((th(R2, 1, 0) * th(R2, 2, 0), 2), (th(R2, 1, 0) * th(R2, 1, 1), 2), (Element.scalar(R2, u1 * u2), 0)),
    ((th(R2, 1, 0) * th(R2, 1, 1) * u2, 2), (th(R2, 2, 0) * th(R2, 2, 1), 2), (th(R2, 1, 0) * u1 * u2, 1)),
    ((th(R2, 1, 0) * uj(R2, 2, 1), 1), (th(R2, 2, 0) * u1, 1), (Element.scalar(R2, u1**2), 0)),
]


@pytest.mark.parametrize("case", JACOBI_CASES)
def test_schouten_jacobi_curated(case):
    (a, p), (b, q), (c, r) = case
    assert is_zero_functional(_jacobi(F(a), p, F(b), q, F(c), r))


# -- induced differential --------------------------------------------------------------------

def test_d_lambda_functional_examples():
    c = R1.u(1) ** 3
    img = d_lambda_functional(P1, F(Element.scalar(R1, c)))
    D = make_operator(OperatorId("D_lambda"), P1)
    assert img.density == D(Element.scalar(R1, c))
    # the leading group gives (u - lambda) c' theta^1
    assert img.density.terms[th(R1, 1, 1).terms.popitem()[0]] == (R1.u(1) - R1.lam) * c.partial(1)
    assert not d_lambda_functional(P1, F(Element(R1))).density


@settings(max_examples=200)
@given(element(dmax=2))
def test_d_lambda_functional_on_exact_density(b):
    assert is_zero_functional(d_lambda_functional(P2S, F(elem_dx(b))))


@settings(max_examples=200)
@given(element(dmax=2, max_terms=2))
def test_d_lambda_functional_squares_to_zero(a):
    assert is_zero_functional(d_lambda_functional(P2S, d_lambda_functional(P2S, F(a))))


# -- central invariants ------------------------------------------------------------------------

def test_kdv_central_invariant():
    res = central_invariants(P1, kdv_deformation())
    assert res.c == [Fraction(1, 24)]
    assert res.depends_only_on_own


def test_zero_deformation():
    p = PencilData.constant(2)
    res = central_invariants(p, DeformationCoeffs(2))
    assert all(not c for c in res.c)
    assert res.depends_only_on_own


def test_dependence_flag():
    p = PencilData.constant(2)
    res = central_invariants(p, DeformationCoeffs(2, {(1, 2, 2, 2, 1): 1}))
    assert res.c[0] == Fraction(1, 3) / (u2 - u1)
    assert not res.c[1]
    assert res.violations == [(1, 2)]
    assert not res.depends_only_on_own


def test_central_invariants_need_concrete_pencil():
    with pytest.raises(ValueError):
        central_invariants(PencilData.formal(1), kdv_deformation())
