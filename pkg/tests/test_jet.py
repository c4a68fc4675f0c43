from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bihamo.coeff import coeff_ring
from bihamo.jet import (
    NON_HOMOGENEOUS,
    Element,
    RingMismatch,
    elem_degree,
    elem_dx,
    elem_mul,
    elem_partial,
    homogeneous_component,
    monomial,
    partial_theta,
    slice_basis,
    subspace_classify,
    weight,
)
from strategies import element

R = coeff_ring(2)
R1 = coeff_ring(1)
u1, u2 = R.u(1), R.u(2)


def th(i, s, ring=R):
    return Element.theta(ring, i, s)


def uj(i, s, ring=R):
    return Element.ujet(ring, i, s)


def mono(u=(), t=()):
    return monomial(dict(u), t)[1]


# -- products --------------------------------------------------------------------

def test_koszul_sign():
    assert th(2, 0) * th(1, 0) == -(th(1, 0) * th(2, 0))


def test_odd_square_vanishes():
    assert not th(1, 0) * th(1, 0)


def test_even_square():
    assert uj(1, 1) * uj(1, 1) == Element.ujet(R, 1, 1, 2)


def test_ring_mismatch():
    with pytest.raises(RingMismatch):
        elem_mul(th(1, 0), th(1, 0, R1))


@settings(max_examples=200)
@given(element(pmax=3, dmax=2), element(pmax=3, dmax=2))
def test_graded_commutativity(a, b):
    for pa in range(4):
        for pb in range(4):
            x = homogeneous_component(a, "theta", pa)
            y = homogeneous_component(b, "theta", pb)
            sign = -1 if pa * pb % 2 else 1
            assert x * y == (y * x if sign > 0 else -(y * x))


@settings(max_examples=200)
@given(element(dmax=2), element(dmax=2), element(dmax=2))
def test_product_associative(a, b, c):
    assert (a * b) * c == a * (b * c)


# -- partial derivatives -----------------------------------------------------------

def test_left_theta_derivative_sign():
    assert elem_partial(th(1, 0) * th(2, 0), ("theta", 2, 0)) == -th(1, 0)


def test_u_partial():
    assert elem_partial(uj(1, 1) * uj(2, 1), ("u", 1, 1)) == uj(2, 1)


def test_theta_partial_of_even_is_zero():
    assert not elem_partial(uj(1, 1), ("theta", 1, 0))


@settings(max_examples=200)
@given(element(pmax=3, dmax=2), st.tuples(st.integers(1, 2), st.integers(0, 2)),
       st.tuples(st.integers(1, 2), st.integers(0, 2)))
def test_theta_derivatives_anticommute(a, v, w):
    lhs = partial_theta(partial_theta(a, *w), *v)
    rhs = partial_theta(partial_theta(a, *v), *w)
    assert lhs == -rhs


# -- total derivative ----------------------------------------------------------------

def test_dx_theta():
    assert elem_dx(th(1, 0)) == th(1, 1)


def test_dx_chain_rule():
    c = u1**3 + u1
    assert elem_dx(Element.scalar(R, c)) == uj(1, 1) * (3 * u1**2 + 1)


def test_dx_leibniz_example():
    assert elem_dx(uj(1, 1) * th(1, 0)) == uj(1, 2) * th(1, 0) + uj(1, 1) * th(1, 1)


@settings(max_examples=200)
@given(element(dmax=2), element(dmax=2))
def test_dx_is_even_derivation(a, b):
    assert elem_dx(a * b) == elem_dx(a) * b + a * elem_dx(b)


@settings(max_examples=200)
@given(element(dmax=3))
def test_dx_raises_standard_degree(a):
    for d in range(4):
        part = homogeneous_component(a, "standard", d)
        img = elem_dx(part)
        assert img == homogeneous_component(img, "standard", d + 1)


# -- gradings -------------------------------------------------------------------------

def test_degrees():
    R3 = coeff_ring(3)
    a = Element.ujet(R3, 1, 2) * Element.theta(R3, 3, 1)
    assert elem_degree(a, "standard") == 3
    assert elem_degree(a, "theta") == 1
    assert elem_degree(uj(1, 1) + th(1, 0), "standard") is NON_HOMOGENEOUS


def test_homogeneous_components():
    a = uj(1, 1) * th(1, 0) + th(1, 1)
    assert homogeneous_component(a, "u_count", 1) == uj(1, 1) * th(1, 0)
    assert homogeneous_component(a, "u_count", 0) == th(1, 1)
    assert not homogeneous_component(a, "theta", -5)


@settings(max_examples=200)
@given(element(dmax=3))
def test_components_sum_back(a):
    for g in ("standard", "theta", "u_count", "theta1", "theta0", "theta_ge2"):
        total = Element(R)
        for k in range(0, 8):
            total = total + homogeneous_component(a, g, k)
        assert total == a


# -- slice bases -------------------------------------------------------------------------

def test_slice_examples():
    assert slice_basis(1, 0, 2) == [mono(t=[(1, 0)]), mono(t=[(2, 0)])]
    assert sorted(slice_basis(0, 1, 2)) == sorted([mono(u=[((1, 1), 1)]), mono(u=[((2, 1), 1)])])
    assert slice_basis(3, 3, 1) == [mono(t=[(1, 0), (1, 1), (1, 2)])]


def _count_by_series(p, d, N):
    """Coefficient of y^p x^d in prod_{i,s>=1} 1/(1 - x^s) * prod_{i,s>=0} (1 + y x^s)."""
    # series[(p, d)] truncated at degree d, theta count p
    series = {(0, 0): 1}
    for _ in range(N):
        for s in range(1, d + 1):
            new = dict(series)
            for (q, e), c in series.items():
                k = 1
                while e + k * s <= d:
                    new[(q, e + k * s)] = new.get((q, e + k * s), 0) + c
                    k += 1
            series = new
        for s in range(0, d + 1):
            new = dict(series)
            for (q, e), c in series.items():
                if e + s <= d and q + 1 <= p:
                    new[(q + 1, e + s)] = new.get((q + 1, e + s), 0) + c
            series = new
    return series.get((p, d), 0)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_slice_sizes_match_generating_function(N):
    for d in range(7):
        for p in range(0, d + N + 1):
            basis = slice_basis(p, d, N)
            assert len(basis) == len(set(basis)) == _count_by_series(p, d, N), (p, d, N)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_slice_members_have_bidegree(N):
    for d in range(5):
        for p in range(d + N + 1):
            for m in slice_basis(p, d, N):
                assert m.standard_degree() == d and len(m.theta) == p


# -- classification and weights --------------------------------------------------------------

def test_classify_examples():
    assert subspace_classify(mono(t=[(1, 0), (2, 1)])) == "C_hat"
    assert subspace_classify(mono(u=[((1, 1), 1)], t=[(1, 2)])) == ("C_i_nt", 1)
    assert subspace_classify(mono(u=[((1, 1), 1), ((2, 1), 1)])) == "M_hat"


def _has_mixed_pair(m):
    owners = [i for (i, s), e in m.u for _ in range(e)] + [i for i, s in m.theta if s >= 2]
    return len(set(owners)) > 1


@pytest.mark.parametrize("N", [1, 2, 3])
def test_classification_partitions_slices(N):
    for d in range(5):
        for p in range(d + N + 1):
            for m in slice_basis(p, d, N):
                c = subspace_classify(m)
                only_low = all(s <= 1 for _, s in m.theta) and not m.u
                in_c = c == "C_hat"
                in_ci = isinstance(c, tuple)
                in_m = c == "M_hat"
                assert in_c + in_ci + in_m == 1
                assert in_c == only_low
                assert in_m == _has_mixed_pair(m)


def test_weights():
    assert weight(mono(u=[((1, 1), 1)]), 1) == Fraction(3, 2)
    assert weight(mono(t=[(1, 0)]), 1) == Fraction(-1, 2)
    assert weight(mono(t=[(2, 5)]), 1) == 0
