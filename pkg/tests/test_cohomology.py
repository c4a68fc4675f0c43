import random
from fractions import Fraction

import pytest
from flint import fmpq_mat
from hypothesis import given, settings
from hypothesis import strategies as st

from bihamo.cohomology import (
    Echelon,
    RangeError,
    SliceSpec,
    TruncationOverflow,
    UnsupportedCoefficient,
    _in_window,
    _window_coeffs,
    assemble,
    bh_slice,
    coeff_monomials,
    cohomology_dim,
    domain_basis,
    exact_rank,
    verify_representative,
)
from bihamo.coeff import coeff_ring
from bihamo.jet import Element, slice_basis, subspace_classify
from bihamo.operators import OperatorId, make_operator
from bihamo.pencil import PencilData

P1 = PencilData.constant(1)
P2 = PencilData.constant(2)
DM1 = OperatorId("Delta_minus1")


# -- assembly ---------------------------------------------------------------------------------

def test_assemble_delta_minus1_example():
    M = assemble(SliceSpec(0, 1, 0, 0, differential=DM1), P1)
    assert M.shape == (2, 1)
    assert sorted(M.entries.values()) == [-1, 1]
    assert (M.codomain.p, M.codomain.d) == (1, 2)
    assert exact_rank(M) == 1


def test_assemble_domain_dimension():
    for K, L in [(0, 0), (2, 3), (4, 1)]:
        M = assemble(SliceSpec(3, 3, K, L), P1)
        assert M.shape[1] == (K + 1) * (L + 1)


def test_assemble_empty_slice():
    M = assemble(SliceSpec(0, 0, 2, 2).shifted(0, -1), P1)
    assert M.shape == (0, 0)


def test_assemble_rejects_rational_or_formal():
    R = coeff_ring(1)
    with pytest.raises(UnsupportedCoefficient):
        assemble(SliceSpec(0, 1, 1, 1), PencilData.concrete(1, [R.u(1) ** -1]))
    with pytest.raises(UnsupportedCoefficient):
        assemble(SliceSpec(0, 1, 1, 1), PencilData.formal(1))


def test_truncation_overflow_detected():
    # an operator that raises the u-degree by more than the declared margin
    R = coeff_ring(1)
    big = PencilData.concrete(1, [R.u(1) ** 3 + 1])
    M = assemble(SliceSpec(0, 1, 1, 1), big)  # margin follows deg f
    assert M.shape[1] == 4
    with pytest.raises(TruncationOverflow):
        assemble(SliceSpec(0, 1, 1, 1), P1, OperatorId("D_g", (R.u(1) ** 3,)))


# -- exact rank --------------------------------------------------------------------------------

def test_rank_examples():
    assert exact_rank([{}, {}]) == 0
    eye = [{(i,): Fraction(1)} for i in range(5)]
    assert exact_rank(eye) == 5


@settings(max_examples=200)
@given(st.integers(1, 6), st.integers(1, 6), st.data())
def test_rank_matches_flint(nr, nc, data):
    entries = data.draw(st.lists(st.integers(-3, 3), min_size=nr * nc, max_size=nr * nc))
    M = fmpq_mat(nr, nc, entries)
    cols = []
    for c in range(nc):
        cols.append({(r,): Fraction(entries[r * nc + c]) for r in range(nr) if entries[r * nc + c]})
    assert exact_rank(cols) == M.rank()


@settings(max_examples=200)
@given(st.integers(0, 10_000))
def test_rank_permutation_invariant(seed):
    M = assemble(SliceSpec(2, 2, 2, 2), P2)
    cols = M.columns()
    rng = random.Random(seed)
    rng.shuffle(cols)
    relabel = list(range(len(M.rows)))
    rng.shuffle(relabel)
    index = {r: relabel[k] for k, r in enumerate(M.rows)}
    renamed = [{(index[k],): v for k, v in col.items()} for col in cols]
    assert exact_rank(renamed) == exact_rank(M)


# -- complex property ------------------------------------------------------------------------------

@pytest.mark.parametrize("p,pd,op", [
    (P1, (1, 1), "D_lambda"), (P1, (2, 2), "D_lambda"), (P2, (1, 2), "D_lambda"),
    (P2, (1, 1), "Delta_minus1"), (PencilData.concrete(2, [coeff_ring(2).u(1) + 1, 1]), (1, 1), "D_lambda"),
])
def test_matrix_complex_property(p, pd, op):
    opid = OperatorId(op)
    inc = assemble(SliceSpec(pd[0], pd[1], 2, 1, differential=opid), p)
    at = assemble(SliceSpec(pd[0] + 1, pd[1] + 1, inc.codomain.K, inc.codomain.L, differential=opid), p)
    col_of = {key: c for c, key in enumerate(at.cols)}
    at_cols = at.columns()
    for col in inc.columns():
        prod = {}
        for key, v in col.items():
            for rkey, w in at_cols[col_of[key]].items():
                prod[rkey] = prod.get(rkey, 0) + v * w
        assert not any(prod.values())


# -- cohomology reports ---------------------------------------------------------------------------------

def test_n1_p_equals_d_examples():
    r = cohomology_dim(SliceSpec(1, 1, 4, 3), None, P1)
    assert all(row.interior == 0 for row in r.rows)
    # the plain box count keeps an artifact of size L at the window edge once K >= 1
    assert all(row.box == (row.L if row.K else 0) for row in r.rows)
    r = cohomology_dim(SliceSpec(0, 0, 4, 3), None, P1)
    assert all(row.interior == row.L + 1 for row in r.rows)
    r = cohomology_dim(SliceSpec(3, 3, 4, 3), None, P1)
    assert all(row.interior == row.K + 1 for row in r.rows)
    assert r.exact and r.stabilized


def test_incoming_spec_must_match():
    with pytest.raises(ValueError):
        cohomology_dim(SliceSpec(1, 1, 2, 2), SliceSpec(0, 1, 2, 2), P1)


def test_report_dimensions_nonnegative():
    r = cohomology_dim(SliceSpec(2, 2, 3, 2), None, P2)
    assert all(row.box >= 0 and row.interior >= 0 for row in r.rows)


def _direct_sum_count(p, q, d, K, L):
    """C_hat[lambda] in full plus dhat_i(C_i) modulo (lambda - u^i)."""
    N = p.N
    n = 0
    for m in slice_basis(q, d, N):
        if subspace_classify(m) == "C_hat":
            n += len(coeff_monomials(N, K, L))
    for i in range(1, N + 1):
        spec = SliceSpec(q, d, K + 2, 0, "dC_i", index=i)
        ech = Echelon()
        for v in domain_basis(spec, p, _window_coeffs(coeff_monomials(N, K + 2, 0), spec)):
            ech.add(v)
        n += sum(1 for k in ech.leading() if _in_window(k, K, L))
    return n


@pytest.mark.parametrize("p", [P1, P2], ids=["N1", "N2"])
def test_delta_minus1_direct_sum(p):
    for q, d in [(0, 0), (1, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 3), (3, 3)]:
        r = cohomology_dim(SliceSpec(q, d, 3, 3, differential=DM1), None, p, box=False)
        for K in range(4):
            for L in range(4):
                assert r.interior(K, L) == _direct_sum_count(p, q, d, K, L), (q, d, K, L)


# -- representatives ------------------------------------------------------------------------------------

def test_representatives_n1():
    R = P1.ring
    base = Element.theta(R, 1, 0) * Element.theta(R, 1, 1) * Element.theta(R, 1, 2)
    K = 3
    for m in range(K):
        rep = verify_representative(P1, base * R.u(1) ** m, "D_lambda", SliceSpec(2, 2, K, 2))
        assert rep.cocycle and not rep.coboundary and rep.nontrivial


def test_representative_di():
    R = P2.ring
    cand = Element.theta(R, 1, 0) * Element.theta(R, 1, 2)
    rep = verify_representative(P2, cand, "Di(1)", SliceSpec(1, 1, 1, 1))
    assert rep.cocycle


def test_coboundary_detected():
    R = P2.ring
    D = make_operator(OperatorId("D_lambda"), P2)
    x = Element.theta(R, 1, 0) * Element.ujet(R, 2, 1) * (R.u(1) + 2) + Element.theta(R, 2, 1) * R.lam
    rep = verify_representative(P2, D(x), "D_lambda", SliceSpec(1, 1, 2, 2))
    assert rep.cocycle and rep.coboundary and not rep.nontrivial


# -- functionals slices -----------------------------------------------------------------------------------

def test_bh_slices_n1():
    r = bh_slice(P1, 2, 2, 3, 2)
    assert all(row.interior == 0 and row.box_im <= row.box_ker for row in r.rows)
    r = bh_slice(P1, 2, 3, 3, 2, box=False)
    assert all(row.interior == row.K + 1 for row in r.rows)


def test_bh_range_error():
    with pytest.raises(RangeError):
        bh_slice(P1, 1, 1, 2, 2)


@pytest.mark.parametrize("pd", [(1, 2), (1, 3), (2, 4), (3, 4), (3, 5)])
def test_bh_vanishing_n1(pd):
    r = bh_slice(P1, pd[0], pd[1], 2, 2, box=False)
    assert r.interior() == 0
