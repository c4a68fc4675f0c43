"""Cohomology of finite slices of the complexes (A[lambda], D) and (F[lambda], d).

Coefficients are truncated to polynomials: u-degree <= K and lambda-degree
<= L.  Two counts are produced for every window:

* ``box``: dim ker of the differential on the (K, L) window minus the rank of
  the incoming differential from the window that maps into it.  Classes near
  the truncation boundary can be miscounted here.
* ``interior``: classes are labelled by the leading monomial of a normal form
  (term order: higher lambda-degree first, so lambda is eliminated in favour of
  u), and a class is counted when that monomial lies in the window.  For a
  constant metric every operator preserves the degree
  n = (coefficient degree) + (number of u-jet factors), each n-piece is finite,
  and the interior count is exact.  Otherwise it is computed inside a larger
  box and reported as stabilized when two margins agree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement
from math import gcd

from .jet import Element, JetMonomial, elem_dx, slice_basis, subspace_classify
from .operators import OperatorId, make_operator
from .pencil import PencilData


class TruncationOverflow(ArithmeticError):
    pass


class UnsupportedCoefficient(ValueError):
    pass


class RangeError(ValueError):
    pass


SPACES = ("A_full", "C_hat", "dC_i", "F_hat")


@dataclass(frozen=True)
class SliceSpec:
    p: int
    d: int
    K: int
    L: int
    space: str = "A_full"
    differential: OperatorId = OperatorId("D_lambda")
    index: int | None = None  # for dC_i

    def __post_init__(self):
        if self.K < 0 or self.L < 0:
            raise ValueError("K and L must be non-negative")
        if self.space not in SPACES:
            raise ValueError(f"unknown space {self.space!r}")
        if self.space == "dC_i" and self.index is None:
            raise ValueError("dC_i needs an index")

    def shifted(self, dp: int, dd: int, K=None, L=None) -> "SliceSpec":
        return SliceSpec(
            self.p + dp,
            self.d + dd,
            self.K if K is None else K,
            self.L if L is None else L,
            self.space,
            self.differential,
            self.index,
        )


# -- coordinates ---------------------------------------------------------------------
# A coordinate is (JetMonomial, u-exponent tuple, lambda exponent); a vector is a
# dict coordinate -> Fraction.


def order_key(key):
    m, ue, le = key
    return (le, sum(ue), ue, m.theta, m.u)


def coeff_monomials(N: int, K: int, L: int):
    out = []
    for deg in range(K + 1):
        for combo in combinations_with_replacement(range(N), deg):
            ue = [0] * N
            for v in combo:
                ue[v] += 1
            for le in range(L + 1):
                out.append((tuple(ue), le))
    return out


def homogeneous_coeff_monomials(N: int, n: int):
    """(ue, le) with sum(ue) + le == n."""
    out = []
    for le in range(n + 1):
        for combo in combinations_with_replacement(range(N), n - le):
            ue = [0] * N
            for v in combo:
                ue[v] += 1
            out.append((tuple(ue), le))
    return out


def _coeff(ring, ue, le):
    c = ring.one
    for i, e in enumerate(ue, start=1):
        if e:
            c = c * ring.u(i) ** e
    if le:
        c = c * ring.lam**le
    return c


def element_to_vector(a: Element) -> dict:
    vec = {}
    for m, c in a.terms.items():
        if not c.is_polynomial():
            raise UnsupportedCoefficient("non-polynomial coefficient in a slice")
        for ue, le, v in c.poly_terms():
            if v:
                vec[(m, ue, le)] = v
    return vec


def vector_to_element(ring, vec: dict) -> Element:
    out = Element(ring)
    for (m, ue, le), v in vec.items():
        out = out + Element(ring, {m: _coeff(ring, ue, le) * v})
    return out


def _jets(m: JetMonomial) -> int:
    return sum(e for _, e in m.u)


# -- exact elimination -----------------------------------------------------------------

def _integerize(vec: dict) -> dict:
    den = 1
    for v in vec.values():
        den = den * v.denominator // gcd(den, v.denominator)
    out = {k: int(v * den) for k, v in vec.items()}
    g = 0
    for v in out.values():
        g = gcd(g, v)
    if g > 1:
        out = {k: v // g for k, v in out.items()}
    return out


class Echelon:
    """Incremental fraction-free row echelon form over Z.

    Each stored vector has a distinct leading coordinate (the largest under
    ``order_key``); integer rows are kept primitive.
    """

    def __init__(self, key=order_key):
        self.pivots: dict = {}
        self._keys: dict = {}
        self._order = key

    def _lead(self, vec):
        best = None
        bk = None
        for k in vec:
            ok = self._keys.get(k)
            if ok is None:
                ok = self._keys[k] = self._order(k)
            if best is None or ok > bk:
                best, bk = k, ok
        return best

    def reduce(self, vec: dict) -> dict:
        v = _integerize(vec) if vec and not isinstance(next(iter(vec.values())), int) else dict(vec)
        while v:
            lead = self._lead(v)
            w = self.pivots.get(lead)
            if w is None:
                return v
            a, b = v[lead], w[lead]
            g = gcd(a, b)
            fa, fb = b // g, a // g
            out = {k: x * fa for k, x in v.items()}
            for k, x in w.items():
                y = out.get(k, 0) - fb * x
                if y:
                    out[k] = y
                else:
                    out.pop(k, None)
            c = 0
            for x in out.values():
                c = gcd(c, x)
            if c > 1:
                out = {k: x // c for k, x in out.items()}
            v = out
        return v

    def add(self, vec: dict) -> bool:
        """Insert; True when the vector was independent."""
        v = self.reduce(vec)
        if not v:
            return False
        self.pivots[self._lead(v)] = v
        return True

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def leading(self) -> set:
        return set(self.pivots)


# -- matrices ---------------------------------------------------------------------------

@dataclass
class SliceMatrix:
    domain: SliceSpec
    codomain: SliceSpec
    cols: list  # coordinates or labels of domain basis vectors
    rows: list  # coordinates appearing in the image window, sorted
    entries: dict  # (row, col) -> Fraction

    @property
    def shape(self):
        return (len(self.rows), len(self.cols))

    def columns(self):
        out = [dict() for _ in self.cols]
        for (r, c), v in self.entries.items():
            out[c][self.rows[r]] = v
        return out


def exact_rank(M) -> int:
    """Rank over Q of a SliceMatrix or a list of sparse column dicts."""
    if isinstance(M, SliceMatrix):
        cols, ech = M.columns(), Echelon()
    else:
        # arbitrary comparable row labels
        cols, ech = M, Echelon(key=lambda k: k)
    for col in cols:
        if col:
            ech.add(col)
    return ech.rank


def _check_pencil(p: PencilData):
    if p.mode != "concrete":
        raise UnsupportedCoefficient("slice cohomology needs a concrete pencil")
    for fi in p.f:
        if not fi.is_polynomial():
            raise UnsupportedCoefficient("metric entries must be polynomial in u")


def _max_f_degree(p: PencilData) -> int:
    return max(fi.total_u_degree() for fi in p.f)


def _ci_monomial(m: JetMonomial, i: int) -> bool:
    """m in C_i: positive jets only in index i."""
    return all(j == i for (j, s), _ in m.u) and all(j == i for j, s in m.theta if s >= 2)


def domain_basis(spec: SliceSpec, p: PencilData, coeffs) -> list:
    """Basis vectors (dicts) of the domain, with pairwise distinct leading coordinates.

    ``coeffs`` maps a jet monomial to the coefficient monomials allowed with it.
    """
    ring = p.ring
    N = p.N
    if spec.space in ("A_full", "F_hat", "C_hat"):
        out = []
        for m in slice_basis(spec.p, spec.d, N):
            if spec.space == "C_hat" and subspace_classify(m) != "C_hat":
                continue
            for ue, le in coeffs(m):
                out.append({(m, ue, le): Fraction(1)})
        return out
    # dC_i: images of dhat_i on C_i monomials of bidegree (p-1, d-1)
    i = spec.index
    dh = make_operator(OperatorId("dhat", (i,)), p)
    ech = Echelon()
    for m in slice_basis(spec.p - 1, spec.d - 1, N):
        if not _ci_monomial(m, i):
            continue
        for ue, le in coeffs(m, source=True):
            img = dh(Element(ring, {m: _coeff(ring, ue, le)}))
            if img:
                ech.add(element_to_vector(img))
    return [{k: Fraction(v) for k, v in vec.items()} for vec in ech.pivots.values()]


def _apply_vec(op, ring, vec) -> dict:
    return element_to_vector(op(vector_to_element(ring, vec)))


def assemble(spec: SliceSpec, p: PencilData, op: OperatorId | str | None = None) -> SliceMatrix:
    """Matrix of the differential on the (K, L) window of ``spec``."""
    _check_pencil(p)
    opid = spec.differential if op is None else op
    if isinstance(opid, str):
        from .operators import parse_operator

        opid = parse_operator(opid)
    D = make_operator(opid, p)
    N = p.N
    K2 = spec.K + _max_f_degree(p) + 1
    L2 = spec.L + 1
    cod = spec.shifted(1, 1, K=K2, L=L2)
    cm = coeff_monomials(N, spec.K, spec.L)
    basis = domain_basis(spec, p, _window_coeffs(cm, spec))
    cols = []
    rowset = {}
    entries = {}
    for ci, vec in enumerate(basis):
        cols.append(min(vec, key=order_key) if len(vec) == 1 else max(vec, key=order_key))
        img = _apply_vec(D, p.ring, vec)
        for key, v in img.items():
            m, ue, le = key
            if sum(ue) > K2 or le > L2:
                raise TruncationOverflow(f"image term {key} leaves the codomain window")
            r = rowset.setdefault(key, len(rowset))
            entries[(r, ci)] = v
    rows = sorted(rowset, key=lambda k: rowset[k])
    return SliceMatrix(spec, cod, cols, rows, entries)


def _window_coeffs(cm, spec):
    L0 = 0 if spec.space == "dC_i" else None

    def fn(m, source=False):
        if L0 is None:
            return cm
        return [(ue, le) for ue, le in cm if le <= L0]

    return fn


# -- cohomology ---------------------------------------------------------------------------

@dataclass
class WindowRow:
    K: int
    L: int
    box_ker: int
    box_im: int
    interior: int

    @property
    def box(self) -> int:
        return self.box_ker - self.box_im


@dataclass
class CohomologyReport:
    spec: SliceSpec
    rows: list = field(default_factory=list)
    per_degree: dict = field(default_factory=dict)  # n -> exact dim H of the n-piece
    exact: bool = False
    stabilized: bool = False
    boundary: list = field(default_factory=list)  # leading coordinates outside the window

    def at(self, K: int, L: int) -> WindowRow:
        for r in self.rows:
            if r.K == K and r.L == L:
                return r
        raise KeyError((K, L))

    def interior(self, K: int | None = None, L: int | None = None) -> int:
        K = self.spec.K if K is None else K
        L = self.spec.L if L is None else L
        return self.at(K, L).interior


class _Piece:
    """One finite piece of the complex: domain basis generator + operator."""

    def __init__(self, p: PencilData, spec: SliceSpec, coeffs):
        self.p = p
        self.spec = spec
        self.coeffs = coeffs

    def basis(self, spec):
        if spec.p < 0 or spec.d < 0:
            return []
        return domain_basis(spec, self.p, self.coeffs)


def _leading_sets(p: PencilData, spec: SliceSpec, coeffs_at, coeffs_in, coeffs_dx_in, coeffs_dx_out):
    """LM(Z) and LM(B) for the piece described by the coefficient generators."""
    ring = p.ring
    D = make_operator(spec.differential, p)
    at_basis = domain_basis(spec, p, coeffs_at) if spec.p >= 0 and spec.d >= 0 else []
    # Z: process domain vectors by increasing leading coordinate
    at_basis.sort(key=lambda v: order_key(max(v, key=order_key)))
    ech = Echelon()
    if spec.space == "F_hat":
        out_spec = spec.shifted(1, 0)
        for vec in domain_basis(out_spec, p, coeffs_dx_out):
            ech.add(element_to_vector(elem_dx(vector_to_element(ring, vec))))
    lm_z = set()
    for vec in at_basis:
        img = _apply_vec(D, ring, vec)
        if not img or not ech.add(img):
            lm_z.add(max(vec, key=order_key))
    # B: image of the incoming differential (and of d_x for F_hat)
    bech = Echelon()
    inc = spec.shifted(-1, -1)
    if inc.p >= 0 and inc.d >= 0:
        for vec in domain_basis(inc, p, coeffs_in):
            img = _apply_vec(D, ring, vec)
            if img:
                bech.add(img)
    if spec.space == "F_hat" and spec.d >= 1:
        for vec in domain_basis(spec.shifted(0, -1), p, coeffs_dx_in):
            img = element_to_vector(elem_dx(vector_to_element(ring, vec)))
            if img:
                bech.add(img)
    lm_b = bech.leading()
    return lm_z, lm_b


def _homog_coeffs(N: int, n: int, space: str, drop: int = 0):
    """Coefficient monomials so that (coeff degree) + (jets) == n (+drop for dhat sources)."""
    cache = {}

    def fn(m, source=False):
        target = n + (1 if source else 0)
        k = target - _jets(m)
        if k < 0:
            return []
        r = cache.get(k)
        if r is None:
            r = cache[k] = homogeneous_coeff_monomials(N, k)
            if space == "dC_i":
                r = cache[k] = [(ue, le) for ue, le in r if le == 0]
        return r

    return fn


def _in_window(key, K, L):
    m, ue, le = key
    return sum(ue) <= K and le <= L


def _box_numbers(spec, p, K, L):
    """dim ker on the (K, L) window minus rank of the incoming window."""
    ring = p.ring
    D = make_operator(spec.differential, p)
    e = _max_f_degree(p) + 1
    cm = coeff_monomials(p.N, K, L)
    at_basis = domain_basis(spec.shifted(0, 0, K=K, L=L), p, _window_coeffs(cm, spec))
    ech = Echelon()
    if spec.space == "F_hat":
        cmo = coeff_monomials(p.N, K + e, L + 1)
        for vec in domain_basis(spec.shifted(1, 0, K=K + e, L=L + 1), p, _window_coeffs(cmo, spec)):
            ech.add(element_to_vector(elem_dx(vector_to_element(ring, vec))))
    base = ech.rank
    if spec.space == "F_hat":
        qech = Echelon()
        for vec in domain_basis(spec.shifted(0, -1, K=K, L=L), p, _window_coeffs(cm, spec)) if spec.d >= 1 else []:
            qech.add(element_to_vector(elem_dx(vector_to_element(ring, vec))))
        q_rank = qech.rank
    else:
        q_rank = 0
    for vec in at_basis:
        ech.add(_apply_vec(D, ring, vec))
    dim_ker = len(at_basis) - q_rank - (ech.rank - base)
    inc = spec.shifted(-1, -1)
    rank_in = 0
    if inc.p >= 0 and inc.d >= 0 and K - e >= 0 and L - 1 >= 0:
        cmi = coeff_monomials(p.N, K - e, L - 1)
        bech = Echelon()
        if spec.space == "F_hat":
            for vec in domain_basis(spec.shifted(0, -1, K=K, L=L), p, _window_coeffs(cm, spec)) if spec.d >= 1 else []:
                bech.add(element_to_vector(elem_dx(vector_to_element(ring, vec))))
        b0 = bech.rank
        for vec in domain_basis(inc.shifted(0, 0, K=K - e, L=L - 1), p, _window_coeffs(cmi, spec)):
            bech.add(_apply_vec(D, ring, vec))
        rank_in = bech.rank - b0
    return dim_ker, rank_in


def _interior_homogeneous(spec, p):
    """Exact per-degree data for a constant metric."""
    N = p.N
    jmax = spec.d + 1
    nmax = spec.K + spec.L + jmax
    lm_by_n = {}
    per_degree = {}
    for n in range(nmax + 1):
        c = _homog_coeffs(N, n, spec.space)
        lm_z, lm_b = _leading_sets(p, spec, c, c, c, c)
        if not lm_b <= lm_z:
            raise ArithmeticError("coboundaries are not cocycles: the differential does not square to zero")
        std = lm_z - lm_b
        per_degree[n] = len(std)
        lm_by_n[n] = std
    return per_degree, lm_by_n


def _interior_margin(spec, p, margin):
    ring = p.ring
    K2 = spec.K + margin
    L2 = spec.L + margin
    cm = coeff_monomials(p.N, K2, L2)
    c = _window_coeffs(cm, spec)
    co = _window_coeffs(coeff_monomials(p.N, K2 + _max_f_degree(p) + 1, L2 + 1), spec)
    lm_z, lm_b = _leading_sets(p, spec.shifted(0, 0, K=K2, L=L2), c, c, c, co)
    return lm_z - lm_b


def cohomology_dim(at: SliceSpec, incoming: SliceSpec | None, p: PencilData, box: bool = True,
                   margin: int = 2) -> CohomologyReport:
    """Window table for K' <= at.K, L' <= at.L.

    ``incoming`` may be None; it is then the same space one bidegree lower.
    """
    _check_pencil(p)
    if incoming is not None:
        if (incoming.p + 1, incoming.d + 1) != (at.p, at.d) or incoming.space != at.space:
            raise ValueError("incoming spec does not map into the at spec")
    rep = CohomologyReport(at)
    if p.is_constant():
        per_degree, lm_by_n = _interior_homogeneous(at, p)
        rep.per_degree = per_degree
        rep.exact = True
        rep.stabilized = True
        std = set().union(*lm_by_n.values()) if lm_by_n else set()
    else:
        std = _interior_margin(at, p, margin)
        std2 = _interior_margin(at, p, margin + 1)
        small = lambda s: {k for k in s if _in_window(k, at.K, at.L)}
        rep.stabilized = small(std) == small(std2)
        std = std2
    rep.boundary = sorted((k for k in std if not _in_window(k, at.K, at.L)), key=order_key)
    for K in range(at.K + 1):
        for L in range(at.L + 1):
            interior = sum(1 for k in std if _in_window(k, K, L))
            if box:
                bk, bi = _box_numbers(at, p, K, L)
            else:
                bk = bi = -1
            rep.rows.append(WindowRow(K, L, bk, bi, interior))
    return rep


def bh_slice(p: PencilData, pdeg: int, ddeg: int, K: int, L: int, box: bool = True) -> CohomologyReport:
    """H^p_d(F[lambda], d_lambda), which computes BH^p_d for d >= 2."""
    if ddeg < 2:
        raise RangeError("the isomorphism with bi-Hamiltonian cohomology needs d >= 2")
    return cohomology_dim(SliceSpec(pdeg, ddeg, K, L, "F_hat"), None, p, box=box)


@dataclass
class RepresentativeReport:
    cocycle: bool
    coboundary: bool

    @property
    def nontrivial(self) -> bool:
        return self.cocycle and not self.coboundary


def verify_representative(p: PencilData, candidate: Element, diff: OperatorId | str,
                          modulo_incoming: SliceSpec) -> RepresentativeReport:
    """Is ``candidate`` closed, and is it outside the incoming image on the given window?"""
    if isinstance(diff, str):
        from .operators import parse_operator

        diff = parse_operator(diff)
    D = make_operator(diff, p)
    closed = not D(candidate)
    ring = p.ring
    spec = modulo_incoming
    cm = coeff_monomials(p.N, spec.K, spec.L)
    ech = Echelon()
    for vec in domain_basis(spec, p, _window_coeffs(cm, spec)):
        img = _apply_vec(D, ring, vec)
        if img:
            ech.add(img)
    if spec.space == "F_hat" and spec.d + 1 >= 1:
        for vec in domain_basis(spec.shifted(1, 0), p, _window_coeffs(cm, spec)):
            ech.add(element_to_vector(elem_dx(vector_to_element(ring, vec))))
    before = ech.rank
    ech.add(element_to_vector(candidate))
    return RepresentativeReport(closed, ech.rank == before)
