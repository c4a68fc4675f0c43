"""Local functionals: densities modulo total x-derivatives."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .jet import NON_HOMOGENEOUS, ONE, Element, elem_degree, elem_dx, partial_theta, partial_u
from .operators import OperatorId, make_operator
from .pencil import PencilData


@dataclass(frozen=True)
class Functional:
    """The class of ``density`` in A/d_x A; representatives are not canonical."""

    density: Element

    @property
    def ring(self):
        return self.density.ring

    def __add__(self, other: "Functional") -> "Functional":
        return Functional(self.density + other.density)

    def __sub__(self, other: "Functional") -> "Functional":
        return Functional(self.density - other.density)

    def __neg__(self):
        return Functional(-self.density)

    def scale(self, c) -> "Functional":
        return Functional(self.density * c)


def variational(a: Element, var: tuple) -> Element:
    """var = ('u', i) or ('theta', i): sum_s (-d_x)^s d/dvar^s."""
    kind, i = var
    if kind == "u":
        top = a.max_jet(i)
        part = lambda s: partial_u(a, i, s)
    elif kind == "theta":
        top = a.max_theta(i)
        part = lambda s: partial_theta(a, i, s)
    else:
        raise ValueError(f"unknown variable kind {kind!r}")
    out = Element(a.ring)
    for s in range(top + 1):
        t = part(s)
        for _ in range(s):
            t = -elem_dx(t)
        out = out + t
    return out


def augmentation(a: Element):
    """Image under u^{i,s>0}, theta_i^s -> 0: the coefficient of the unit monomial."""
    return a.terms.get(ONE, a.ring.zero)


def is_zero_functional(F: Functional) -> bool:
    a = F.density if isinstance(F, Functional) else F
    N = a.ring.N
    for i in range(1, N + 1):
        if variational(a, ("u", i)) or variational(a, ("theta", i)):
            return False
    return not augmentation(a)


def theta_degree(a: Element):
    return elem_degree(a, "theta")


def schouten(A: Functional, B: Functional) -> Functional:
    """[A, B] = int dA/dtheta_i dB/du^i + (-1)^p dA/du^i dB/dtheta_i."""
    if A.ring is not B.ring:
        raise TypeError("functionals over different rings")
    p = theta_degree(A.density)
    if p is NON_HOMOGENEOUS:
        raise NonHomogeneous("the first argument must have a single theta-degree")
    sign = -1 if p % 2 else 1
    out = Element(A.ring)
    for i in range(1, A.ring.N + 1):
        out = out + variational(A.density, ("theta", i)) * variational(B.density, ("u", i))
        t = variational(A.density, ("u", i)) * variational(B.density, ("theta", i))
        out = out + (t if sign > 0 else -t)
    return Functional(out)


class NonHomogeneous(ValueError):
    pass


def d_lambda_functional(p: PencilData, F: Functional) -> Functional:
    return Functional(make_operator(OperatorId("D_lambda"), p)(F.density))


# -- central invariants ---------------------------------------------------------------

@dataclass
class DeformationCoeffs:
    """A^{ij}_{k,l;a} for the deformed pencil, keyed by (k, l, a, i, j)."""

    N: int
    entries: dict = field(default_factory=dict)

    def get(self, ring, k, l, a, i, j):
        v = self.entries.get((k, l, a, i, j))
        return ring.zero if v is None else ring.convert(v)


@dataclass
class CentralInvariants:
    c: list
    violations: list = field(default_factory=list)  # (i, j) with d_j c_i != 0

    @property
    def depends_only_on_own(self) -> bool:
        return not self.violations


def central_invariants(p: PencilData, A: DeformationCoeffs) -> CentralInvariants:
    if p.mode != "concrete":
        raise ValueError("central invariants need a concrete pencil")
    ring = p.ring
    N = p.N
    cs = []
    for i in range(1, N + 1):
        ui = ring.u(i)
        val = A.get(ring, 2, 3, 2, i, i) - ui * A.get(ring, 2, 3, 1, i, i)
        for k in range(1, N + 1):
            if k == i:
                continue
            t = A.get(ring, 1, 2, 2, k, i) - ui * A.get(ring, 1, 2, 1, k, i)
            if t:
                val = val + t * t / (p.fi(k) * (ring.u(k) - ui))
        cs.append(val / (p.fi(i) * p.fi(i) * 3))
    res = CentralInvariants(cs)
    for i, ci in enumerate(cs, start=1):
        for j in range(1, N + 1):
            if j != i and ci.partial(j):
                res.violations.append((i, j))
    return res


def kdv_deformation() -> DeformationCoeffs:
    """The eps^2 term (1/8) delta''' of the second KdV bracket."""
    return DeformationCoeffs(1, {(2, 3, 2, 1, 1): Fraction(1, 8)})
