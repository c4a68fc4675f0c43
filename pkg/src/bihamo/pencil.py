"""Diagonal metric data of a semisimple hydrodynamic pencil.

Canonical coordinates are assumed: g1 = diag(f^i), g2 = diag(u^i f^i).  The
distinctness of the u^i is a standing assumption and is not checked.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .coeff import CoeffFn, coeff_ring
from .formal import formal_ring
from .jet import Element, JetMonomial


class MissingSqrtWitness(ValueError):
    pass


class EqualIndices(ValueError):
    pass


class WitnessMismatch(ValueError):
    pass


@dataclass(frozen=True)
class PencilData:
    N: int
    f: tuple = ()
    sqrt_witness: tuple | None = None
    mode: str = "concrete"

    def __post_init__(self):
        if self.mode not in ("concrete", "formal"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "concrete":
            if len(self.f) != self.N:
                raise ValueError("need one f^i per index")
            for fi in self.f:
                if not fi:
                    raise ValueError("metric entries must be nonzero")
            if self.sqrt_witness is not None:
                if len(self.sqrt_witness) != self.N:
                    raise ValueError("need one witness per index")
                for i, (h, fi) in enumerate(zip(self.sqrt_witness, self.f), start=1):
                    if h * h != fi:
                        raise WitnessMismatch(f"h{i}^2 != f{i}")

    # -- construction helpers ---------------------------------------------
    @classmethod
    def concrete(cls, N: int, f, witnesses=None) -> "PencilData":
        R = coeff_ring(N)
        fs = tuple(R.convert(x) for x in f)
        hs = None if witnesses is None else tuple(R.convert(x) for x in witnesses)
        return cls(N, fs, hs, "concrete")

    @classmethod
    def constant(cls, N: int, values=None) -> "PencilData":
        """Constant metric; unit entries (with witnesses) by default."""
        if values is None:
            return cls.concrete(N, [1] * N, [1] * N)
        return cls.concrete(N, values)

    @classmethod
    def formal(cls, N: int) -> "PencilData":
        return cls(N, (), None, "formal")

    @property
    def ring(self):
        return formal_ring(self.N) if self.mode == "formal" else coeff_ring(self.N)

    @property
    def has_witness(self) -> bool:
        return self.mode == "formal" or self.sqrt_witness is not None

    def _check(self, *idx):
        for i in idx:
            if not 1 <= i <= self.N:
                raise IndexError(f"index {i} out of range for N={self.N}")

    # -- metric data -------------------------------------------------------
    def fi(self, i: int):
        self._check(i)
        if self.mode == "formal":
            return self.ring.H(i, -2)
        return self.f[i - 1]

    def dfi(self, j: int, i: int):
        """d_j f^i."""
        return self.fi(i).partial(j)

    def h_power(self, i: int, k: int):
        """(f^i)^(k/2)."""
        self._check(i)
        if self.mode == "formal":
            return self.ring.H(i, -k)
        if k % 2 == 0:
            return self.f[i - 1] ** (k // 2)
        if self.sqrt_witness is None:
            raise MissingSqrtWitness(f"(f{i})^({k}/2) needs a square-root witness")
        return self.sqrt_witness[i - 1] ** k

    def max_f_degree(self) -> int:
        """Largest u-degree among polynomial f^i (raises for rational f)."""
        if self.mode == "formal":
            raise ValueError("formal pencils have no polynomial degree")
        for fi in self.f:
            if not fi.is_polynomial() or fi.lambda_degree() > 0:
                raise ValueError("f is not a lambda-free polynomial")
        return max(fi.total_u_degree() for fi in self.f)

    def is_constant(self) -> bool:
        return self.mode == "concrete" and all(fi.is_constant() for fi in self.f)


def gamma(p: PencilData, i: int, j: int):
    """Rotation coefficient gamma_ij = H_i^-1 d_i H_j with H = f^(-1/2)."""
    p._check(i, j)
    if i == j:
        raise EqualIndices("gamma_ii is not defined")
    if p.mode == "formal":
        return p.ring.gamma(i, j)
    dfj = p.dfi(i, j)
    if not dfj:
        return p.ring.zero
    if p.sqrt_witness is None:
        raise MissingSqrtWitness(f"gamma_{i}{j} needs square-root witnesses")
    hi = p.sqrt_witness[i - 1]
    hj = p.sqrt_witness[j - 1]
    return -Fraction(1, 2) * hi * dfj / hj**3


@dataclass
class FerapontovReport:
    residuals: list = field(default_factory=list)  # (equation, indices, value)

    @property
    def passed(self) -> bool:
        return all(not v for _, _, v in self.residuals)

    def failures(self):
        return [r for r in self.residuals if r[2]]


def validate_ferapontov(p: PencilData) -> FerapontovReport:
    """Evaluate the three Ferapontov families; every residual must vanish."""
    N = p.N
    ring = p.ring
    g = {(i, j): gamma(p, i, j) for i in range(1, N + 1) for j in range(1, N + 1) if i != j}
    rep = FerapontovReport()

    def d(k, i, j):
        return g[(i, j)].partial(k)

    for i in range(1, N + 1):
        for j in range(1, N + 1):
            for k in range(1, N + 1):
                if len({i, j, k}) == 3:
                    r = d(k, i, j) - g[(i, k)] * g[(k, j)]
                    rep.residuals.append(("dgammaijk", (i, j, k), r))
    for i in range(1, N + 1):
        for j in range(1, N + 1):
            if i == j:
                continue
            others = [k for k in range(1, N + 1) if k not in (i, j)]
            r1 = d(i, i, j) + d(j, j, i)
            r2 = ring.u(i) * d(i, i, j) + ring.u(j) * d(j, j, i)
            for k in others:
                prod = g[(k, i)] * g[(k, j)]
                r1 = r1 + prod
                r2 = r2 + ring.u(k) * prod
            r2 = r2 + (g[(i, j)] + g[(j, i)]) * Fraction(1, 2)
            rep.residuals.append(("dgammaij", (i, j), r1))
            rep.residuals.append(("udgamma", (i, j), r2))
    return rep


def psi(p: PencilData, a: Element, direction: str = "forward") -> Element:
    """Rescale u^{i,s} by (f^i)^(s/2) and theta_i^s by (f^i)^((s+1)/2)."""
    if direction not in ("forward", "inverse"):
        raise ValueError(f"unknown direction {direction!r}")
    if a.ring is not p.ring:
        from .jet import RingMismatch

        raise RingMismatch("operand ring does not match the pencil mode")
    sign = 1 if direction == "forward" else -1
    cache: dict = {}
    out: dict = {}
    for m, c in a.terms.items():
        pw = _psi_powers(m)
        factor = None
        for i, k in pw.items():
            if not k:
                continue
            key = (i, sign * k)
            v = cache.get(key)
            if v is None:
                v = cache[key] = p.h_power(i, sign * k)
            factor = v if factor is None else factor * v
        out[m] = c if factor is None else c * factor
    return Element(a.ring, out)


def _psi_powers(m: JetMonomial) -> dict:
    pw: dict = {}
    for (i, s), e in m.u:
        pw[i] = pw.get(i, 0) + s * e
    for i, s in m.theta:
        pw[i] = pw.get(i, 0) + s + 1
    return pw


def theta_bar(p: PencilData, i: int) -> Element:
    """theta_i^0 + sum_{j != i} 2 (u^j - u^i) gamma_ji theta_j^0."""
    p._check(i)
    ring = p.ring
    out = Element.theta(ring, i, 0)
    for j in range(1, p.N + 1):
        if j == i:
            continue
        c = (ring.u(j) - ring.u(i)) * gamma(p, j, i) * 2
        out = out + Element.theta(ring, j, 0) * c
    return out


def theta_tilde(p: PencilData, i: int) -> Element:
    """f^i theta_i^0 + sum_{j != i} (u^i - u^j) f^j d_j f^i / f^i theta_j^0."""
    p._check(i)
    ring = p.ring
    out = Element.theta(ring, i, 0) * p.fi(i)
    for j in range(1, p.N + 1):
        if j == i:
            continue
        c = (ring.u(i) - ring.u(j)) * p.fi(j) * p.dfi(j, i) / p.fi(i)
        out = out + Element.theta(ring, j, 0) * c
    return out
