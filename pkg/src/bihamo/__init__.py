"""Exact computations in the theta-formalism for semisimple Poisson pencils of hydrodynamic type."""

from .coeff import CoeffFn, CoeffRing, coeff_ring
from .jet import Element, JetMonomial, slice_basis
from .operators import OperatorId, apply, make_operator
from .pencil import PencilData, validate_ferapontov

__all__ = [
    "CoeffFn",
    "CoeffRing",
    "coeff_ring",
    "Element",
    "JetMonomial",
    "slice_basis",
    "OperatorId",
    "apply",
    "make_operator",
    "PencilData",
    "validate_ferapontov",
]
