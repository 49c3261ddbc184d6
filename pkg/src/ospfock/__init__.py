"""Truncated Fock-space realization of the oscillator representation of osp_res.

Modules:
    superalgebra     real-linear operators, the truncated osp_res, brackets and cocycle
    fock             reduced monomials, inner product and the Fock operators
    verify           pre-representation axioms and operator identities at truncation
    series           orbit series, BCH, seminorm estimates
    counterexamples  the singular function h and divergence witnesses
    suites, cli      batch runner
"""

from .fock import FockSpace, FockVector, fock_space, rho_full
from .superalgebra import (
    EVEN,
    ODD,
    CentralElement,
    OspElement,
    ParityError,
    RealLinearOperator,
    TruncatedSpace,
    canonical_generators,
    cocycle,
    extended_bracket,
    osp_norm,
    random_element,
    superbracket,
)

__version__ = "0.1.0"
