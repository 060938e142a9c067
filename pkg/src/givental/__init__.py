"""Exact computer algebra for Givental's loop-group action.

Submodules:

* :mod:`givental.exact` - Gaussian rationals, 2x2 matrices, truncated matrix series;
* :mod:`givental.p1` - the R-matrix of the projective line and ``r = log R``;
* :mod:`givental.bounds` - finite-range checks of the inequalities behind ``r_l != 0``;
* :mod:`givental.weyl` - quadratic Hamiltonians, Weyl quantization, the cocycle;
* :mod:`givental.correlators` - kappa pushforwards, ancestor translation and
  the derivative actions of the loop-group generators on correlators.
"""

from .exact import GaussRational, I, Mat2, MatrixSeries, series_exp, series_log, star_adjoint, symplectic_residual
from .p1 import certify_nonvanishing, compute_R, compute_c, compute_r, r_direct, recursion_residual
from .bounds import bounds_report, rprime_bound_check, sigma
from .weyl import (
    DarbouxPolynomial,
    FockOperator,
    LaurentEndo,
    cocycle,
    construct_r_hat,
    construct_s_hat,
    hamiltonian_of,
    is_infinitesimal_symplectic,
    omega,
    op_commutator,
    op_compose,
    poisson_bracket,
    quantize,
)
from .correlators import (
    CorrelatorExpression,
    Family,
    KappaPolynomial,
    apply_r_action,
    apply_s_action,
    descendent_to_ancestor,
    kappa_pushforward,
    parse_expression,
)

__version__ = "0.1.0"
