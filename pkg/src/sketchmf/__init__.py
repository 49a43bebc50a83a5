"""Sketched Krylov methods for computing the action of matrix functions f(A)b.

Provides truncated-Arnoldi Krylov bases combined with randomized subspace
embeddings, closed-form and quadrature-based sketched FOM, sketched GMRES
with adaptive resolvent quadrature, and dense reference oracles for testing.
"""

from .linalg_core import SparseMatrix, ThinQR, spmv, thin_qr, least_squares, \
    dense_eig, hermitian_min_eig, condition_estimate
from .sketch import SketchOperator, EmbeddingEstimate, make_sketch
from .krylov import KrylovState, WhitenedBasis, arnoldi_build, whiten, \
    sketched_ritz, two_pass_assemble
from .matfun import FunctionSpec, QuadratureRule, scalar_eval, stieltjes_rule, \
    contour_rule, adapt_quadrature, dense_matfun
from .sfom import SfomResult, sfom_closed, sfom_quadrature, sfom_hhat, \
    fom_distance_bound
from .sgmres import SgmresResult, sgmres_solve, error_estimate, residual_check, \
    stieltjes_bound, run_sgmres_twopass

__all__ = [
    "SparseMatrix", "ThinQR", "spmv", "thin_qr", "least_squares",
    "dense_eig", "hermitian_min_eig", "condition_estimate",
    "SketchOperator", "EmbeddingEstimate", "make_sketch",
    "KrylovState", "WhitenedBasis", "arnoldi_build", "whiten",
    "sketched_ritz", "two_pass_assemble",
    "FunctionSpec", "QuadratureRule", "scalar_eval", "stieltjes_rule",
    "contour_rule", "adapt_quadrature", "dense_matfun",
    "SfomResult", "sfom_closed", "sfom_quadrature", "sfom_hhat",
    "fom_distance_bound",
    "SgmresResult", "sgmres_solve", "error_estimate", "residual_check",
    "stieltjes_bound", "run_sgmres_twopass",
]

__version__ = "0.1.0"
