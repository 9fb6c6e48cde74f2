"""Newton-Chebyshev polynomial preconditioners for conjugate gradient.

The package covers the whole pipeline: SPD operators (assembled CSR or
matrix-free stencils) with Jacobi scaling, extremal eigenvalue estimates,
the polynomial preconditioner in Newton and Chebyshev form, an
instrumented PCG solver, the spectrum of the preconditioned operator, and
an experiment harness with a command-line front end.
"""

from .eigen import SpectralBounds, dacg_smallest, estimate_bounds, power_method
from .linop import (
    CountingOperator,
    CsrMatrix,
    DenseOperator,
    DimensionError,
    LinearOperator,
    NotPositiveDefiniteError,
    ScaledOperator,
    StencilOperator,
    analytic_bounds,
    analytic_spectrum,
    fd_laplacian,
    jacobi_scale,
)
from .mmio import MatrixMarketError, load_matrix_market, save_matrix_market
from .pcg import NumericalFailure, SolveConfig, SolveReport, pcg_solve, rhs_from_ones
from .polyprec import (
    ChebyshevParams,
    ChebyshevPreconditioner,
    NewtonParams,
    NewtonPreconditioner,
    apply_chebyshev,
    apply_newton,
    cheb_params,
    chi_sequence,
    eval_poly_scalar,
    make_preconditioner,
    newton_params,
    residual_poly,
)
from .spectrum import SpectrumReport, clustering_indicator, preconditioned_spectrum, spectrum_table

__version__ = "0.1.0"

__all__ = [
    "ChebyshevParams",
    "ChebyshevPreconditioner",
    "CountingOperator",
    "CsrMatrix",
    "DenseOperator",
    "DimensionError",
    "LinearOperator",
    "MatrixMarketError",
    "NewtonParams",
    "NewtonPreconditioner",
    "NotPositiveDefiniteError",
    "NumericalFailure",
    "ScaledOperator",
    "SolveConfig",
    "SolveReport",
    "SpectralBounds",
    "SpectrumReport",
    "StencilOperator",
    "analytic_bounds",
    "analytic_spectrum",
    "apply_chebyshev",
    "apply_newton",
    "cheb_params",
    "chi_sequence",
    "clustering_indicator",
    "dacg_smallest",
    "estimate_bounds",
    "eval_poly_scalar",
    "fd_laplacian",
    "jacobi_scale",
    "load_matrix_market",
    "make_preconditioner",
    "newton_params",
    "pcg_solve",
    "power_method",
    "preconditioned_spectrum",
    "residual_poly",
    "rhs_from_ones",
    "save_matrix_market",
    "spectrum_table",
]
