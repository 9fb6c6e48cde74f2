"""
Two ways to apply the same polynomial
=====================================

The Newton form doubles the degree at every level, the Chebyshev form adds
one degree per step. Built from the same interval they are one polynomial.
"""

import numpy as np

from ncpcg import (
    CountingOperator,
    analytic_bounds,
    apply_chebyshev,
    apply_newton,
    cheb_params,
    chi_sequence,
    fd_laplacian,
    jacobi_scale,
    newton_params,
)

# %%
# The model problem: 5-point Laplacian on a 78 x 78 grid, scaled to unit
# diagonal. Its extreme eigenvalues are known in closed form.
op, _ = jacobi_scale(fd_laplacian("2d", 78))
alpha, beta = analytic_bounds("2d", 78)
print(f"n = {op.n}, alpha = {alpha:.6e}, beta = {beta:.6f}")

# %%
# Apply both forms of degree 31 to a random vector and count products.
r = np.random.default_rng(0).standard_normal(op.n)
counted = CountingOperator(op)
for nlev in range(6):
    m = 2**nlev - 1
    counted.reset()
    xn = apply_newton(newton_params(alpha, beta, nlev, 1.01), counted, r)
    n_newton = counted.count
    counted.reset()
    xc = apply_chebyshev(cheb_params(alpha, beta, m, 1.01), counted, r)
    diff = np.linalg.norm(xn - xc) / np.linalg.norm(xc)
    print(f"m = {m:2d}: newton {n_newton:2d} products, chebyshev {counted.count:2d}, rel diff {diff:.1e}")

# %%
# The Newton scaling factors are ratios of Chebyshev values at sigma.
zeta = newton_params(alpha, beta, 6).zeta
print("zeta[1:] =", np.round(zeta[1:], 8))
print("chi      =", np.round(chi_sequence(alpha, beta, 6), 8))
