"""
Estimating the spectral interval
================================

Outside the model problems the bounds come from two cheap iterations: the
power method for the largest eigenvalue and a Rayleigh-quotient CG for the
smallest.
"""

from ncpcg import analytic_bounds, fd_laplacian, jacobi_scale
from ncpcg.eigen import dacg_smallest, power_method

# %%
for kind, nx in (("2d", 78), ("2d", 200), ("3d", 32)):
    op, _ = jacobi_scale(fd_laplacian(kind, nx))
    lo, hi = analytic_bounds(kind, nx)
    big = power_method(op)
    small = dacg_smallest(op)
    print(f"{kind} nx={nx}: beta {big.value:.5f} vs {hi:.5f} ({big.iters} it), "
          f"alpha {small.value:.4e} vs {lo:.4e} ({small.iters} it)")

# %%
# The Rayleigh quotient decreases at every step.
h = dacg_smallest(jacobi_scale(fd_laplacian("2d", 78))[0]).history
print(h[:3], "...", h[-3:])
