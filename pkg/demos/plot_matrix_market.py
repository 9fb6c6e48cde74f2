"""
Solving a system read from a MatrixMarket file
==============================================

Write a matrix, read it back, estimate its bounds and solve.
"""

import os
import tempfile

from ncpcg import fd_laplacian, load_matrix_market, save_matrix_market
from ncpcg.bench import ExperimentConfig, run_solve

# %%
path = os.path.join(tempfile.mkdtemp(), "lap3d_20.mtx")
save_matrix_market(fd_laplacian("3d", 20, form="assembled"), path, comment="7-point Laplacian, nx = 20")
m = load_matrix_market(path)
print(f"read n = {m.n}, nnz = {m.nnz}")

# %%
for prec in ("none", "chebyshev:m=7,scale=1.001", "newton:nlev=4,scale=1.001"):
    out = run_solve(ExperimentConfig(problem=path, prec=prec, eigs="power+dacg"))
    rep = out["report"]
    print(f"{prec:28s} iters {rep['iters']:4d} ddot {rep['ddot']:5d} matvec {rep['matvec']:5d} "
          f"setup {out['setup_time']:.2f}s solve {rep['wall_time']:.3f}s")
