"""
Degree sweep: fewer iterations, fewer inner products
====================================================

Each doubling of the degree roughly halves the iteration count. The number
of matrix-vector products stays flat while inner products, the global
reductions of a parallel run, drop with the iterations.
"""

from ncpcg.bench import ExperimentConfig, degree_sweep

# %%
for problem in ("lap2d:200", "lap3d:32"):
    cfg = ExperimentConfig(problem=problem, prec="newton:nlev=0,scale=1.01", eigs="analytic")
    rows, bounds, _ = degree_sweep(cfg, nlevs=range(7))
    print(problem, f"alpha0={bounds.alpha0:.3e} beta0={bounds.beta0:.4f}")
    print(f"{'m':>3s} {'iter':>5s} {'ddot':>6s} {'matvec':>7s} {'true res':>9s} {'time':>7s}")
    for r in rows:
        print(f"{r['m']:3d} {r['iter']:5d} {r['ddot']:6d} {r['matvec']:7d} {r['true_rel_res']:9.2e} {r['time']:7.3f}")
