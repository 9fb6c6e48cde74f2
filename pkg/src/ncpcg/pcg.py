"""Instrumented preconditioned conjugate gradient.

Hestenes-Stiefel PCG with the convergence test on the recursive residual.
Counting rule (what ``SolveReport`` reports):

* ``ddot`` -- every inner product and norm taken by the iteration:
  ``||b||`` and ``r0'z0`` once, then per iteration ``p'Ap``, ``||r||`` and
  (unless the iteration converged) ``r'z``. Hence ``ddot = 3 * iters + 1``.
* ``matvec`` -- every application of ``A``, including those made inside
  the polynomial preconditioner: ``iters * (m + 1)``, plus one when a
  nonzero ``x0`` forces an initial residual.

The true residual ``||b - A x|| / ||b||`` is evaluated once at exit as a
diagnostic and is *not* included in the counters.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .linop import CountingOperator
from .polyprec import ChebyshevParams, NewtonParams, make_preconditioner

__all__ = ["SolveConfig", "SolveReport", "NumericalFailure", "pcg_solve", "rhs_from_ones"]


class NumericalFailure(ArithmeticError):
    """A non-finite or nonpositive quantity appeared during the iteration."""


@dataclass
class SolveConfig:
    """Solver settings.

    ``preconditioner`` is ``None`` (plain CG), a
    :class:`~ncpcg.polyprec.NewtonParams` /
    :class:`~ncpcg.polyprec.ChebyshevParams` (the polynomial is then built
    around the solver's operator so its products are counted), or any
    object with ``apply(r, out=None)``. ``callback(x, k)`` is called after
    every iteration.
    """

    tol: float = 1e-8
    maxit: int = 20000
    preconditioner: object = None
    x0: np.ndarray | None = None
    callback: object = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.maxit < 1:
            raise ValueError("maxit must be at least 1")


@dataclass
class SolveReport:
    iters: int
    ddot: int
    matvec: int
    prec_applies: int
    rel_res: float
    true_rel_res: float
    wall_time: float
    converged: bool
    degree: int = 0
    residuals: list = field(default_factory=list, repr=False)

    def as_dict(self):
        d = asdict(self)
        d.pop("residuals")
        return d


def rhs_from_ones(op):
    """``b = A 1``, so that the exact solution is the vector of ones."""
    return op.apply(np.ones(op.n))


def pcg_solve(op, b, config=None, **kwargs):
    """Solve ``A x = b`` with preconditioned CG.

    Parameters
    ----------
    op : LinearOperator
    b : array_like
    config : SolveConfig, optional
        Keyword arguments are forwarded to :class:`SolveConfig` when no
        config is given.

    Returns
    -------
    x : ndarray
    report : SolveReport

    Raises
    ------
    NumericalFailure
        When ``p'Ap`` or ``r'z`` stops being positive and finite, which
        signals an indefinite operator or preconditioner.
    """
    cfg = config if config is not None else SolveConfig(**kwargs)
    b = np.asarray(b, dtype=np.float64)
    n = op.n
    if b.shape != (n,):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({n},)")

    counted = CountingOperator(op)
    prec = cfg.preconditioner
    if isinstance(prec, (NewtonParams, ChebyshevParams)):
        prec = make_preconditioner(prec, counted)
    degree = int(getattr(prec, "degree", 0)) if prec is not None else 0
    return _iterate(counted, b, cfg, prec, degree)


def _iterate(op, b, cfg, prec, degree):
    t0 = time.perf_counter()
    n = op.n
    ddot = 0
    prec_applies = 0

    bnorm = math.sqrt(b @ b)
    ddot += 1
    if bnorm == 0.0:
        return np.zeros(n), SolveReport(0, ddot, 0, 0, 0.0, 0.0, time.perf_counter() - t0, True, degree)

    if cfg.x0 is None or not np.any(cfg.x0):
        x = np.zeros(n)
        r = b.copy()
    else:
        x = np.array(cfg.x0, dtype=np.float64)
        r = b - op.apply(x)

    def precondition(res, out):
        nonlocal prec_applies
        if prec is None:
            out[:] = res
            return out
        prec_applies += 1
        return prec.apply(res, out=out)

    z = np.empty(n)
    q = np.empty(n)
    precondition(r, z)
    rz = float(r @ z)
    ddot += 1
    p = z.copy()
    residuals = []
    iters = 0
    rel = math.sqrt(r @ r) / bnorm
    converged = False
    if rz == 0.0:
        converged = True  # r = 0 for an SPD preconditioner
    while not converged and iters < cfg.maxit:
        iters += 1
        op.apply(p, out=q)
        pq = float(p @ q)
        ddot += 1
        if not (pq > 0 and math.isfinite(pq)):
            raise NumericalFailure(f"p'Ap = {pq!r} at iteration {iters}")
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        rel = math.sqrt(r @ r) / bnorm
        ddot += 1
        residuals.append(rel)
        if cfg.callback is not None:
            cfg.callback(x, iters)
        if not math.isfinite(rel):
            raise NumericalFailure(f"residual is not finite at iteration {iters}")
        if rel <= cfg.tol:
            converged = True
            break
        precondition(r, z)
        rz_new = float(r @ z)
        ddot += 1
        if not (rz_new > 0 and math.isfinite(rz_new)):
            raise NumericalFailure(f"r'z = {rz_new!r} at iteration {iters}")
        p *= rz_new / rz
        p += z
        rz = rz_new

    matvec = op.count
    wall = time.perf_counter() - t0
    true_rel = float(np.linalg.norm(b - op.inner.apply(x)) / bnorm)
    report = SolveReport(
        iters, ddot, matvec, prec_applies, rel, true_rel, wall, converged, degree, residuals
    )
    return x, report
