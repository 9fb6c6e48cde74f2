"""Spectrum of the polynomially preconditioned operator.

``p(A)`` shares eigenvectors with ``A``, so the eigenvalues of ``p(A) A``
are ``mu_s = lambda_s * p(lambda_s)``. For the model Laplacians the
``lambda_s`` are known in closed form and no matrix is ever formed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import linop
from .pcg import SolveConfig, pcg_solve, rhs_from_ones
from .polyprec import cheb_params, eval_poly_scalar

__all__ = [
    "SpectrumReport",
    "TableRow",
    "CLUSTER_RATIO",
    "clustering_indicator",
    "preconditioned_spectrum",
    "spectrum_table",
    "write_spectrum_csv",
]

#: eigenvalues below this multiple of the minimum count as clustered with it
CLUSTER_RATIO = 1.1


@dataclass
class SpectrumReport:
    m: int
    scaled: bool
    mu: np.ndarray = field(repr=False)
    lam: np.ndarray = field(repr=False)
    mu_min: float
    mu_max: float
    kappa: float
    l: int
    spd: bool


def clustering_indicator(mu):
    """Number of eigenvalues with ``mu / min(mu) < 1.1``."""
    mu = np.asarray(mu, dtype=np.float64)
    if mu.size == 0:
        raise ValueError("empty spectrum")
    lo = mu.min()
    if not lo > 0:
        raise ValueError("clustering indicator needs positive eigenvalues")
    return int(np.count_nonzero(mu / lo < CLUSTER_RATIO))


def preconditioned_spectrum(eigs, params):
    """Eigenvalues of ``p(A) A`` from the eigenvalues of ``A``.

    ``spd`` in the result is False when some ``mu`` is not positive, i.e.
    the preconditioner is not SPD on this spectrum; ``kappa`` and ``l`` are
    then NaN and 0.
    """
    lam = np.sort(np.asarray(eigs, dtype=np.float64))
    if lam.size == 0 or not lam[0] > 0:
        raise ValueError("eigenvalues of A must be positive")
    mu = lam * np.asarray(eval_poly_scalar(params, lam))
    spd = bool(np.all(mu > 0))
    mu_sorted = np.sort(mu)
    mu_min, mu_max = float(mu_sorted[0]), float(mu_sorted[-1])
    if spd:
        kappa, l = mu_max / mu_min, clustering_indicator(mu)
    else:
        kappa, l = float("nan"), 0
    return SpectrumReport(
        m=params.degree,
        scaled=getattr(params, "scale", 1.0) != 1.0,
        mu=mu,
        lam=lam,
        mu_min=mu_min,
        mu_max=mu_max,
        kappa=kappa,
        l=l,
        spd=spd,
    )


@dataclass
class TableRow:
    m: int
    iters: int
    mu_max: float
    mu_min: float
    l: int
    kappa: float
    scale: float = 1.0
    tol: float = 1e-8
    converged: bool = True

    def as_dict(self):
        return dict(self.__dict__)


def spectrum_table(nx, degrees=(0, 1, 3, 7, 15, 31), scale=1.0, tol=1e-8, rhs=None, kind="2d", maxit=20000):
    """PCG iterations and spectral data per degree for the scaled FD Laplacian.

    The polynomial is built from the exact extremal eigenvalues. ``rhs``
    defaults to ``A 1``; pass an array to use another right-hand side.
    """
    kind = linop._dim(kind)
    op, _ = linop.jacobi_scale(linop.fd_laplacian(kind, nx))
    lam = linop.analytic_spectrum(kind, nx, scaled=True)
    alpha, beta = float(lam[0]), float(lam[-1])
    b = rhs_from_ones(op) if rhs is None else np.asarray(rhs, dtype=np.float64)
    rows = []
    for m in degrees:
        params = cheb_params(alpha, beta, m, scale)
        rep = preconditioned_spectrum(lam, params)
        _, sol = pcg_solve(op, b, SolveConfig(tol=tol, maxit=maxit, preconditioner=params))
        rows.append(TableRow(m, sol.iters, rep.mu_max, rep.mu_min, rep.l, rep.kappa, scale, tol, sol.converged))
    return rows


def write_spectrum_csv(report, path_or_file):
    """Write ``s,lambda,mu`` rows (1-based ``s``, ascending ``lambda``)."""

    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "lambda", "mu"])
        for s, (lam, mu) in enumerate(zip(report.lam, report.mu), start=1):
            w.writerow([s, f"{lam:.17g}", f"{mu:.17g}"])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh)
