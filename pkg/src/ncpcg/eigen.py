"""Cheap estimates of the extremal eigenvalues of an SPD operator.

``power_method`` gives the largest eigenvalue, ``dacg_smallest`` the
smallest one by conjugate-gradient minimisation of the Rayleigh quotient
(the single-eigenpair, deflation-free form of DACG). Both start from a
seeded uniform ``[-1, 1]`` vector and are deterministic.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .linop import NotPositiveDefiniteError

__all__ = [
    "EigenEstimate",
    "SpectralBounds",
    "ConvergenceWarning",
    "power_method",
    "dacg_smallest",
    "estimate_bounds",
]

DEFAULT_SEED = 20200101
POWER_TOL = 1e-4
POWER_MAXIT = 200
DACG_TOL = 1e-2
DACG_MAXIT = 5000
DACG_RESTART = 50


class ConvergenceWarning(RuntimeWarning):
    pass


@dataclass
class EigenEstimate:
    value: float
    iters: int
    matvecs: int
    converged: bool
    history: list = field(default_factory=list, repr=False)

    def __iter__(self):
        # unpacks as (value, iters)
        return iter((self.value, self.iters))


@dataclass(frozen=True)
class SpectralBounds:
    alpha0: float
    beta0: float
    alpha_iters: int = 0
    beta_iters: int = 0
    matvecs: int = 0
    method: str = "analytic"
    seed: int | None = None

    def __post_init__(self):
        if not (0 < self.alpha0 <= self.beta0):
            raise ValueError(f"need 0 < alpha0 <= beta0, got {self.alpha0}, {self.beta0}")

    def as_dict(self):
        return {
            "alpha0": self.alpha0,
            "beta0": self.beta0,
            "alpha_iters": self.alpha_iters,
            "beta_iters": self.beta_iters,
            "matvecs": self.matvecs,
            "method": self.method,
            "seed": self.seed,
        }


def _start(n, seed):
    return np.random.default_rng(seed).uniform(-1.0, 1.0, n)


def power_method(op, tol=POWER_TOL, maxit=POWER_MAXIT, seed=DEFAULT_SEED):
    """Largest eigenvalue by power iteration.

    Stops when consecutive Rayleigh quotients satisfy
    ``|b_new - b_old| <= tol * b_new``, or immediately if the iterate is an
    exact eigenvector.

    Returns
    -------
    EigenEstimate
        ``value`` is the last Rayleigh quotient.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    n = op.n
    x = _start(n, seed)
    w = op.apply(x)
    matvecs = 1
    if not np.any(w):
        # starting vector annihilated: one fresh attempt
        x = _start(n, seed + 1)
        w = op.apply(x)
        matvecs += 1
        if not np.any(w):
            raise NotPositiveDefiniteError("power method: operator maps the start vector to zero")

    beta_old = None
    history = []
    for it in range(1, maxit + 1):
        xx = x @ x
        beta = float(x @ w) / xx
        history.append(beta)
        if beta_old is not None and abs(beta - beta_old) <= tol * abs(beta):
            return EigenEstimate(beta, it, matvecs, True, history)
        if np.array_equal(w, beta * x):
            return EigenEstimate(beta, it, matvecs, True, history)
        beta_old = beta
        x = w / math.sqrt(w @ w)
        w = op.apply(x)
        matvecs += 1
    warnings.warn(f"power method stopped at maxit={maxit}", ConvergenceWarning, stacklevel=2)
    return EigenEstimate(beta, maxit, matvecs, False, history)


def _ritz_min(k11, k12, k22, m11, m12, m22):
    """Smallest eigenpair of the 2x2 pencil ``(K, M)``."""
    a = m11 * m22 - m12 * m12
    b = -(k11 * m22 + k22 * m11 - 2.0 * k12 * m12)
    c = k11 * k22 - k12 * k12
    disc = max(b * b - 4.0 * a * c, 0.0)
    # smaller root of a mu^2 + b mu + c, in the cancellation-free form
    mu = 2.0 * c / (-b + math.sqrt(disc))
    r1 = (k12 - mu * m12, -(k11 - mu * m11))
    r2 = (k22 - mu * m22, -(k12 - mu * m12))
    v = r1 if abs(r1[0]) + abs(r1[1]) >= abs(r2[0]) + abs(r2[1]) else r2
    return mu, v


def dacg_smallest(op, tol=DACG_TOL, maxit=DACG_MAXIT, seed=DEFAULT_SEED, restart=DACG_RESTART):
    """Smallest eigenvalue by nonlinear CG on the Rayleigh quotient.

    Each step minimises ``q(x) = x'Ax / x'x`` exactly over ``span{x, p}``
    (a 2x2 Rayleigh-Ritz problem), so ``q`` never increases. The search
    direction uses a Fletcher-Reeves coefficient, reset every ``restart``
    iterations. Convergence: ``||Ax - q x|| <= tol * q * ||x||``.

    Raises
    ------
    NotPositiveDefiniteError
        If a nonpositive ``v'Av`` shows up.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    n = op.n
    x = _start(n, seed)
    x /= math.sqrt(x @ x)
    ax = op.apply(x)
    matvecs = 1
    xax = float(x @ ax)
    if xax <= 0:
        raise NotPositiveDefiniteError(f"x'Ax = {xax:.3e} <= 0")
    q = xax
    history = [q]
    p = np.zeros(n)
    g_old2 = None
    for it in range(1, maxit + 1):
        g = ax - q * x  # gradient direction of q at unit x (up to a factor 2)
        gnorm2 = float(g @ g)
        if math.sqrt(gnorm2) <= tol * q:
            return EigenEstimate(q, it - 1, matvecs, True, history)
        beta = 0.0 if (g_old2 is None or (it - 1) % restart == 0) else gnorm2 / g_old2
        p *= beta
        p -= g
        g_old2 = gnorm2

        ap = op.apply(p)
        matvecs += 1
        pap = float(p @ ap)
        if pap <= 0:
            raise NotPositiveDefiniteError(f"p'Ap = {pap:.3e} <= 0 at iteration {it}")
        mu, (c1, c2) = _ritz_min(q, float(x @ ap), pap, 1.0, float(x @ p), float(p @ p))
        x = c1 * x + c2 * p
        ax = c1 * ax + c2 * ap
        s = math.sqrt(x @ x)
        x /= s
        ax /= s
        q_new = float(x @ ax)
        if q_new <= 0:
            raise NotPositiveDefiniteError(f"x'Ax = {q_new:.3e} <= 0 at iteration {it}")
        q = q_new
        history.append(q)
    warnings.warn(f"DACG stopped at maxit={maxit}", ConvergenceWarning, stacklevel=2)
    return EigenEstimate(q, maxit, matvecs, False, history)


def estimate_bounds(
    op,
    power_tol=POWER_TOL,
    power_maxit=POWER_MAXIT,
    dacg_tol=DACG_TOL,
    dacg_maxit=DACG_MAXIT,
    seed=DEFAULT_SEED,
):
    """``SpectralBounds`` from the power method and DACG."""
    hi = power_method(op, power_tol, power_maxit, seed)
    lo = dacg_smallest(op, dacg_tol, dacg_maxit, seed)
    alpha0 = min(lo.value, hi.value)
    return SpectralBounds(
        alpha0,
        hi.value,
        alpha_iters=lo.iters,
        beta_iters=hi.iters,
        matvecs=lo.matvecs + hi.matvecs,
        method="power+dacg",
        seed=seed,
    )
