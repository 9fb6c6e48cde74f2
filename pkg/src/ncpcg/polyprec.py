r"""Newton-Chebyshev polynomial preconditioners.

For an SPD operator ``A`` with spectrum in ``[alpha, beta]`` the degree-m
Chebyshev preconditioner is ``p_m(A)`` where ``1 - x p_m(x)`` is the
shifted and scaled Chebyshev polynomial ``T_{m+1}`` normalised to 1 at the
origin. Two application algorithms are provided:

* :func:`apply_newton` -- the recursive Hotelling/Newton form,
  ``m = 2**nlev - 1``, driven by the scaling sequence ``zeta``;
* :func:`apply_chebyshev` -- the three-term recurrence, any ``m``.

Both produce the same polynomial in exact arithmetic when built from the
same ``(alpha, beta, scale)``.

``scale`` multiplies the interval midpoint ``theta = (alpha + beta) / 2``
and keeps the half-width ``delta`` fixed, i.e. the polynomial is built for
``[s*theta - delta, s*theta + delta]``. Values slightly above 1 separate
the smallest eigenvalues of ``p(A) A`` instead of clustering them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linop import DimensionError

__all__ = [
    "NewtonParams",
    "ChebyshevParams",
    "newton_params",
    "cheb_params",
    "apply_newton",
    "apply_chebyshev",
    "eval_poly_scalar",
    "residual_poly",
    "chi_sequence",
    "chebyshev_t",
    "positive_on_interval",
    "NewtonPreconditioner",
    "ChebyshevPreconditioner",
    "make_preconditioner",
]

MAX_CHI_LEVELS = 30


@dataclass(frozen=True)
class NewtonParams:
    """Scaling sequence of the Newton recursion.

    ``zeta[0] = 1 / (s * theta)`` and, for ``j >= 1``,
    ``zeta[j] = 2 / (1 + 2 z - z**2)`` with ``z = zeta[j-1]`` except at
    ``j = 1`` where ``z`` is ``a * zeta[0]`` and ``a = s*theta - delta`` is
    the lower end of the (possibly shifted) interval.
    """

    nlev: int
    zeta: tuple
    alpha0: float
    beta0: float
    scale: float = 1.0

    @property
    def degree(self):
        return 2**self.nlev - 1

    def as_dict(self):
        return {
            "form": "newton",
            "nlev": self.nlev,
            "degree": self.degree,
            "alpha0": self.alpha0,
            "beta0": self.beta0,
            "scale": self.scale,
            "zeta": list(self.zeta),
        }


@dataclass(frozen=True)
class ChebyshevParams:
    m: int
    theta: float
    delta: float
    sigma: float
    rho: tuple = field(repr=False)  # rho[k] for k = 0..m
    alpha: float = 0.0
    beta: float = 0.0
    scale: float = 1.0

    @property
    def degree(self):
        return self.m

    def as_dict(self):
        rho = np.asarray(self.rho)
        return {
            "form": "chebyshev",
            "degree": self.m,
            "alpha": self.alpha,
            "beta": self.beta,
            "scale": self.scale,
            "theta": self.theta,
            "delta": self.delta,
            "sigma": self.sigma,
            "rho_first": list(rho[:4]),
            "rho_last": float(rho[-1]),
        }


def positive_on_interval(params, points=1000):
    """True when ``p(lam) > 0`` on a uniform grid over the bounds in ``params``."""
    lo = getattr(params, "alpha0", None) or params.alpha
    hi = getattr(params, "beta0", None) or params.beta
    return bool(np.all(eval_poly_scalar(params, np.linspace(lo, hi, points)) > 0))


def _check_bounds(alpha, beta, scale, strict=False):
    if not (alpha > 0 and beta > 0):
        raise ValueError(f"spectral bounds must be positive, got alpha={alpha}, beta={beta}")
    if beta < alpha or (strict and beta == alpha):
        rel = "<" if strict else "<="
        raise ValueError(f"need alpha {rel} beta, got alpha={alpha}, beta={beta}")
    if not scale >= 1.0:
        raise ValueError(f"scale must be >= 1, got {scale}")


def newton_params(alpha0, beta0, nlev, scale=1.0):
    """Build the ``zeta`` sequence for ``nlev`` Newton levels.

    Examples
    --------
    >>> newton_params(1.0, 3.0, 1).zeta
    (0.5, 1.1428571428571428)
    """
    alpha0, beta0, scale = float(alpha0), float(beta0), float(scale)
    _check_bounds(alpha0, beta0, scale)
    nlev = int(nlev)
    if nlev < 0:
        raise ValueError("nlev must be nonnegative")
    theta = scale * (alpha0 + beta0) / 2
    delta = (beta0 - alpha0) / 2
    zeta = [1.0 / theta]
    if nlev >= 1:
        az = (theta - delta) / theta
        zeta.append(2.0 / (1.0 + 2.0 * az - az * az))
    for _ in range(2, nlev + 1):
        z = zeta[-1]
        zeta.append(2.0 / (1.0 + 2.0 * z - z * z))
    return NewtonParams(nlev, tuple(zeta), alpha0, beta0, scale)


def cheb_params(alpha, beta, m, scale=1.0):
    """Interval parameters and the ``rho`` sequence of the Chebyshev form.

    Examples
    --------
    >>> p = cheb_params(1.0, 3.0, 2)
    >>> p.theta, p.delta, p.sigma, p.rho[1:]
    (2.0, 1.0, 2.0, (0.2857142857142857, 0.2692307692307692))
    """
    alpha, beta, scale = float(alpha), float(beta), float(scale)
    _check_bounds(alpha, beta, scale, strict=True)
    m = int(m)
    if m < 0:
        raise ValueError("degree must be nonnegative")
    theta = scale * (alpha + beta) / 2
    delta = (beta - alpha) / 2
    sigma = theta / delta
    rho = [1.0 / sigma]
    for _ in range(m):
        rho.append(1.0 / (2.0 * sigma - rho[-1]))
    return ChebyshevParams(m, theta, delta, sigma, tuple(rho), alpha, beta, scale)


def _vector(r, n):
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (n,):
        raise DimensionError(f"expected a vector of length {n}, got shape {r.shape}")
    return r


def _newton_workspace(nlev, n):
    return [(np.empty(n), np.empty(n)) for _ in range(nlev)]


def _newton_rec(zeta, level, op, r, out, work):
    # P_0 u = zeta_0 u ;  P_j u = zeta_j (2 P_{j-1} u - P_{j-1} A P_{j-1} u)
    if level == 0:
        np.multiply(r, zeta[0], out=out)
        return out
    u, v = work[level - 1]
    _newton_rec(zeta, level - 1, op, r, u, work)
    op.apply(u, out=v)
    _newton_rec(zeta, level - 1, op, v, out, work)
    out *= -zeta[level]
    out += (2.0 * zeta[level]) * u
    return out


def apply_newton(params, op, r, out=None, work=None):
    """``P_nlev r`` by the recursive Newton scheme (``2**nlev - 1`` products)."""
    r = _vector(r, op.n)
    if out is None:
        out = np.empty(op.n)
    if work is None:
        work = _newton_workspace(params.nlev, op.n)
    return _newton_rec(params.zeta, params.nlev, op, r, out, work)


def apply_chebyshev(params, op, r, out=None, work=None):
    """``p_m(A) r`` by the three-term recurrence (``m`` products)."""
    r = _vector(r, op.n)
    n = op.n
    th, de, sg, rho = params.theta, params.delta, params.sigma, params.rho
    if out is None:
        out = np.empty(n)
    if params.m == 0:
        np.divide(r, th, out=out)
        return out
    if work is None:
        work = (np.empty(n), np.empty(n), np.empty(n))
    x_old, x, z = work

    # x_1 = (2 rho_1 / delta) (2 r - A r / theta)
    np.divide(r, th, out=x_old)
    op.apply(r, out=z)
    np.multiply(r, 2.0, out=x)
    x -= z / th
    x *= 2.0 * rho[1] / de
    for k in range(2, params.m + 1):
        # x_k = rho_k (2 sigma x_{k-1} - rho_{k-1} x_{k-2} + (2/delta)(r - A x_{k-1}))
        op.apply(x, out=z)
        np.subtract(r, z, out=z)
        z *= 2.0 / de
        x_old *= -rho[k - 1]
        x_old += (2.0 * sg) * x
        x_old += z
        x_old *= rho[k]
        x_old, x = x, x_old
    out[:] = x
    return out


def eval_poly_scalar(params, lam):
    """Evaluate the preconditioning polynomial at ``lam`` (scalar or array)."""
    x = np.asarray(lam, dtype=np.float64)
    if isinstance(params, NewtonParams):
        z = params.zeta
        p = np.full_like(x, z[0])
        for j in range(1, params.nlev + 1):
            p = z[j] * (2.0 * p - x * p * p)
    elif isinstance(params, ChebyshevParams):
        th, de, sg, rho = params.theta, params.delta, params.sigma, params.rho
        p_prev = np.zeros_like(x)
        p = np.full_like(x, 1.0 / th)
        for k in range(1, params.m + 1):
            p_prev, p = p, rho[k] * (2.0 * sg * (1.0 - x / th) * p - rho[k - 1] * p_prev + 2.0 / de)
    else:
        raise TypeError(f"unsupported parameter object {type(params).__name__}")
    return p if p.ndim else float(p)


def residual_poly(params, lam):
    """Evaluate ``1 - lam * p(lam)`` without the cancellation of the subtraction.

    Where the residual polynomial is tiny (high degree, well separated
    interval) forming ``p`` first loses all relative accuracy. The Chebyshev
    form uses ``q_{k+1} = rho_k (2 sigma y q_k - rho_{k-1} q_{k-1})`` with
    ``y = 1 - lam / theta``; the Newton form uses
    ``e_j = (1 + eps_j) e_{j-1}**2 - eps_j`` where ``eps_j = zeta_j - 1`` is
    generated directly (``eps_1 = delta**2 / (2 theta**2 - delta**2)``,
    ``eps_{j+1} = eps_j**2 / (2 - eps_j**2)``).
    """
    x = np.asarray(lam, dtype=np.float64)
    if isinstance(params, NewtonParams):
        theta = params.scale * (params.alpha0 + params.beta0) / 2
        delta = (params.beta0 - params.alpha0) / 2
        e = (theta - x) / theta
        eps = delta * delta / (2.0 * theta * theta - delta * delta)
        for _ in range(params.nlev):
            e = (1.0 + eps) * e * e - eps
            eps = eps * eps / (2.0 - eps * eps)
    elif isinstance(params, ChebyshevParams):
        sg, rho = params.sigma, params.rho
        y = 1.0 - x / params.theta
        q_prev, e = np.ones_like(x), y
        for k in range(1, params.m + 1):
            q_prev, e = e, rho[k] * (2.0 * sg * y * e - rho[k - 1] * q_prev)
    else:
        raise TypeError(f"unsupported parameter object {type(params).__name__}")
    return e if e.ndim else float(e)


def chebyshev_t(k, x):
    """First-kind Chebyshev polynomial ``T_k(x)`` for any real ``x``."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    inside = np.abs(x) <= 1.0
    out[inside] = np.cos(k * np.arccos(x[inside]))
    xo = x[~inside]
    sign = np.where(xo < 0, (-1.0) ** k, 1.0)
    out[~inside] = sign * np.cosh(k * np.arccosh(np.abs(xo)))
    return out if out.ndim else float(out)


def chi_sequence(alpha, beta, nlev, scale=1.0):
    """``chi_j = 2 sigma_k**2 / sigma_{2k}``, ``k = 2**(j-1)``, for ``j = 1..nlev``.

    ``sigma_k = T_k(sigma)`` is generated by the doubling rule
    ``sigma_{2k} = 2 sigma_k**2 - 1``, switching to logarithms once it is
    too large to square. Equal to ``newton_params(...).zeta[1:]``.
    """
    alpha, beta, scale = float(alpha), float(beta), float(scale)
    _check_bounds(alpha, beta, scale, strict=True)
    nlev = int(nlev)
    if not 0 <= nlev <= MAX_CHI_LEVELS:
        raise ValueError(f"nlev must lie in [0, {MAX_CHI_LEVELS}]")
    sigma = scale * (alpha + beta) / (beta - alpha)
    chi = []
    sk, log_sk = sigma, math.log(sigma)
    for _ in range(nlev):
        if sk is not None and sk <= 1e150:
            s2k = 2.0 * sk * sk - 1.0
            chi.append(2.0 * sk * sk / s2k)
            sk, log_sk = s2k, math.log(s2k)
        else:
            # sigma_{2k} ~ 2 sigma_k**2 ; chi = 1 + 1/sigma_{2k}
            log_s2k = math.log(2.0) + 2.0 * log_sk
            chi.append(1.0 + math.exp(-log_s2k))
            sk, log_sk = None, log_s2k
    return tuple(chi)


class NewtonPreconditioner:
    """Newton-form preconditioner bound to an operator, with preallocated scratch."""

    def __init__(self, params, op):
        self.params = params
        self.op = op
        self._work = _newton_workspace(params.nlev, op.n)

    @property
    def degree(self):
        return self.params.degree

    def apply(self, r, out=None):
        return apply_newton(self.params, self.op, r, out=out, work=self._work)

    __call__ = apply


class ChebyshevPreconditioner:
    """Chebyshev-form preconditioner reusing three work vectors across calls."""

    def __init__(self, params, op):
        self.params = params
        self.op = op
        self._work = (np.empty(op.n), np.empty(op.n), np.empty(op.n))

    @property
    def degree(self):
        return self.params.degree

    def apply(self, r, out=None):
        return apply_chebyshev(self.params, self.op, r, out=out, work=self._work)

    __call__ = apply


def make_preconditioner(params, op):
    """Preconditioner object for ``params`` applied through ``op``."""
    if isinstance(params, NewtonParams):
        return NewtonPreconditioner(params, op)
    if isinstance(params, ChebyshevParams):
        return ChebyshevPreconditioner(params, op)
    raise TypeError(f"unsupported parameter object {type(params).__name__}")
