import warnings

import numpy as np
import pytest

from ncpcg import CsrMatrix, DenseOperator, fd_laplacian, jacobi_scale
from ncpcg.eigen import (
    ConvergenceWarning,
    SpectralBounds,
    dacg_smallest,
    estimate_bounds,
    power_method,
)
from ncpcg.linop import NotPositiveDefiniteError

from conftest import random_spd


def test_power_method_diagonal():
    est = power_method(DenseOperator(np.diag([1.0, 2.0, 4.0])), tol=1e-10, maxit=500)
    assert est.converged
    assert est.value == pytest.approx(4.0, rel=1e-8)
    value, iters = est
    assert iters == est.iters


def test_power_method_identity_exits_at_once():
    est = power_method(CsrMatrix.identity(10))
    assert est.value == pytest.approx(1.0) and est.iters == 1 and est.converged


def test_dacg_diagonal_and_identity():
    est = dacg_smallest(DenseOperator(np.diag([1.0, 2.0, 4.0])), tol=1e-8)
    assert est.value == pytest.approx(1.0, rel=1e-10)
    assert dacg_smallest(CsrMatrix.identity(7)).value == pytest.approx(1.0)


def test_seed_determinism():
    op = DenseOperator(random_spd(np.random.default_rng(1), 40))
    a, b = dacg_smallest(op, seed=5), dacg_smallest(op, seed=5)
    assert a.value == b.value and a.history == b.history
    assert power_method(op, seed=9).value == power_method(op, seed=9).value


def test_random_spd_against_eigvalsh(rng):
    a = random_spd(rng, 60, cond=50.0)
    lam = np.linalg.eigvalsh(a)
    op = DenseOperator(a)
    assert power_method(op, tol=1e-10, maxit=5000).value == pytest.approx(lam[-1], rel=1e-4)
    assert dacg_smallest(op, tol=1e-6).value == pytest.approx(lam[0], rel=1e-8)


def test_dacg_rayleigh_quotient_monotone():
    op, _ = jacobi_scale(fd_laplacian(2, 30))
    h = np.array(dacg_smallest(op).history)
    assert np.all(h[1:] <= h[:-1] * (1 + 1e-12))


def test_dacg_detects_indefinite():
    with pytest.raises(NotPositiveDefiniteError):
        dacg_smallest(DenseOperator(np.diag([-1.0, 1.0, 2.0])), tol=1e-8)


def test_maxit_warns():
    op, _ = jacobi_scale(fd_laplacian(2, 30))
    with pytest.warns(ConvergenceWarning):
        est = power_method(op, tol=1e-14, maxit=3)
    assert not est.converged and est.iters == 3
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        assert not dacg_smallest(op, tol=1e-14, maxit=2).converged


def test_singular_operator():
    est = power_method(DenseOperator(np.diag([0.0, 0.0, 3.0])), tol=1e-10)
    assert est.value == pytest.approx(3.0)


def test_estimate_bounds_and_validation():
    op, _ = jacobi_scale(fd_laplacian(2, 20))
    b = estimate_bounds(op)
    assert b.method == "power+dacg" and b.seed is not None
    assert 0 < b.alpha0 <= b.beta0
    assert b.matvecs > b.alpha_iters + b.beta_iters
    d = b.as_dict()
    assert set(d) >= {"alpha0", "beta0", "matvecs", "method", "seed"}
    with pytest.raises(ValueError):
        SpectralBounds(2.0, 1.0)
    with pytest.raises(ValueError):
        SpectralBounds(0.0, 1.0)
