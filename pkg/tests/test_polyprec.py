import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncpcg import CountingOperator, CsrMatrix, DenseOperator
from ncpcg.linop import DimensionError
from ncpcg.polyprec import (
    ChebyshevPreconditioner,
    NewtonPreconditioner,
    apply_chebyshev,
    apply_newton,
    cheb_params,
    chebyshev_t,
    chi_sequence,
    eval_poly_scalar,
    make_preconditioner,
    newton_params,
    positive_on_interval,
    residual_poly,
)

from conftest import random_spd

DIAG13 = DenseOperator(np.diag([1.0, 3.0]))


def test_newton_params_hand_values():
    p = newton_params(1.0, 3.0, 1)
    assert p.zeta == pytest.approx((0.5, 8 / 7), rel=1e-15)
    assert newton_params(1.0, 1.0, 4).zeta == (1.0,) * 5
    q = newton_params(7.9064e-4, 1.99921, 1)
    assert q.zeta[0] == pytest.approx(1.0, abs=2e-5)
    assert q.zeta[1] == pytest.approx(1.99684, abs=1e-5)


def test_newton_params_scale_divides_zeta0():
    assert newton_params(1.0, 3.0, 0, scale=1.25).zeta[0] == pytest.approx(0.5 / 1.25)


def test_zeta_stays_in_open_interval():
    p = newton_params(1e-3, 2.0, 6)
    assert all(1 < z < 2 for z in p.zeta[1:])
    # deeper levels converge to the fixed point 1 and reach it in floating point
    assert all(1 <= z < 2 for z in newton_params(1e-3, 2.0, 20).zeta[1:])


@pytest.mark.parametrize("args", [(0.0, 1.0, 2), (-1.0, 1.0, 2), (2.0, 1.0, 2), (1.0, 2.0, -1)])
def test_newton_params_rejects_bad_input(args):
    with pytest.raises(ValueError):
        newton_params(*args)
    with pytest.raises(ValueError):
        newton_params(1.0, 2.0, 1, scale=0.9)


def test_cheb_params_hand_values():
    p = cheb_params(1.0, 3.0, 2)
    assert (p.theta, p.delta, p.sigma) == (2.0, 1.0, 2.0)
    assert p.rho == pytest.approx((0.5, 2 / 7, 7 / 26), rel=1e-15)
    assert cheb_params(1.0, 3.0, 0).theta == 2.0
    s = cheb_params(7.9064e-4, 1.99921, 31, scale=1.01)
    assert s.theta == pytest.approx(1.01, rel=1e-5)
    with pytest.raises(ValueError):
        cheb_params(1.0, 1.0, 3)


def test_apply_small_examples():
    p0 = newton_params(1.0, 3.0, 0)
    assert np.allclose(apply_newton(p0, DIAG13, np.array([2.0, 4.0])), [1.0, 2.0])
    p1 = newton_params(1.0, 3.0, 1)
    assert np.allclose(apply_newton(p1, DIAG13, np.ones(2)), [6 / 7, 2 / 7], rtol=1e-15)
    c1 = cheb_params(1.0, 3.0, 1)
    assert np.allclose(apply_chebyshev(c1, DIAG13, np.ones(2)), [6 / 7, 2 / 7], rtol=1e-15)
    c0 = cheb_params(1.0, 3.0, 0)
    assert np.allclose(apply_chebyshev(c0, DIAG13, np.array([2.0, 4.0])), [1.0, 2.0])


@pytest.mark.parametrize("nlev", [0, 1, 3, 6])
def test_identity_is_fixed(nlev):
    p = newton_params(1.0, 1.0, nlev)
    r = np.array([1.0, -2.0, 3.5])
    assert np.allclose(apply_newton(p, CsrMatrix.identity(3), r), r, rtol=1e-15)


@pytest.mark.parametrize("nlev", [0, 1, 2, 5])
def test_operator_application_counts(nlev):
    rng = np.random.default_rng(nlev)
    op = CountingOperator(DenseOperator(random_spd(rng, 20)))
    apply_newton(newton_params(1.0, 100.0, nlev), op, np.ones(20))
    assert op.count == 2**nlev - 1
    op.reset()
    for m in (0, 1, 4, 9):
        op.reset()
        apply_chebyshev(cheb_params(1.0, 100.0, m), op, np.ones(20))
        assert op.count == m


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        apply_newton(newton_params(1.0, 3.0, 1), DIAG13, np.ones(3))
    with pytest.raises(DimensionError):
        apply_chebyshev(cheb_params(1.0, 3.0, 1), DIAG13, np.ones(3))


def test_matches_dense_polynomial_on_eigenbasis(rng):
    # independent oracle: p(A) r = V p(Lambda) V' r with numpy's eigendecomposition
    a = random_spd(rng, 30, cond=500.0)
    lam, v = np.linalg.eigh(a)
    r = rng.standard_normal(30)
    op = DenseOperator(a)
    for nlev in (1, 3, 5):
        p = newton_params(lam[0], lam[-1], nlev, 1.01)
        ref = v @ (eval_poly_scalar(p, lam) * (v.T @ r))
        assert np.allclose(apply_newton(p, op, r), ref, rtol=1e-10, atol=1e-12 * np.abs(ref).max())


def test_residual_polynomial_is_chebyshev():
    # 1 - x p_m(x) = T_{m+1}((s theta - x)/delta) / T_{m+1}(sigma)
    a, b = 0.01, 2.0
    x = np.linspace(a, b, 257)
    for s in (1.0, 1.05):
        for m in (1, 4, 7, 15):
            c = cheb_params(a, b, m, s)
            ref = chebyshev_t(m + 1, (c.theta - x) / c.delta) / chebyshev_t(m + 1, c.sigma)
            assert np.allclose(1 - x * eval_poly_scalar(c, x), ref, atol=1e-13)


def test_chebyshev_t_values():
    x = np.linspace(-3, 3, 41)
    for k in range(6):
        assert np.allclose(chebyshev_t(k, x), np.polynomial.chebyshev.chebval(x, [0] * k + [1]), rtol=1e-12)


def test_chi_sequence_equals_zeta_and_large_levels():
    for a, b, s in [(1e-3, 2.0, 1.0), (0.3, 1.7, 1.01), (1.0, 100.0, 1.001)]:
        z = newton_params(a, b, 8, s).zeta[1:]
        assert np.allclose(chi_sequence(a, b, 8, s), z, rtol=1e-12)
    deep = chi_sequence(1e-3, 2.0, 30)
    assert all(1.0 <= c < 2.0 for c in deep)
    assert deep[-1] == 1.0
    with pytest.raises(ValueError):
        chi_sequence(1.0, 2.0, 31)


def test_positivity_and_preconditioner_objects():
    p = newton_params(1e-3, 2.0, 5, 1.01)
    assert positive_on_interval(p)
    assert positive_on_interval(cheb_params(1e-3, 2.0, 31))
    op = DenseOperator(np.diag([1e-3, 0.5, 2.0]))
    n_pre = make_preconditioner(p, op)
    c_pre = make_preconditioner(cheb_params(1e-3, 2.0, 31, 1.01), op)
    assert isinstance(n_pre, NewtonPreconditioner) and isinstance(c_pre, ChebyshevPreconditioner)
    assert n_pre.degree == c_pre.degree == 31
    r = np.array([1.0, 2.0, 3.0])
    out = np.empty(3)
    assert n_pre(r, out=out) is out
    assert np.allclose(out, c_pre.apply(r), rtol=1e-10)
    with pytest.raises(TypeError):
        make_preconditioner(object(), op)


bounds = st.tuples(
    st.floats(1e-4, 1.0), st.floats(1.5, 1e3)
)


@settings(max_examples=60, deadline=None)
@given(ab=bounds, nlev=st.integers(0, 6), s=st.sampled_from([1.0, 1.001, 1.01, 1.1]))
def test_newton_scalar_equals_chebyshev_scalar(ab, nlev, s):
    a, b = ab
    x = np.linspace(a, b, 101)
    pn = eval_poly_scalar(newton_params(a, b, nlev, s), x)
    pc = eval_poly_scalar(cheb_params(a, b, 2**nlev - 1, s), x)
    assert np.allclose(pn, pc, rtol=1e-9, atol=0)


@settings(max_examples=60, deadline=None)
@given(ab=bounds, m=st.integers(0, 40), s=st.sampled_from([1.0, 1.01]))
def test_residual_polynomial_bounded_by_minimax(ab, m, s):
    a, b = ab
    c = cheb_params(a, b, m, s)
    # the minimax property holds on the interval the polynomial was built for
    x = np.linspace(c.theta - c.delta, c.theta + c.delta, 301)
    res = np.abs(1 - x * eval_poly_scalar(c, x))
    assert res.max() <= (1 + 1e-9) / chebyshev_t(m + 1, c.sigma) + 1e-14
    assert np.all(eval_poly_scalar(c, x) > 0)


def test_residual_poly_matches_direct_form():
    x = np.linspace(0.0, 2.2, 301)
    for s in (1.0, 1.01):
        for nlev in range(5):
            pn = newton_params(0.01, 2.0, nlev, s)
            pc = cheb_params(0.01, 2.0, 2**nlev - 1, s)
            direct = 1 - x * eval_poly_scalar(pn, x)
            assert np.allclose(residual_poly(pn, x), direct, atol=1e-10)
            assert np.allclose(residual_poly(pc, x), direct, atol=1e-10)
    assert residual_poly(newton_params(1.0, 1.0, 3), 1.0) == 0.0


def test_residual_poly_keeps_relative_accuracy():
    # |1 - x p(x)| ~ 1e-9 here: the subtraction form keeps only a few digits
    a, b, m = 0.1, 1.0, 31
    want = 1 / chebyshev_t(m + 1, (a + b) / (b - a))
    assert residual_poly(cheb_params(a, b, m), a) == pytest.approx(want, rel=1e-12)
    assert residual_poly(newton_params(a, b, 5), a) == pytest.approx(want, rel=1e-12)
