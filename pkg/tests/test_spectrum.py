import io

import numpy as np
import pytest

from ncpcg import (
    DenseOperator,
    analytic_spectrum,
    apply_newton,
    cheb_params,
    fd_laplacian,
    jacobi_scale,
    newton_params,
)
from ncpcg.spectrum import (
    clustering_indicator,
    preconditioned_spectrum,
    spectrum_table,
    write_spectrum_csv,
)


def test_clustering_indicator():
    assert clustering_indicator([1.0, 1.05, 1.2, 3.0]) == 2
    assert clustering_indicator([2.0]) == 1
    with pytest.raises(ValueError):
        clustering_indicator([0.0, 1.0])
    with pytest.raises(ValueError):
        clustering_indicator([])


def test_nx2_degree0():
    rows = spectrum_table(2, [0])
    assert rows[0].kappa == pytest.approx(3.0)
    assert rows[0].l == 1
    lam = analytic_spectrum(2, 2)
    rep = preconditioned_spectrum(lam, newton_params(lam[0], lam[-1], 0))
    assert np.allclose(rep.mu, [0.5, 1.0, 1.0, 1.5])


@pytest.mark.parametrize("dim,nx", [(2, 8), (2, 16), (3, 5)])
@pytest.mark.parametrize("nlev", [1, 3])
def test_against_dense_formed_operator(dim, nx, nlev):
    op, _ = jacobi_scale(fd_laplacian(dim, nx))
    a = op.to_dense()
    lam = analytic_spectrum(dim, nx)
    p = newton_params(lam[0], lam[-1], nlev, 1.01)
    pm = np.column_stack([apply_newton(p, DenseOperator(a), e) for e in np.eye(a.shape[0])])
    # p(A) A is similar to a symmetric matrix, so its eigenvalues are real
    dense = np.sort(np.linalg.eigvals(pm @ a).real)
    rep = preconditioned_spectrum(lam, p)
    assert np.allclose(np.sort(rep.mu), dense, atol=1e-9)


def test_indefinite_polynomial_flagged():
    lam = np.array([0.1, 1.0, 5.0])
    # a polynomial built for [0.5, 1] is negative far outside its interval
    rep = preconditioned_spectrum(lam, cheb_params(0.5, 1.0, 3))
    assert not rep.spd and np.isnan(rep.kappa) and rep.l == 0


def test_kappa_decreases_and_separation_at_1p01():
    rows = spectrum_table(40, [0, 1, 3, 7], scale=1.01)
    kappas = [r.kappa for r in rows]
    assert kappas == sorted(kappas, reverse=True)
    assert all(r.l == 1 for r in rows)


def test_csv_format(tmp_path):
    lam = analytic_spectrum(2, 3)
    rep = preconditioned_spectrum(lam, cheb_params(lam[0], lam[-1], 3))
    buf = io.StringIO()
    write_spectrum_csv(rep, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "s,lambda,mu"
    assert len(lines) == 10
    s, l1, m1 = lines[1].split(",")
    assert s == "1" and float(l1) == lam[0] and float(m1) == rep.mu[0]
    write_spectrum_csv(rep, tmp_path / "x.csv")
    assert (tmp_path / "x.csv").read_text() == buf.getvalue()
