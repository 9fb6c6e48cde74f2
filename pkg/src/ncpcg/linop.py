"""Matrix-free SPD operators, CSR storage, model problems and Jacobi scaling.

Every operator exposes ``apply(v, out=None)`` (also available as ``op @ v``)
and ``diagonal()``. Nothing else is required by the solvers, so a user
operator only has to implement those two methods.

The finite-difference Laplacians use the unit-grid convention: diagonal
``2 * dim`` and off-diagonals ``-1``, Dirichlet boundary. Jacobi scaling
removes the grid constant, so condition numbers are unaffected.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.sparse as sp

__all__ = [
    "LinearOperator",
    "CsrMatrix",
    "DenseOperator",
    "StencilOperator",
    "ScaledOperator",
    "CountingOperator",
    "DimensionError",
    "NotPositiveDefiniteError",
    "fd_laplacian",
    "jacobi_scale",
    "analytic_spectrum",
    "analytic_bounds",
    "apply",
]

#: largest n for which an assembled Laplacian or a full analytic spectrum is built
ASSEMBLE_GUARD = 50_000_000
SPECTRUM_GUARD = 10_000_000
DENSE_GUARD = 5_000


class DimensionError(ValueError):
    pass


class NotPositiveDefiniteError(ValueError):
    pass


def _check_vector(v, n):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != n:
        raise DimensionError(f"expected a vector of length {n}, got shape {v.shape}")
    return v


def _split(n, parts):
    parts = max(1, min(parts, n))
    edges = np.linspace(0, n, parts + 1).astype(np.int64)
    return list(zip(edges[:-1], edges[1:]))


class LinearOperator:
    """Symmetric action ``v -> A v`` on float64 vectors of length ``n``."""

    n: int

    #: worker threads used by ``apply``; results never depend on this value
    threads: int = 1

    @property
    def shape(self):
        return (self.n, self.n)

    def apply(self, v, out=None):
        v = _check_vector(v, self.n)
        if out is None:
            out = np.empty(self.n)
        return self._apply(v, out)

    def _apply(self, v, out):
        raise NotImplementedError

    def __matmul__(self, v):
        return self.apply(v)

    def diagonal(self):
        raise NotImplementedError

    def to_dense(self):
        """Dense matrix built column by column. Test helper for small ``n``."""
        if self.n > DENSE_GUARD:
            raise MemoryError(f"refusing to densify an operator of size {self.n}")
        eye = np.eye(self.n)
        return np.column_stack([self.apply(eye[:, j]) for j in range(self.n)])


def apply(op, v, out=None):
    """``op @ v`` with a length check."""
    return op.apply(v, out=out)


class CountingOperator(LinearOperator):
    """Wraps an operator and counts applications (thread-safe)."""

    def __init__(self, inner):
        self.inner = inner
        self.n = inner.n
        self.count = 0
        self._lock = threading.Lock()

    def apply(self, v, out=None):
        y = self.inner.apply(v, out=out)
        with self._lock:
            self.count += 1
        return y

    def diagonal(self):
        return self.inner.diagonal()

    def reset(self):
        with self._lock:
            self.count = 0


class DenseOperator(LinearOperator):
    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {matrix.shape}")
        self.matrix = matrix
        self.n = matrix.shape[0]

    def _apply(self, v, out):
        return np.dot(self.matrix, v, out=out)

    def diagonal(self):
        return self.matrix.diagonal().copy()


class CsrMatrix(LinearOperator):
    """Symmetric sparse matrix in compressed-row form.

    Parameters
    ----------
    n : int
        Dimension.
    row_ptr, col_idx, values : array_like
        Standard CSR arrays. Column indices must be strictly increasing
        within each row.
    sym_tol : float, optional
        Allowed asymmetry relative to ``max|a_ij|``. Generated matrices use 0.
    check : bool, optional
        Validate structure and symmetry on construction.
    """

    def __init__(self, n, row_ptr, col_idx, values, *, sym_tol=0.0, check=True, threads=1):
        self.n = int(n)
        self.row_ptr = np.ascontiguousarray(row_ptr, dtype=np.int64)
        self.col_idx = np.ascontiguousarray(col_idx, dtype=np.int64)
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        self.threads = threads
        if check:
            self._validate(sym_tol)
        self._sp = sp.csr_matrix(
            (self.values, self.col_idx, self.row_ptr), shape=(self.n, self.n), copy=False
        )
        self._blocks = None

    @property
    def nnz(self):
        return int(self.row_ptr[-1])

    def _validate(self, sym_tol):
        n, rp, ci = self.n, self.row_ptr, self.col_idx
        if rp.shape != (n + 1,) or rp[0] != 0 or np.any(np.diff(rp) < 0):
            raise ValueError("row_ptr must be nondecreasing, start at 0 and have length n+1")
        if rp[-1] != ci.shape[0] or ci.shape != self.values.shape:
            raise ValueError("row_ptr[n] must equal the number of stored entries")
        if ci.size and (ci.min() < 0 or ci.max() >= n):
            raise ValueError("column index out of range")
        if ci.size > 1:
            step = np.diff(ci)
            # a step across a row boundary may be anything; inside a row it must be > 0
            inside = np.ones(ci.size - 1, dtype=bool)
            starts = rp[1:-1]
            starts = starts[(starts > 0) & (starts < ci.size)]
            inside[starts - 1] = False
            if np.any(step[inside] <= 0):
                raise ValueError("column indices must be strictly increasing within each row")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("matrix contains non-finite values")
        m = sp.csr_matrix((self.values, ci, rp), shape=(n, n))
        diff = abs(m - m.T)
        scale = np.abs(self.values).max() if self.values.size else 0.0
        if diff.nnz and diff.max() > sym_tol * scale:
            raise ValueError(
                f"matrix is not symmetric: max |a_ij - a_ji| = {diff.max():.3e}"
            )

    @classmethod
    def from_scipy(cls, m, **kwargs):
        m = sp.csr_matrix(m, dtype=np.float64)
        m.sum_duplicates()
        m.sort_indices()
        return cls(m.shape[0], m.indptr, m.indices, m.data, **kwargs)

    @classmethod
    def from_dense(cls, a, **kwargs):
        return cls.from_scipy(sp.csr_matrix(np.asarray(a, dtype=np.float64)), **kwargs)

    @classmethod
    def identity(cls, n):
        return cls(n, np.arange(n + 1), np.arange(n), np.ones(n))

    def to_scipy(self):
        return self._sp.copy()

    def _row_blocks(self):
        if self._blocks is None or len(self._blocks) != self.threads:
            self._blocks = [(lo, hi, self._sp[lo:hi]) for lo, hi in _split(self.n, self.threads)]
        return self._blocks

    def _apply(self, v, out):
        if self.threads <= 1 or self.n < 10_000:
            out[:] = self._sp @ v
            return out

        # each row is reduced in the same order whatever the partition
        def work(block):
            lo, hi, m = block
            out[lo:hi] = m @ v

        with ThreadPoolExecutor(self.threads) as pool:
            list(pool.map(work, self._row_blocks()))
        return out

    def diagonal(self):
        return self._sp.diagonal()

    def __eq__(self, other):
        if not isinstance(other, CsrMatrix):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.row_ptr, other.row_ptr)
            and np.array_equal(self.col_idx, other.col_idx)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self):
        return f"CsrMatrix(n={self.n}, nnz={self.nnz})"


def _dim(kind):
    k = str(kind).lower().strip()
    if k in ("2", "2d", "lap2d"):
        return 2
    if k in ("3", "3d", "lap3d"):
        return 3
    raise ValueError(f"unknown stencil kind {kind!r}; use '2d' or '3d'")


class StencilOperator(LinearOperator):
    """Matrix-free 5-point (2D) or 7-point (3D) Dirichlet Laplacian.

    The unknown with grid coordinates ``(..., iy, ix)`` is stored at the
    row-major position, ``ix`` fastest. Neighbour contributions are summed
    in increasing column order, which makes ``apply`` bitwise identical to
    the product with the assembled CSR matrix.
    """

    def __init__(self, kind, nx, threads=1):
        self.dim = _dim(kind)
        self.nx = int(nx)
        if self.nx < 1:
            raise ValueError("nx must be at least 1")
        n = self.nx**self.dim
        if n > np.iinfo(np.int64).max // 8:
            raise OverflowError(f"n = nx**{self.dim} is not addressable")
        self.n = n
        self.threads = threads
        self.diag = float(2 * self.dim)
        self.off = -1.0

    @property
    def kind(self):
        return f"{self.dim}d"

    def _views(self, pad, lo, hi):
        """Shifted views of the padded grid for output slab ``lo:hi`` along
        axis 0, in increasing column order (``None`` marks the centre)."""
        d = self.dim
        offsets = [(axis, 0) for axis in range(d)] + [None]
        offsets += [(axis, 2) for axis in reversed(range(d))]
        views = []
        for off in offsets:
            if off is None:
                views.append(None)
                continue
            axis, shift = off
            idx = []
            for a in range(d):
                start = shift if a == axis else 1
                if a == 0:
                    idx.append(slice(start + lo, start + hi))
                else:
                    idx.append(slice(start, start + self.nx))
            views.append(pad[tuple(idx)])
        return views

    def _slab(self, pad, grid, res, lo, hi):
        acc = res[lo:hi]
        tmp = np.empty_like(acc)
        acc[...] = 0.0
        for view in self._views(pad, lo, hi):
            if view is None:
                np.multiply(grid[lo:hi], self.diag, out=tmp)
            else:
                np.multiply(view, self.off, out=tmp)
            acc += tmp

    def _apply(self, v, out):
        shape = (self.nx,) * self.dim
        grid = v.reshape(shape)
        pad = np.zeros(tuple(s + 2 for s in shape))
        pad[(slice(1, -1),) * self.dim] = grid
        res = out.reshape(shape)
        slabs = _split(self.nx, self.threads if self.n >= 10_000 else 1)
        if len(slabs) == 1:
            self._slab(pad, grid, res, 0, self.nx)
        else:
            with ThreadPoolExecutor(len(slabs)) as pool:
                list(pool.map(lambda s: self._slab(pad, grid, res, *s), slabs))
        return out

    def diagonal(self):
        return np.full(self.n, self.diag)

    def assemble(self):
        """The same operator as a :class:`CsrMatrix`."""
        return fd_laplacian(self.dim, self.nx, form="assembled")

    def __repr__(self):
        return f"StencilOperator(kind={self.kind!r}, nx={self.nx})"


class ScaledOperator(LinearOperator):
    """``D^{-1/2} A D^{-1/2}`` applied without forming the product."""

    def __init__(self, inner, inv_sqrt_diag):
        self.inner = inner
        self.n = inner.n
        self.inv_sqrt_diag = np.asarray(inv_sqrt_diag, dtype=np.float64)
        if self.inv_sqrt_diag.shape != (self.n,):
            raise DimensionError("scaling vector has the wrong length")
        self._work = threading.local()

    @property
    def threads(self):
        return self.inner.threads

    @threads.setter
    def threads(self, value):
        self.inner.threads = value

    def _apply(self, v, out):
        w = getattr(self._work, "buf", None)
        if w is None or w.shape[0] != self.n:
            w = self._work.buf = np.empty(self.n)
        np.multiply(v, self.inv_sqrt_diag, out=w)
        self.inner.apply(w, out=out)
        out *= self.inv_sqrt_diag
        return out

    def diagonal(self):
        return self.inner.diagonal() * self.inv_sqrt_diag**2

    def __repr__(self):
        return f"ScaledOperator({self.inner!r})"


def fd_laplacian(kind, nx, form="stencil", threads=1):
    """Finite-difference Laplacian on the unit square or cube.

    Parameters
    ----------
    kind : {'2d', '3d'}
    nx : int
        Interior points per dimension; ``n = nx**dim``.
    form : {'stencil', 'assembled'}
        Matrix-free stencil or CSR matrix.
    """
    dim = _dim(kind)
    nx = int(nx)
    if nx < 1:
        raise ValueError("nx must be at least 1")
    if form == "stencil":
        return StencilOperator(dim, nx, threads=threads)
    if form != "assembled":
        raise ValueError(f"unknown form {form!r}")
    n = nx**dim
    if n > ASSEMBLE_GUARD:
        raise OverflowError(f"n = {n} is too large to assemble; use form='stencil'")
    t = sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(nx, nx), format="csr")
    eye = sp.identity(nx, format="csr")
    terms = []
    for axis in range(dim):
        factors = [t if a == axis else eye for a in range(dim)]
        m = factors[0]
        for f in factors[1:]:
            m = sp.kron(m, f, format="csr")
        terms.append(m)
    a = terms[0]
    for m in terms[1:]:
        a = a + m
    return CsrMatrix.from_scipy(a, threads=threads)


def jacobi_scale(op):
    """Symmetric diagonal scaling to unit diagonal.

    Returns
    -------
    scaled : ScaledOperator
    inv_sqrt_diag : ndarray
        ``D^{-1/2}``; the solution of the original system is
        ``inv_sqrt_diag * x`` where ``x`` solves the scaled one.
    """
    d = np.asarray(op.diagonal(), dtype=np.float64)
    bad = np.flatnonzero(~(d > 0))
    if bad.size:
        i = int(bad[0])
        raise NotPositiveDefiniteError(f"diagonal entry {i} is {d[i]!r}; it must be positive")
    inv = 1.0 / np.sqrt(d)
    return ScaledOperator(op, inv), inv


def _sin2(nx):
    h = 1.0 / (nx + 1)
    return np.sin(np.arange(1, nx + 1) * np.pi * h / 2) ** 2


def analytic_spectrum(kind, nx, scaled=True):
    """All eigenvalues of the FD Laplacian, ascending.

    The unit-grid operator has eigenvalues ``4 * sum_k sin^2(i_k pi h / 2)``;
    the Jacobi-scaled one divides that by ``2 * dim``.
    """
    dim = _dim(kind)
    n = int(nx) ** dim
    if n > SPECTRUM_GUARD:
        raise OverflowError(f"n = {n} exceeds the enumeration guard {SPECTRUM_GUARD}")
    s = _sin2(int(nx))
    lam = s
    for _ in range(dim - 1):
        lam = np.add.outer(lam, s).ravel()
    lam = np.sort(lam)
    factor = 4.0 / (2 * dim) if scaled else 4.0
    return factor * lam


def analytic_bounds(kind, nx, scaled=True):
    """``(lambda_min, lambda_max)`` of the FD Laplacian in closed form."""
    dim = _dim(kind)
    h = 1.0 / (int(nx) + 1)
    lo = dim * np.sin(np.pi * h / 2) ** 2
    hi = dim * np.cos(np.pi * h / 2) ** 2
    factor = 4.0 / (2 * dim) if scaled else 4.0
    return factor * lo, factor * hi
