"""MatrixMarket coordinate I/O for symmetric real matrices.

Only ``matrix coordinate real {symmetric,general}`` is accepted. General
files must hold symmetric content; either way the result stores both
triangles. The writer emits the lower triangle with 17 significant digits,
so ``load(save(m))`` reproduces the CSR arrays exactly.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .linop import CsrMatrix

__all__ = ["MatrixMarketError", "load_matrix_market", "save_matrix_market"]

#: asymmetry allowed in loaded matrices, relative to max|a_ij|
LOAD_SYM_TOL = 1e-12


class MatrixMarketError(ValueError):
    def __init__(self, msg, line=None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


def _header(lines):
    if not lines:
        raise MatrixMarketError("empty file", 1)
    head = lines[0].split()
    if len(head) != 5 or head[0].lower() != "%%matrixmarket":
        raise MatrixMarketError("missing %%MatrixMarket header", 1)
    obj, fmt, field, symm = (h.lower() for h in head[1:])
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixMarketError(f"unsupported layout '{obj} {fmt}'", 1)
    if field not in ("real", "integer", "double"):
        raise MatrixMarketError(f"unsupported field '{field}'", 1)
    if symm not in ("symmetric", "general"):
        raise MatrixMarketError(f"unsupported symmetry '{symm}'", 1)
    return symm


def _parse_fast(lines, lineno):
    tokens = " ".join(lines[ln - 1] for ln in lineno).split()
    if len(tokens) != 3 * lineno.size:
        return None, None, None
    try:
        data = np.array(tokens, dtype=np.float64).reshape(-1, 3)
    except ValueError:
        return None, None, None
    idx = data[:, :2]
    if not np.all(idx == np.round(idx)):
        return None, None, None
    return idx[:, 0].astype(np.int64), idx[:, 1].astype(np.int64), data[:, 2].copy()


def _parse_slow(lines, lineno):
    nnz = lineno.size
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    for k, ln in enumerate(lineno):
        parts = lines[ln - 1].split()
        if len(parts) != 3:
            raise MatrixMarketError("entry must be 'row col value'", int(ln))
        try:
            rows[k], cols[k] = int(parts[0]), int(parts[1])
            vals[k] = float(parts[2])
        except ValueError:
            raise MatrixMarketError(f"cannot parse entry {lines[ln - 1]!r}", int(ln)) from None
    return rows, cols, vals


def load_matrix_market(path, threads=1):
    """Read a ``.mtx`` file into a symmetric :class:`CsrMatrix`.

    Raises
    ------
    MatrixMarketError
        On malformed input; ``err.line`` is the 1-based line number.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    symm = _header(lines)

    pos = 1
    while pos < len(lines) and (not lines[pos].strip() or lines[pos].lstrip().startswith("%")):
        pos += 1
    if pos == len(lines):
        raise MatrixMarketError("missing size line", pos + 1)
    try:
        nrows, ncols, nnz = (int(t) for t in lines[pos].split())
    except ValueError:
        raise MatrixMarketError("size line must hold three integers", pos + 1) from None
    if nrows != ncols:
        raise MatrixMarketError(f"matrix is not square ({nrows} x {ncols})", pos + 1)
    n = nrows

    body = lines[pos + 1 :]
    # line number (1-based) of every data entry
    lineno = np.array(
        [pos + 2 + k for k, s in enumerate(body) if s.strip() and not s.lstrip().startswith("%")],
        dtype=np.int64,
    )
    if lineno.size != nnz:
        raise MatrixMarketError(f"expected {nnz} entries, found {lineno.size}", pos + 2 + len(body))
    rows, cols, vals = _parse_fast(lines, lineno)
    if rows is None:
        rows, cols, vals = _parse_slow(lines, lineno)
    bad = np.flatnonzero((rows < 1) | (rows > n) | (cols < 1) | (cols > n))
    if bad.size:
        k = int(bad[0])
        raise MatrixMarketError(
            f"index ({rows[k]}, {cols[k]}) outside 1..{n} (indices are 1-based)", int(lineno[k])
        )
    if not np.all(np.isfinite(vals)):
        k = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise MatrixMarketError("non-finite value", int(lineno[k]))
    rows -= 1
    cols -= 1

    if symm == "symmetric":
        upper = np.flatnonzero(cols > rows)
        if upper.size:
            k = int(upper[0])
            raise MatrixMarketError("symmetric files store the lower triangle only", int(lineno[k]))
        lower = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    else:
        full = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        asym = abs(full - full.T)
        scale = np.abs(vals).max() if vals.size else 0.0
        if asym.nnz and asym.max() > LOAD_SYM_TOL * scale:
            raise MatrixMarketError(
                f"general matrix is not symmetric (max |a_ij - a_ji| = {asym.max():.3e})"
            )
        lower = sp.tril(full, format="csr")
    lower.sum_duplicates()
    strict = sp.tril(lower, k=-1, format="csr")
    full = (lower + strict.T).tocsr()
    return CsrMatrix.from_scipy(full, sym_tol=0.0, threads=threads)


def save_matrix_market(m, path, comment=None):
    """Write ``m`` as ``coordinate real symmetric`` (lower triangle)."""
    if not isinstance(m, CsrMatrix):
        m = CsrMatrix.from_scipy(m)
    low = sp.tril(m.to_scipy(), format="coo")
    order = np.lexsort((low.row, low.col))  # column-major, as in most .mtx files
    r, c, v = low.row[order] + 1, low.col[order] + 1, low.data[order]
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{m.n} {m.n} {v.size}\n")
        fh.writelines(f"{i} {j} {x:.17g}\n" for i, j, x in zip(r, c, v))
