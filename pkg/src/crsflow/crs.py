"""Compressed row storage (CRS) matrices.

A CRS matrix is held in three arrays: ``values`` (the stored nonzeros),
``col_idx`` (their column indices) and ``row_ptr`` (offsets into the first
two arrays, one per row plus a terminating ``nnz``).  Indexing is zero-based
and columns are kept strictly ascending within each row.

Besides the container types this module carries the generic primitives
(submatrix selection, 2x2 block stacking, part extraction) that the
baseline Jacobian path composes.  The fast path never calls them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numba import njit

__all__ = [
    "CRSError",
    "ComplexCRS",
    "RealCRS",
    "crs_from_triplets",
    "crs_from_coo",
    "crs_to_dense",
    "crs_to_triplets",
    "crs_matvec",
    "crs_submatrix",
    "crs_block2x2",
    "crs_real",
    "crs_imag",
    "crs_to_scipy",
]


class CRSError(ValueError):
    """Structural problem with a CRS matrix or its construction."""


_PATTERN_ERRORS = {
    1: "row_ptr decreases",
    2: "column index out of range",
    3: "column indices not strictly ascending",
}


@njit(cache=True)
def _check_pattern(col_idx, row_ptr, n_cols):
    for i in range(row_ptr.size - 1):
        lo, hi = row_ptr[i], row_ptr[i + 1]
        if hi < lo:
            return 1, i
        prev = -1
        for k in range(lo, hi):
            c = col_idx[k]
            if c < 0 or c >= n_cols:
                return 2, i
            if c <= prev:
                return 3, i
            prev = c
    return 0, 0


@dataclass(frozen=True, eq=False)
class _CRS:
    n_rows: int
    n_cols: int
    values: np.ndarray
    col_idx: np.ndarray
    row_ptr: np.ndarray

    _dtype = np.float64

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=self._dtype))
        object.__setattr__(self, "col_idx", np.asarray(self.col_idx, dtype=np.int64))
        object.__setattr__(self, "row_ptr", np.asarray(self.row_ptr, dtype=np.int64))
        self.check()
        for a in (self.values, self.col_idx, self.row_ptr):
            a.flags.writeable = False

    @property
    def nnz(self) -> int:
        return int(self.row_ptr[-1])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def stored_scalars(self) -> int:
        """Number of scalars held: values, column indices and row pointer."""
        return self.values.size + self.col_idx.size + self.row_ptr.size

    def check(self) -> None:
        """Raise :class:`CRSError` unless every CRS invariant holds."""
        n, m = self.n_rows, self.n_cols
        if n < 0 or m < 0:
            raise CRSError(f"negative shape {(n, m)}")
        rp, ci = self.row_ptr, self.col_idx
        if rp.ndim != 1 or rp.size != n + 1:
            raise CRSError(f"row_ptr has length {rp.size}, expected {n + 1}")
        if rp[0] != 0:
            raise CRSError("row_ptr[0] must be 0")
        nnz = int(rp[-1])
        if ci.size != nnz or self.values.size != nnz:
            raise CRSError(
                f"nnz={nnz} but len(col_idx)={ci.size}, len(values)={self.values.size}"
            )
        code, row = _check_pattern(ci, rp, m)
        if code:
            raise CRSError(f"row {row}: " + _PATTERN_ERRORS[code])

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.row_ptr[i], self.row_ptr[i + 1]
        return self.col_idx[lo:hi], self.values[lo:hi]

    def with_values(self, values: np.ndarray):
        """Same pattern (shared arrays), new data vector."""
        return type(self)(self.n_rows, self.n_cols, values, self.col_idx, self.row_ptr)

    def __eq__(self, other) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.row_ptr, other.row_ptr)
            and np.array_equal(self.col_idx, other.col_idx)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"{type(self).__name__}(shape={self.shape}, nnz={self.nnz})"


class ComplexCRS(_CRS):
    """Complex matrix in CRS form (the admittance matrix and its derivatives)."""

    _dtype = np.complex128


class RealCRS(_CRS):
    """Real matrix in CRS form (the Jacobian)."""

    _dtype = np.float64


def crs_from_coo(rows, cols, vals, n_rows: int, n_cols: int, *,
                 real: bool = False, keep_diagonal: bool = False):
    """Build a CRS matrix from coordinate arrays.

    Duplicates are summed and entries whose sum is exactly zero dropped.
    With ``keep_diagonal`` every diagonal slot of a square matrix is stored,
    zero or not.
    """
    cls = RealCRS if real else ComplexCRS
    rows = np.asarray(rows, dtype=np.int64).ravel()
    cols = np.asarray(cols, dtype=np.int64).ravel()
    vals = np.asarray(vals, dtype=cls._dtype).ravel()
    if not (rows.size == cols.size == vals.size):
        raise CRSError("rows, cols and vals differ in length")
    if rows.size and (rows.min() < 0 or rows.max() >= n_rows
                      or cols.min() < 0 or cols.max() >= n_cols):
        raise CRSError(f"triplet index out of range for shape {(n_rows, n_cols)}")
    if keep_diagonal:
        if n_rows != n_cols:
            raise CRSError("keep_diagonal needs a square matrix")
        d = np.arange(n_rows, dtype=np.int64)
        rows = np.concatenate([rows, d])
        cols = np.concatenate([cols, d])
        vals = np.concatenate([vals, np.zeros(n_rows, dtype=vals.dtype)])

    key = rows * max(n_cols, 1) + cols
    uniq, inv = np.unique(key, return_inverse=True)
    summed = np.zeros(uniq.size, dtype=vals.dtype)
    np.add.at(summed, inv, vals)
    r = uniq // max(n_cols, 1)
    c = uniq - r * max(n_cols, 1)
    keep = summed != 0
    if keep_diagonal:
        keep |= r == c
    r, c, summed = r[keep], c[keep], summed[keep]
    row_ptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(np.bincount(r, minlength=n_rows), out=row_ptr[1:])
    return cls(n_rows, n_cols, summed, c, row_ptr)


def crs_from_triplets(entries: Iterable[tuple[int, int, complex]],
                      n_rows: int, n_cols: int, *, real: bool = False):
    """Build a CRS matrix from ``(row, col, value)`` triplets."""
    entries = list(entries)
    if entries:
        rows, cols, vals = zip(*entries)
    else:
        rows, cols, vals = (), (), ()
    return crs_from_coo(rows, cols, vals, n_rows, n_cols, real=real)


def crs_to_triplets(m: _CRS) -> list[tuple[int, int, complex]]:
    rows = np.repeat(np.arange(m.n_rows), np.diff(m.row_ptr))
    return list(zip(rows.tolist(), m.col_idx.tolist(), m.values.tolist()))


def crs_to_dense(m: _CRS) -> np.ndarray:
    out = np.zeros(m.shape, dtype=m.values.dtype)
    rows = np.repeat(np.arange(m.n_rows), np.diff(m.row_ptr))
    out[rows, m.col_idx] = m.values
    return out


def crs_to_scipy(m: _CRS):
    """View as a ``scipy.sparse.csr_matrix`` (arrays are copied by scipy)."""
    from scipy.sparse import csr_matrix

    return csr_matrix((m.values, m.col_idx, m.row_ptr), shape=m.shape)


@njit(cache=True)
def _matvec(values, col_idx, row_ptr, v):
    n = row_ptr.size - 1
    out = np.zeros(n, dtype=np.complex128)
    for i in range(n):
        acc = 0j
        for k in range(row_ptr[i], row_ptr[i + 1]):
            acc += values[k] * v[col_idx[k]]
        out[i] = acc
    return out


def crs_matvec(m: _CRS, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128)
    if v.shape != (m.n_cols,):
        raise CRSError(f"vector of shape {v.shape} does not match {m.shape}")
    out = _matvec(m.values.astype(np.complex128, copy=False), m.col_idx, m.row_ptr, v)
    return out if isinstance(m, ComplexCRS) else out.real.copy()


@njit(cache=True)
def _submatrix(values, col_idx, row_ptr, n_cols, rows, cols):
    colmap = np.full(n_cols, -1, dtype=np.int64)
    for b in range(cols.size):
        colmap[cols[b]] = b
    out_ptr = np.zeros(rows.size + 1, dtype=np.int64)
    visits = 0
    for a in range(rows.size):
        r = rows[a]
        cnt = 0
        for k in range(row_ptr[r], row_ptr[r + 1]):
            if colmap[col_idx[k]] >= 0:
                cnt += 1
        out_ptr[a + 1] = out_ptr[a] + cnt
    nnz = out_ptr[-1]
    out_x = np.empty(nnz, dtype=values.dtype)
    out_j = np.empty(nnz, dtype=np.int64)
    for a in range(rows.size):
        r = rows[a]
        pos = out_ptr[a]
        for k in range(row_ptr[r], row_ptr[r + 1]):
            visits += 1
            b = colmap[col_idx[k]]
            if b >= 0:
                # insertion keeps the output row sorted by its new column order
                q = pos
                while q > out_ptr[a] and out_j[q - 1] > b:
                    out_j[q] = out_j[q - 1]
                    out_x[q] = out_x[q - 1]
                    q -= 1
                out_j[q] = b
                out_x[q] = values[k]
                pos += 1
    return out_x, out_j, out_ptr, visits


def _index_array(idx: Sequence[int], bound: int, what: str) -> np.ndarray:
    a = np.asarray(idx, dtype=np.int64).ravel()
    if a.size and (a.min() < 0 or a.max() >= bound):
        raise CRSError(f"{what} index out of range [0, {bound})")
    if np.unique(a).size != a.size:
        raise CRSError(f"duplicate {what} indices")
    return a


def crs_submatrix(m: _CRS, rows: Sequence[int], cols: Sequence[int], *,
                  counter: dict | None = None):
    """``m[rows][:, cols]`` with the output column order given by ``cols``.

    Stored entries are carried over even when their value is zero, so the
    result pattern depends only on the pattern of ``m``.
    """
    r = _index_array(rows, m.n_rows, "row")
    c = _index_array(cols, m.n_cols, "column")
    x, j, p, visits = _submatrix(m.values, m.col_idx, m.row_ptr, m.n_cols, r, c)
    if counter is not None:
        counter["visits"] = counter.get("visits", 0) + int(visits)
    return type(m)(r.size, c.size, x, j, p)


@njit(cache=True)
def _part(values, imag):
    out = np.empty(values.size, dtype=np.float64)
    for k in range(values.size):
        out[k] = values[k].imag if imag else values[k].real
    return out


def crs_real(m: ComplexCRS, *, counter: dict | None = None) -> RealCRS:
    if counter is not None:
        counter["visits"] = counter.get("visits", 0) + m.nnz
    return RealCRS(m.n_rows, m.n_cols, _part(m.values, False), m.col_idx.copy(), m.row_ptr.copy())


def crs_imag(m: ComplexCRS, *, counter: dict | None = None) -> RealCRS:
    if counter is not None:
        counter["visits"] = counter.get("visits", 0) + m.nnz
    return RealCRS(m.n_rows, m.n_cols, _part(m.values, True), m.col_idx.copy(), m.row_ptr.copy())


@njit(cache=True)
def _stack_rows(ax, aj, ap, bx, bj, bp, b_off, out_x, out_j, out_p, row0, pos):
    # append rows of [A | B] to the output, B shifted right by b_off
    for i in range(ap.size - 1):
        for k in range(ap[i], ap[i + 1]):
            out_x[pos] = ax[k]
            out_j[pos] = aj[k]
            pos += 1
        for k in range(bp[i], bp[i + 1]):
            out_x[pos] = bx[k]
            out_j[pos] = bj[k] + b_off
            pos += 1
        out_p[row0 + i + 1] = pos
    return pos


def crs_block2x2(j11: _CRS, j12: _CRS, j21: _CRS, j22: _CRS, *,
                 counter: dict | None = None):
    """Stack four blocks into ``[[j11, j12], [j21, j22]]``."""
    top, bottom = j11.n_rows, j21.n_rows
    left, right = j11.n_cols, j12.n_cols
    if (j12.n_rows != top or j22.n_rows != bottom
            or j21.n_cols != left or j22.n_cols != right):
        raise CRSError(
            "block shapes do not conform: "
            f"{j11.shape} {j12.shape} / {j21.shape} {j22.shape}"
        )
    cls = type(j11)
    if not all(type(b) is cls for b in (j12, j21, j22)):
        raise CRSError("blocks must share one CRS type")
    nnz = j11.nnz + j12.nnz + j21.nnz + j22.nnz
    out_x = np.empty(nnz, dtype=cls._dtype)
    out_j = np.empty(nnz, dtype=np.int64)
    out_p = np.zeros(top + bottom + 1, dtype=np.int64)
    pos = _stack_rows(j11.values, j11.col_idx, j11.row_ptr, j12.values, j12.col_idx,
                      j12.row_ptr, left, out_x, out_j, out_p, 0, 0)
    _stack_rows(j21.values, j21.col_idx, j21.row_ptr, j22.values, j22.col_idx,
                j22.row_ptr, left, out_x, out_j, out_p, top, pos)
    if counter is not None:
        counter["visits"] = counter.get("visits", 0) + nnz
    return cls(top + bottom, left + right, out_x, out_j, out_p)
