"""Newton-Raphson Jacobian in CRS form.

Layout::

    J = [[ Re dS/dVa[pvpq, pvpq]   Re dS/dVm[pvpq, pq] ],
         [ Im dS/dVa[pq,   pvpq]   Im dS/dVm[pq,   pq] ]]

:func:`create_jacobian_direct` writes the CRS arrays of ``J`` straight from
the derivative data vectors.  :func:`create_jacobian_generic` slices and
stacks the four blocks with the generic CRS primitives.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .crs import ComplexCRS, CRSError, RealCRS, crs_block2x2, crs_imag, crs_real, crs_submatrix
from .derivatives import DerivativePair
from .network import IndexSets

__all__ = ["create_jacobian_direct", "create_jacobian_generic", "JacobianBuffer"]


class JacobianBuffer:
    """Preallocated CRS arrays for repeated direct assembly on one pattern.

    A Jacobian built into a buffer holds views of it and is overwritten by
    the next assembly into the same buffer.
    """

    def __init__(self, nnz_y: int, n: int):
        self.jx = np.empty(4 * nnz_y, dtype=np.float64)
        self.ji = np.empty(4 * nnz_y, dtype=np.int64)
        self.jp = np.zeros(n + 1, dtype=np.int64)

    def fits(self, nnz_y: int, n: int) -> bool:
        return self.jx.size == 4 * nnz_y and self.jp.size == n + 1


@njit(cache=True)
def _fill_rows(rows, take_imag, yj, yp, dva_x, dvm_x, pvpq, pvpq_lookup, pq, pq_lookup,
               n_pv, n_pvpq, jx, ji, jp, row0, nnz):
    """Append one J row per bus in ``rows`` (upper or lower block half).

    Per row, sweep A writes angle columns of PV buses and counts the PQ
    neighbours; sweep B writes the PQ angle columns and, ``n_pq_row`` slots
    further on, the magnitude columns.  Both runs come out ascending.
    """
    visits = 0
    for r in range(rows.size):
        bus = rows[r]
        lo = yp[bus]
        hi = yp[bus + 1]
        n_pq_row = 0
        for k in range(lo, hi):
            visits += 1
            c = yj[k]
            j = pvpq_lookup[c]
            if pvpq[j] == c:
                if j < n_pv:
                    jx[nnz] = dva_x[k].imag if take_imag else dva_x[k].real
                    ji[nnz] = j
                    nnz += 1
                else:
                    n_pq_row += 1
        pos = nnz
        for k in range(lo, hi):
            visits += 1
            c = yj[k]
            j = pq_lookup[c]
            if pq.size > 0 and pq[j] == c:
                if take_imag:
                    jx[pos] = dva_x[k].imag
                    jx[pos + n_pq_row] = dvm_x[k].imag
                else:
                    jx[pos] = dva_x[k].real
                    jx[pos + n_pq_row] = dvm_x[k].real
                ji[pos] = n_pv + j
                ji[pos + n_pq_row] = n_pvpq + j
                pos += 1
        nnz += 2 * n_pq_row
        jp[row0 + r + 1] = nnz
    return nnz, visits


def _check_sets(idx: IndexSets, n_bus: int) -> None:
    if idx.pvpq_lookup.size != n_bus or idx.pq_lookup.size != n_bus:
        raise CRSError("index lookups do not match the admittance matrix size")
    if not (np.array_equal(idx.pvpq[idx.pvpq_lookup[idx.pvpq]], idx.pvpq)
            and np.array_equal(idx.pq[idx.pq_lookup[idx.pq]], idx.pq)
            and np.array_equal(idx.pvpq[idx.n_pv:], idx.pq)):
        raise CRSError("inconsistent index sets")


def create_jacobian_direct(d: DerivativePair, y: ComplexCRS, idx: IndexSets,
                           stats: dict | None = None,
                           out: JacobianBuffer | None = None) -> RealCRS:
    """Assemble ``J`` in one pass over the PV/PQ rows of the derivative pattern.

    ``y`` supplies the pattern shared by both derivative data vectors.
    Storage is sized for the ``4 nnz(Y)`` upper bound; without ``out`` the
    result is trimmed into fresh arrays.
    """
    if d.dva_x.size != y.nnz or d.dvm_x.size != y.nnz:
        raise CRSError("derivative data vectors are not aligned with the admittance pattern")
    _check_sets(idx, y.n_rows)
    n = idx.n_unknowns
    buf = out if out is not None and out.fits(y.nnz, n) else JacobianBuffer(y.nnz, n)
    jx, ji, jp = buf.jx, buf.ji, buf.jp
    args = (y.col_idx, y.row_ptr, d.dva_x, d.dvm_x, idx.pvpq, idx.pvpq_lookup,
            idx.pq, idx.pq_lookup, idx.n_pv, idx.n_pvpq, jx, ji, jp)
    nnz, v1 = _fill_rows(idx.pvpq, False, *args, 0, 0)
    nnz, v2 = _fill_rows(idx.pq, True, *args, idx.n_pvpq, nnz)
    if stats is not None:
        stats["rows"] = idx.n_pvpq + idx.n_pq
        stats["visits"] = int(v1 + v2)
    if out is None:
        return RealCRS(n, n, jx[:nnz].copy(), ji[:nnz].copy(), jp.copy())
    # views: freezing them leaves the buffer itself writable
    return RealCRS(n, n, jx[:nnz], ji[:nnz], jp[:])


def create_jacobian_generic(dva: ComplexCRS, dvm: ComplexCRS, idx: IndexSets,
                            stats: dict | None = None) -> RealCRS:
    """Slice the four blocks out of the full derivative matrices and stack them."""
    if dva.shape != dvm.shape or dva.n_rows != dva.n_cols:
        raise CRSError(f"derivative matrices have shapes {dva.shape} and {dvm.shape}")
    if idx.pvpq_lookup.size != dva.n_rows:
        raise CRSError("index sets do not match the derivative matrices")
    counter: dict = {}
    j11 = crs_real(crs_submatrix(dva, idx.pvpq, idx.pvpq, counter=counter), counter=counter)
    j12 = crs_real(crs_submatrix(dvm, idx.pvpq, idx.pq, counter=counter), counter=counter)
    j21 = crs_imag(crs_submatrix(dva, idx.pq, idx.pvpq, counter=counter), counter=counter)
    j22 = crs_imag(crs_submatrix(dvm, idx.pq, idx.pq, counter=counter), counter=counter)
    j = crs_block2x2(j11, j12, j21, j22, counter=counter)
    if stats is not None:
        stats["rows"] = 2 * (idx.n_pvpq + idx.n_pq)
        stats["visits"] = counter["visits"]
    return j
