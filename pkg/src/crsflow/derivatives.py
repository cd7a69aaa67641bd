"""Voltage derivatives of the bus power injections.

For the admittance matrix ``Y``, voltages ``V`` and ``I = Y V``::

    dS/dVm = diag(V) conj(Y diag(Vnorm)) + conj(diag(I)) diag(Vnorm)
    dS/dVa = 1j diag(V) conj(diag(I) - Y diag(V))

Both matrices share the pattern of ``Y`` (its diagonal is always stored),
so only their data vectors are computed.  :func:`fused_derivatives` does
that in two sweeps over the stored entries of ``Y``.
:func:`generic_derivatives` evaluates the same expressions one sparse
operation at a time and serves as baseline and cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .crs import ComplexCRS, CRSError, crs_matvec
from .network import IndexSets

__all__ = [
    "VoltageState",
    "DerivativePair",
    "Mismatch",
    "fused_derivatives",
    "generic_derivatives",
    "complex_injections",
    "polar_injections",
    "mismatch",
]


@dataclass(frozen=True, eq=False)
class VoltageState:
    v: np.ndarray
    vm: np.ndarray
    va: np.ndarray  # radians
    v_norm: np.ndarray

    @classmethod
    def from_polar(cls, vm, va) -> "VoltageState":
        vm = np.array(vm, dtype=np.float64)
        va = np.array(va, dtype=np.float64)
        if vm.shape != va.shape:
            raise ValueError("vm and va differ in shape")
        v_norm = np.exp(1j * va)
        return cls(vm * v_norm, vm, va, v_norm)

    @property
    def n(self) -> int:
        return self.v.size


@dataclass(eq=False)
class DerivativePair:
    """Data vectors of dS/dVa and dS/dVm aligned with ``Y.values``."""

    dva_x: np.ndarray
    dvm_x: np.ndarray
    ibus: np.ndarray
    temp: np.ndarray
    visits: int = 0

    @classmethod
    def empty(cls, nnz: int, n: int) -> "DerivativePair":
        return cls(np.empty(nnz, np.complex128), np.empty(nnz, np.complex128),
                   np.empty(n, np.complex128), np.empty(n, np.complex128))

    def as_crs(self, y: ComplexCRS) -> tuple[ComplexCRS, ComplexCRS]:
        """``(dS/dVa, dS/dVm)`` as matrices sharing ``y``'s index arrays."""
        return y.with_values(self.dva_x), y.with_values(self.dvm_x)


@dataclass(frozen=True, eq=False)
class Mismatch:
    f: np.ndarray

    @property
    def max_abs(self) -> float:
        return float(np.abs(self.f).max()) if self.f.size else 0.0


def _check(y: ComplexCRS, state: VoltageState) -> None:
    if y.n_rows != y.n_cols:
        raise CRSError(f"admittance matrix must be square, got {y.shape}")
    if state.n != y.n_rows:
        raise CRSError(f"state has {state.n} buses, matrix has {y.n_rows}")


# ------------------------------------------------------------------ fused

@njit(cache=True)
def _fused(yx, yj, yp, v, v_norm, dva_x, dvm_x, ibus, temp):
    n = yp.size - 1
    visits = 0
    # sweep 1: injected current and the two column-scaled products
    for i in range(n):
        acc = 0j
        for k in range(yp[i], yp[i + 1]):
            visits += 1
            acc += yx[k] * v[yj[k]]
            dvm_x[k] = yx[k] * v_norm[yj[k]]
            dva_x[k] = yx[k] * v[yj[k]]
        ibus[i] = acc
        temp[i] = acc.conjugate() * v_norm[i]
    # sweep 2: row scaling, conjugation and the diagonal terms
    missing = -1
    for i in range(n):
        jvi = 1j * v[i]
        seen = False
        for k in range(yp[i], yp[i + 1]):
            visits += 1
            dvm_x[k] = dvm_x[k].conjugate() * v[i]
            if yj[k] == i:
                seen = True
                dvm_x[k] += temp[i]
                dva_x[k] = (ibus[i] - dva_x[k]).conjugate() * jvi
            else:
                dva_x[k] = -dva_x[k].conjugate() * jvi
        if not seen and missing < 0:
            missing = i
    return visits, missing


def fused_derivatives(y: ComplexCRS, state: VoltageState,
                      out: DerivativePair | None = None) -> DerivativePair:
    """Two sweeps over ``Y``'s stored entries yield both derivative data vectors.

    ``out`` may be passed to reuse buffers across Newton iterations.
    """
    _check(y, state)
    if out is None or out.dva_x.size != y.nnz or out.ibus.size != y.n_rows:
        out = DerivativePair.empty(y.nnz, y.n_rows)
    visits, missing = _fused(y.values, y.col_idx, y.row_ptr, state.v, state.v_norm,
                             out.dva_x, out.dvm_x, out.ibus, out.temp)
    if missing >= 0:
        raise CRSError(f"row {missing} of the admittance matrix has no diagonal slot")
    out.visits = int(visits)
    return out


# ---------------------------------------------------------------- generic
#
# Each primitive is one sweep over a matrix on Y's pattern and returns a
# fresh matrix (index arrays copied), as a general-purpose library would.

@njit(cache=True)
def _scale_cols(x, j, d):
    out = np.empty_like(x)
    for k in range(x.size):
        out[k] = x[k] * d[j[k]]
    return out


@njit(cache=True)
def _scale_rows(x, p, d):
    out = np.empty_like(x)
    for i in range(p.size - 1):
        for k in range(p[i], p[i + 1]):
            out[k] = d[i] * x[k]
    return out


@njit(cache=True)
def _conj(x):
    out = np.empty_like(x)
    for k in range(x.size):
        out[k] = x[k].conjugate()
    return out


@njit(cache=True)
def _add(x1, x2, sign):
    out = np.empty_like(x1)
    for k in range(x1.size):
        out[k] = x1[k] + sign * x2[k]
    return out


@njit(cache=True)
def _diag_on_pattern(j, p, d):
    out = np.zeros(j.size, dtype=np.complex128)
    for i in range(p.size - 1):
        for k in range(p[i], p[i + 1]):
            if j[k] == i:
                out[k] = d[i]
    return out


class _Generic:
    """Tiny sparse algebra over a single fixed pattern, counting visits."""

    def __init__(self, y: ComplexCRS):
        self.y = y
        self.visits = 0

    def _new(self, x):
        self.visits += x.size
        return ComplexCRS(self.y.n_rows, self.y.n_cols, x,
                          self.y.col_idx.copy(), self.y.row_ptr.copy())

    def diag(self, d):
        # d(x) embedded in the pattern of Y; needs the explicit diagonal
        return self._new(_diag_on_pattern(self.y.col_idx, self.y.row_ptr, d))

    def matvec(self, m, v):
        self.visits += m.nnz
        return crs_matvec(m, v)

    def scale_cols(self, m, d):
        return self._new(_scale_cols(m.values, m.col_idx, d))

    def scale_rows(self, d, m):
        return self._new(_scale_rows(m.values, m.row_ptr, d))

    def conj(self, m):
        return self._new(_conj(m.values))

    def add(self, a, b):
        return self._new(_add(a.values, b.values, 1.0))

    def sub(self, a, b):
        return self._new(_add(a.values, b.values, -1.0))


def generic_derivatives(y: ComplexCRS, state: VoltageState) -> DerivativePair:
    """Evaluate the derivative expressions with one sparse operation per step.

    Six products, two additions and three conjugations run over the pattern
    of ``Y``; embedding ``diag(I)`` adds one more sweep.
    """
    _check(y, state)
    rows_with_diag = np.zeros(y.n_rows, dtype=bool)
    r = np.repeat(np.arange(y.n_rows), np.diff(y.row_ptr))
    rows_with_diag[r[y.col_idx == r]] = True
    if not rows_with_diag.all():
        raise CRSError(
            f"row {int(np.argmin(rows_with_diag))} of the admittance matrix has no diagonal slot")

    g = _Generic(y)
    ibus = g.matvec(y, state.v)                                   # mult 1
    dI = g.diag(ibus)
    dvm = g.scale_rows(state.v, g.conj(g.scale_cols(y, state.v_norm)))  # mult 2, conj 1, mult 3
    dvm = g.add(dvm, g.scale_cols(g.conj(dI), state.v_norm))      # conj 2, mult 4, add 1
    dva = g.conj(g.sub(dI, g.scale_cols(y, state.v)))             # mult 5, add 2, conj 3
    dva = g.scale_rows(1j * state.v, dva)                         # mult 6
    pair = DerivativePair(dva.values.copy(), dvm.values.copy(), ibus,
                          np.conj(ibus) * state.v_norm, visits=g.visits)
    return pair


# ------------------------------------------------------------- injections

def complex_injections(y: ComplexCRS, state: VoltageState) -> np.ndarray:
    """``S = V * conj(Y V)``."""
    _check(y, state)
    return state.v * np.conj(crs_matvec(y, state.v))


@njit(cache=True)
def _polar(yx, yj, yp, vm, va):
    n = yp.size - 1
    p = np.zeros(n)
    q = np.zeros(n)
    for i in range(n):
        for k in range(yp[i], yp[i + 1]):
            c = yj[k]
            g = yx[k].real
            b = yx[k].imag
            th = va[i] - va[c]
            w = vm[i] * vm[c]
            p[i] += w * (g * np.cos(th) + b * np.sin(th))
            q[i] += w * (g * np.sin(th) - b * np.cos(th))
    return p, q


def polar_injections(y: ComplexCRS, vm, va) -> tuple[np.ndarray, np.ndarray]:
    """Active and reactive injections from the polar power-flow sums."""
    vm = np.asarray(vm, dtype=np.float64)
    va = np.asarray(va, dtype=np.float64)
    if vm.shape != (y.n_rows,) or va.shape != (y.n_rows,):
        raise CRSError("voltage vectors do not match the admittance matrix")
    return _polar(y.values, y.col_idx, y.row_ptr, vm, va)


def mismatch(s_calc, s_sched, idx: IndexSets) -> Mismatch:
    """Stack ``[dP over pvpq; dQ over pq]`` with ``dS = S_calc - S_sched``."""
    ds = np.asarray(s_calc) - np.asarray(s_sched)
    return Mismatch(np.concatenate([ds.real[idx.pvpq], ds.imag[idx.pq]]))
