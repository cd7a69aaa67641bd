"""Newton-Raphson power flow and the sparse direct linear solve."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import splu

from .caseio import BusType, Case, scheduled_power, validate_case
from .crs import RealCRS, crs_to_dense, crs_to_scipy
from .derivatives import (VoltageState, complex_injections, fused_derivatives,
                          generic_derivatives, mismatch)
from .jacobian import JacobianBuffer, create_jacobian_direct, create_jacobian_generic
from .network import build_ybus, bus_index_sets

__all__ = [
    "SingularMatrixError",
    "Init",
    "SolverPath",
    "SolveOptions",
    "PowerFlowResult",
    "lu_solve",
    "initial_state",
    "newton_raphson",
]

PHASES = ("derivatives", "jacobian", "linear_solve", "mismatch", "other")


class SingularMatrixError(np.linalg.LinAlgError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(message)


class Init(str, Enum):
    FLAT = "flat"
    FROM_CASE = "case"


class SolverPath(str, Enum):
    FUSED_DIRECT = "fused"
    GENERIC = "generic"


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-8
    max_iter: int = 10
    init: Init = Init.FLAT
    path: SolverPath = SolverPath.FUSED_DIRECT

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")


@dataclass
class PowerFlowResult:
    converged: bool
    iterations: int
    vm: np.ndarray
    va: np.ndarray  # radians
    max_mismatch: float
    timings: dict = field(default_factory=lambda: dict.fromkeys(PHASES, 0.0))
    visits: dict = field(default_factory=lambda: {"derivatives": 0, "jacobian": 0})
    mismatch_history: list = field(default_factory=list)
    jacobians: list | None = None


def _zero_pivot_row(j: RealCRS) -> int:
    """Locate the row a dense partial-pivoting LU fails on (diagnostics only)."""
    a = crs_to_dense(j)
    empty = np.flatnonzero(~a.any(axis=1))
    if empty.size:
        return int(empty[0])
    p, _, u = scipy.linalg.lu(a)
    d = np.abs(np.diag(u))
    k = int(np.argmin(d > np.finfo(float).eps * max(d.max(), 1.0) * a.shape[0]))
    return int(np.argmax(p[:, k]))


def lu_solve(j: RealCRS, rhs) -> np.ndarray:
    """Solve ``J x = rhs`` by sparse LU factorization.

    One round of iterative refinement is applied if the first residual
    misses ``1e-10 * max(1, |rhs|_inf)``.
    """
    rhs = np.asarray(rhs, dtype=np.float64)
    n = j.n_rows
    if j.n_cols != n:
        raise ValueError(f"matrix is not square: {j.shape}")
    if rhs.shape != (n,):
        raise ValueError(f"rhs has shape {rhs.shape}, expected {(n,)}")
    if n == 0:
        return np.zeros(0)
    a = crs_to_scipy(j).tocsc()
    try:
        lu = splu(a, permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as e:
        row = _zero_pivot_row(j)
        raise SingularMatrixError(f"singular matrix ({e}); zero pivot at row {row}", row) from None
    diag_u = np.abs(lu.U.diagonal())
    scale = max(float(np.abs(a.data).max(initial=0.0)), 1.0)
    bad = np.flatnonzero(~(diag_u > n * np.finfo(float).eps * scale))
    if bad.size:
        row = int(lu.perm_r.argsort()[bad[0]])
        raise SingularMatrixError(f"numerically singular matrix; zero pivot at row {row}", row)
    x = lu.solve(rhs)
    limit = 1e-10 * max(1.0, float(np.abs(rhs).max()))
    r = rhs - a @ x
    if np.abs(r).max() > limit:
        x = x + lu.solve(r)
        r = rhs - a @ x
    if not np.all(np.isfinite(x)) or np.abs(r).max() > limit:
        raise SingularMatrixError(
            f"ill-conditioned matrix: residual {np.abs(r).max():.3e} exceeds {limit:.3e}")
    return x


def initial_state(case: Case, init: Init = Init.FLAT) -> tuple[np.ndarray, np.ndarray]:
    """Starting magnitudes and angles (radians).

    PV and slack magnitudes take the setpoint of the first in-service
    generator at the bus; the slack angle always comes from the case.
    """
    if init is Init.FROM_CASE:
        vm = np.array([b.vm for b in case.buses], dtype=np.float64)
        va = np.deg2rad([b.va for b in case.buses])
    else:
        vm = np.ones(case.n_bus)
        va = np.zeros(case.n_bus)
    seen = set()
    for g in case.gens:
        i = case.bus_index[g.bus]
        if g.in_service and i not in seen and case.buses[i].btype is not BusType.PQ:
            vm[i] = g.vg
            seen.add(i)
    s = case.slack
    va[s] = np.deg2rad(case.buses[s].va)
    return vm, va


def newton_raphson(case: Case, opts: SolveOptions = SolveOptions(), *,
                   keep_jacobians: bool = False) -> PowerFlowResult:
    """Solve the AC power flow of ``case``.

    Non-convergence within ``opts.max_iter`` is reported through
    ``converged=False``; a singular Jacobian raises :class:`SingularMatrixError`.
    """
    clock = time.perf_counter
    t_start = clock()
    if case.bus_index is None:
        case = validate_case(case)
    y = build_ybus(case)
    idx = bus_index_sets(case)
    s_sched = scheduled_power(case)
    vm, va = initial_state(case, opts.init)
    fused = opts.path is SolverPath.FUSED_DIRECT

    res = PowerFlowResult(False, 0, vm, va, np.inf)
    if keep_jacobians:
        res.jacobians = []
    tm = res.timings
    work = None
    jbuf = JacobianBuffer(y.nnz, idx.n_unknowns) if fused else None
    it = 0
    while True:
        state = VoltageState.from_polar(vm, va)
        t0 = clock()
        f = mismatch(complex_injections(y, state), s_sched, idx)
        tm["mismatch"] += clock() - t0
        res.max_mismatch = f.max_abs
        res.mismatch_history.append(f.max_abs)
        if f.max_abs <= opts.tol:
            res.converged = True
            break
        if it >= opts.max_iter:
            break
        it += 1

        t0 = clock()
        if fused:
            work = fused_derivatives(y, state, out=work)
            visits = work.visits
        else:
            pair = generic_derivatives(y, state)
            dva, dvm = pair.as_crs(y)
            visits = pair.visits
        t1 = clock()
        stats: dict = {}
        if fused:
            jac = create_jacobian_direct(work, y, idx, stats, out=jbuf)
        else:
            jac = create_jacobian_generic(dva, dvm, idx, stats)
        t2 = clock()
        dx = lu_solve(jac, f.f)
        t3 = clock()
        tm["derivatives"] += t1 - t0
        tm["jacobian"] += t2 - t1
        tm["linear_solve"] += t3 - t2
        res.visits["derivatives"] += visits
        res.visits["jacobian"] += stats["visits"]
        if keep_jacobians:
            if fused:
                jac = RealCRS(jac.n_rows, jac.n_cols, jac.values.copy(),
                              jac.col_idx.copy(), jac.row_ptr.copy())
            res.jacobians.append((jac, f.f.copy(), dx))

        va = va.copy()
        vm = vm.copy()
        va[idx.pvpq] -= dx[:idx.n_pvpq]
        vm[idx.pq] -= dx[idx.n_pvpq:]

    res.iterations = it
    res.vm, res.va = vm, va
    total = clock() - t_start
    tm["other"] = max(total - sum(tm[p] for p in PHASES[:-1]), 0.0)
    return res
