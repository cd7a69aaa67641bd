"""Dense reference implementations used only by the tests.

Nothing here calls into the sparse kernels: the admittance matrix is
assembled densely from branch data, injections and the Jacobian use the
textbook polar sums, and linear systems go through ``numpy.linalg``.
"""

import numpy as np

from crsflow.caseio import BusType


def dense_ybus(case):
    n = case.n_bus
    pos = {b.id: i for i, b in enumerate(case.buses)}
    y = np.zeros((n, n), dtype=complex)
    for br in case.branches:
        if not br.in_service:
            continue
        f, t = pos[br.from_bus], pos[br.to_bus]
        ys = 1 / complex(br.r, br.x)
        a = br.tap * np.exp(1j * br.shift * np.pi / 180)
        y[f, f] += (ys + 1j * br.b / 2) / abs(a) ** 2
        y[t, t] += ys + 1j * br.b / 2
        y[f, t] -= ys / a.conjugate()
        y[t, f] -= ys / a
    for i, b in enumerate(case.buses):
        y[i, i] += complex(b.gs, b.bs) / case.base_mva
    return y


def dense_derivatives(y, v):
    """dS/dVm and dS/dVa as dense matrices (complex diagonal-matrix form)."""
    vnorm = v / np.abs(v)
    i = y @ v
    dvm = np.diag(v) @ np.conj(y @ np.diag(vnorm)) + np.conj(np.diag(i)) @ np.diag(vnorm)
    dva = 1j * np.diag(v) @ np.conj(np.diag(i) - y @ np.diag(v))
    return dva, dvm


def polar_pq(y, vm, va):
    g, b = y.real, y.imag
    th = va[:, None] - va[None, :]
    w = vm[:, None] * vm[None, :]
    p = (w * (g * np.cos(th) + b * np.sin(th))).sum(axis=1)
    q = (w * (g * np.sin(th) - b * np.cos(th))).sum(axis=1)
    return p, q


def polar_jacobian(y, vm, va, pv, pq):
    """Jacobian of [P over pvpq; Q over pq] w.r.t. [va over pvpq; vm over pq]."""
    g, b = y.real, y.imag
    n = len(vm)
    p, q = polar_pq(y, vm, va)
    dp_da = np.zeros((n, n)); dp_dv = np.zeros((n, n))
    dq_da = np.zeros((n, n)); dq_dv = np.zeros((n, n))
    for i in range(n):
        for k in range(n):
            th = va[i] - va[k]
            c, s = np.cos(th), np.sin(th)
            if i != k:
                dp_da[i, k] = vm[i] * vm[k] * (g[i, k] * s - b[i, k] * c)
                dq_da[i, k] = -vm[i] * vm[k] * (g[i, k] * c + b[i, k] * s)
                dp_dv[i, k] = vm[i] * (g[i, k] * c + b[i, k] * s)
                dq_dv[i, k] = vm[i] * (g[i, k] * s - b[i, k] * c)
        dp_da[i, i] = -q[i] - b[i, i] * vm[i] ** 2
        dq_da[i, i] = p[i] - g[i, i] * vm[i] ** 2
        dp_dv[i, i] = p[i] / vm[i] + g[i, i] * vm[i]
        dq_dv[i, i] = q[i] / vm[i] - b[i, i] * vm[i]
    pvpq = np.r_[pv, pq]
    return np.block([
        [dp_da[np.ix_(pvpq, pvpq)], dp_dv[np.ix_(pvpq, pq)]],
        [dq_da[np.ix_(pq, pvpq)], dq_dv[np.ix_(pq, pq)]],
    ])


def dense_newton(case, tol=1e-12, max_iter=30):
    """Plain dense polar Newton-Raphson from a flat start.

    Returns ``(vm, va, iterations)``; raises if it does not converge.
    """
    n = case.n_bus
    pos = {b.id: i for i, b in enumerate(case.buses)}
    y = dense_ybus(case)
    pv = np.array([i for i, b in enumerate(case.buses) if b.btype is BusType.PV], dtype=int)
    pq = np.array([i for i, b in enumerate(case.buses) if b.btype is BusType.PQ], dtype=int)
    slack = [i for i, b in enumerate(case.buses) if b.btype is BusType.SLACK][0]
    p_s = np.array([-b.pd for b in case.buses], dtype=float)
    q_s = np.array([-b.qd for b in case.buses], dtype=float)
    vm = np.ones(n)
    va = np.zeros(n)
    done = set()
    for gen in case.gens:
        if not gen.in_service:
            continue
        i = pos[gen.bus]
        p_s[i] += gen.pg
        q_s[i] += gen.qg
        if case.buses[i].btype is not BusType.PQ and i not in done:
            vm[i] = gen.vg
            done.add(i)
    p_s /= case.base_mva
    q_s /= case.base_mva
    va[slack] = np.deg2rad(case.buses[slack].va)
    pvpq = np.r_[pv, pq]
    for it in range(max_iter + 1):
        p, q = polar_pq(y, vm, va)
        f = np.r_[p[pvpq] - p_s[pvpq], q[pq] - q_s[pq]]
        if f.size == 0 or np.abs(f).max() <= tol:
            return vm, va, it
        dx = np.linalg.solve(polar_jacobian(y, vm, va, pv, pq), f)
        va[pvpq] -= dx[:pvpq.size]
        vm[pq] -= dx[pvpq.size:]
    raise RuntimeError("dense Newton oracle did not converge")


def gauss_solve(a, b):
    """Gaussian elimination with partial pivoting, written out longhand."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    n = len(b)
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        a[[k, p]] = a[[p, k]]
        b[[k, p]] = b[[p, k]]
        for i in range(k + 1, n):
            m = a[i, k] / a[k, k]
            a[i, k:] -= m * a[k, k:]
            b[i] -= m * b[k]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - a[i, i + 1:] @ x[i + 1:]) / a[i, i]
    return x
