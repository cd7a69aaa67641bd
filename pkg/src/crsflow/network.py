"""Bus admittance matrix and PV/PQ index sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .caseio import BusType, Case, CaseValidationError, validate_case
from .crs import ComplexCRS, crs_from_coo

__all__ = ["IndexSets", "build_ybus", "bus_index_sets"]


@dataclass(frozen=True, eq=False)
class IndexSets:
    """PV and PQ bus positions in the unknown vector.

    ``pvpq`` lists the PV block first, then the PQ block, each ascending.
    The lookups hold 0 for non-members; membership is always confirmed by
    ``pvpq[pvpq_lookup[b]] == b`` (resp. ``pq[pq_lookup[b]] == b``).
    """

    pv: np.ndarray
    pq: np.ndarray
    pvpq: np.ndarray
    pvpq_lookup: np.ndarray
    pq_lookup: np.ndarray

    @property
    def n_pv(self) -> int:
        return self.pv.size

    @property
    def n_pq(self) -> int:
        return self.pq.size

    @property
    def n_pvpq(self) -> int:
        return self.pvpq.size

    @property
    def n_unknowns(self) -> int:
        return self.n_pvpq + self.n_pq

    @classmethod
    def from_sets(cls, pv, pq, n_bus: int) -> "IndexSets":
        pv = np.sort(np.asarray(pv, dtype=np.int64))
        pq = np.sort(np.asarray(pq, dtype=np.int64))
        pvpq = np.concatenate([pv, pq])
        pvpq_lookup = np.zeros(n_bus, dtype=np.int64)
        pvpq_lookup[pvpq] = np.arange(pvpq.size)
        pq_lookup = np.zeros(n_bus, dtype=np.int64)
        pq_lookup[pq] = np.arange(pq.size)
        for a in (pv, pq, pvpq, pvpq_lookup, pq_lookup):
            a.flags.writeable = False
        return cls(pv, pq, pvpq, pvpq_lookup, pq_lookup)


def bus_index_sets(case: Case) -> IndexSets:
    pv = [i for i, b in enumerate(case.buses) if b.btype is BusType.PV]
    pq = [i for i, b in enumerate(case.buses) if b.btype is BusType.PQ]
    return IndexSets.from_sets(pv, pq, case.n_bus)


def build_ybus(case: Case) -> ComplexCRS:
    """Admittance matrix from the pi model of every in-service branch.

    Every diagonal slot is stored, even when its value is zero.
    """
    if case.bus_index is None:
        case = validate_case(case)
    idx = case.bus_index
    n = case.n_bus
    rows, cols, vals = [], [], []
    for k, br in enumerate(case.branches):
        if not br.in_service:
            continue
        z = complex(br.r, br.x)
        if z == 0:
            raise CaseValidationError(f"branch {k} has zero series impedance")
        ys = 1.0 / z
        ysh = 0.5j * br.b
        tau = br.tap * np.exp(1j * np.deg2rad(br.shift))
        f, t = idx[br.from_bus], idx[br.to_bus]
        rows += [f, t, f, t]
        cols += [f, t, t, f]
        vals += [(ys + ysh) / br.tap**2, ys + ysh, -ys / np.conj(tau), -ys / tau]
    for i, b in enumerate(case.buses):
        if b.gs or b.bs:
            rows.append(i)
            cols.append(i)
            vals.append(complex(b.gs, b.bs) / case.base_mva)
    return crs_from_coo(rows, cols, vals, n, n, keep_diagonal=True)
