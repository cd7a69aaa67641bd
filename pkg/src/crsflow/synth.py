"""Random connected test grids for scaling studies."""

from __future__ import annotations

import math

import numpy as np

from .caseio import Branch, Bus, BusType, Case, Gen, validate_case

__all__ = ["synth_grid"]

_MAX_RETRIES = 5


def _edges(n: int, avg_degree: float, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Random spanning tree plus random extra edges over a planar-ish layout.

    Buses sit on a square lattice in random order.  Candidate edges join
    lattice neighbours (including diagonals); a random spanning tree is
    drawn from them first, then further candidates are added until the
    target average degree is met.  Local edges keep the diameter near
    ``2 sqrt(n)`` and LU fill-in low, as in real transmission grids.
    """
    cols = int(math.ceil(math.sqrt(n)))
    bus_at = rng.permutation(n)
    cand = []
    for p in range(n):
        r, c = divmod(p, cols)
        for q in (p + 1 if c + 1 < cols else -1, p + cols,
                  p + cols + 1 if c + 1 < cols else -1, p + cols - 1 if c > 0 else -1):
            if 0 <= q < n:
                cand.append((p, q))
    cand = [cand[k] for k in rng.permutation(len(cand))]

    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    tree, rest = [], []
    for p, q in cand:
        a, b = find(p), find(q)
        if a != b:
            parent[a] = b
            tree.append((p, q))
        else:
            rest.append((p, q))
    target = max(int(round(avg_degree * n / 2)), n - 1)
    chosen = tree + rest[:max(target - len(tree), 0)]
    edges = {(min(bus_at[p], bus_at[q]), max(bus_at[p], bus_at[q])) for p, q in chosen}
    return sorted((int(a), int(b)) for a, b in edges)


def _build(n, edges, pv, load, gen_p, r, x, scale, base_mva=100.0) -> Case:
    buses, gens = [], []
    for i in range(n):
        btype = BusType.SLACK if i == 0 else (BusType.PV if pv[i] else BusType.PQ)
        pd = float(load[i, 0] * scale)
        qd = float(load[i, 1] * scale)
        buses.append(Bus(id=i + 1, btype=btype, pd=pd, qd=qd))
        if btype is BusType.SLACK:
            gens.append(Gen(bus=i + 1, vg=1.0))
        elif btype is BusType.PV:
            gens.append(Gen(bus=i + 1, pg=float(gen_p[i] * scale), vg=1.0))
    branches = [Branch(from_bus=a + 1, to_bus=b + 1, r=float(r[k]), x=float(x[k]))
                for k, (a, b) in enumerate(edges)]
    return validate_case(Case(base_mva, tuple(buses), tuple(gens), tuple(branches)))


def synth_grid(n_bus: int, avg_degree: float = 3.0, pv_fraction: float = 0.2,
               seed: int = 0, *, check_solvable: bool = True) -> Case:
    """Connected random grid with bus 1 as slack.

    Loads are drawn in [0.1, 1.0] MW/MVAr per bus on a 100 MVA base, PV
    generators in the same range.  With ``check_solvable`` the case is
    solved once from a flat start and, on failure, loads are cut by 20 %
    (at most five times).
    """
    if n_bus < 2:
        raise ValueError(f"n_bus must be at least 2, got {n_bus}")
    if not avg_degree >= 1:
        raise ValueError(f"avg_degree must be at least 1, got {avg_degree}")
    if not 0 <= pv_fraction <= 1:
        raise ValueError(f"pv_fraction must lie in [0, 1], got {pv_fraction}")
    rng = np.random.default_rng(seed)
    edges = _edges(n_bus, avg_degree, rng)
    n_pv = int(round(pv_fraction * (n_bus - 1)))
    pv = np.zeros(n_bus, dtype=bool)
    pv[1 + rng.choice(n_bus - 1, size=n_pv, replace=False)] = True
    load = rng.uniform(0.1, 1.0, size=(n_bus, 2))
    gen_p = rng.uniform(0.1, 1.0, size=n_bus)
    r = rng.uniform(0.001, 0.01, size=len(edges))
    x = rng.uniform(0.01, 0.1, size=len(edges))

    scale = 1.0
    case = _build(n_bus, edges, pv, load, gen_p, r, x, scale)
    if not check_solvable:
        return case
    from .solver import SingularMatrixError, SolveOptions, newton_raphson

    for _ in range(_MAX_RETRIES + 1):
        try:
            if newton_raphson(case, SolveOptions(max_iter=20)).converged:
                return case
        except SingularMatrixError:
            pass
        scale *= 0.8
        case = _build(n_bus, edges, pv, load, gen_p, r, x, scale)
    raise RuntimeError(f"synthetic grid (n={n_bus}, seed={seed}) did not converge")
