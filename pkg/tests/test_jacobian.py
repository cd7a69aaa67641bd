import numpy as np
import pytest

from conftest import perturbed_grid, random_state
from crsflow import (CRSError, IndexSets, VoltageState, build_ybus, bus_index_sets,
                     create_jacobian_direct, create_jacobian_generic, crs_to_dense,
                     fused_derivatives, generic_derivatives)
from crsflow.jacobian import JacobianBuffer
from oracles import polar_jacobian


def both(case, state):
    y = build_ybus(case)
    idx = bus_index_sets(case)
    d = fused_derivatives(y, state)
    direct = create_jacobian_direct(d, y, idx)
    g = generic_derivatives(y, state)
    generic = create_jacobian_generic(*g.as_crs(y), idx)
    return y, idx, direct, generic


def test_two_bus_flat(twobus):
    state = VoltageState.from_polar(np.ones(2), np.zeros(2))
    _, _, j, jg = both(twobus, state)
    assert j.shape == (2, 2)
    assert np.allclose(crs_to_dense(j), [[9.9010, 0.9901], [-0.9901, 9.9010]], atol=1e-4)
    assert j == jg


def test_three_bus_layout(threebus):
    rng = np.random.default_rng(0)
    _, idx, j, jg = both(threebus, random_state(3, rng))
    assert j.shape == (3, 3) and idx.n_unknowns == 3
    assert j == jg


def test_no_pq_buses():
    from crsflow import synth_grid

    case = synth_grid(12, 3.0, pv_fraction=1.0, seed=2, check_solvable=False)
    rng = np.random.default_rng(0)
    y, idx, j, jg = both(case, random_state(12, rng))
    assert idx.n_pq == 0 and j.shape == (11, 11)
    assert j == jg


@pytest.mark.parametrize("seed", range(15))
def test_direct_equals_generic_and_dense(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 80))
    case = perturbed_grid(n, seed, pv_fraction=float(rng.uniform(0, 0.6)))
    state = random_state(n, rng)
    y, idx, j, jg = both(case, state)
    assert np.array_equal(j.col_idx, jg.col_idx) and np.array_equal(j.row_ptr, jg.row_ptr)
    assert np.abs(j.values - jg.values).max(initial=0) <= 1e-15
    ref = polar_jacobian(crs_to_dense(y), state.vm, state.va, idx.pv, idx.pq)
    assert np.abs(crs_to_dense(j) - ref).max() <= 1e-12 * np.abs(ref).max()


def test_rows_sorted_and_bounded(case118):
    rng = np.random.default_rng(4)
    y, _, j, _ = both(case118, random_state(118, rng))
    for i in range(j.n_rows):
        assert np.all(np.diff(j.row(i)[0]) > 0)
    assert j.nnz <= 4 * y.nnz
    assert j.stored_scalars == 2 * j.nnz + j.n_rows + 1


def test_visit_stats(case118):
    y = build_ybus(case118)
    idx = bus_index_sets(case118)
    d = fused_derivatives(y, VoltageState.from_polar(np.ones(118), np.zeros(118)))
    stats = {}
    create_jacobian_direct(d, y, idx, stats)
    assert stats["rows"] == idx.n_pvpq + idx.n_pq
    slack_row = y.row_ptr[case118.slack + 1] - y.row_ptr[case118.slack]
    pq_rows = sum(y.row_ptr[i + 1] - y.row_ptr[i] for i in idx.pq)
    assert stats["visits"] == 2 * (y.nnz - slack_row) + 2 * pq_rows


def test_buffer_reuse_gives_same_matrix(case118):
    y = build_ybus(case118)
    idx = bus_index_sets(case118)
    d = fused_derivatives(y, random_state(118, np.random.default_rng(0)))
    buf = JacobianBuffer(y.nnz, idx.n_unknowns)
    a = create_jacobian_direct(d, y, idx, out=buf)
    b = create_jacobian_direct(d, y, idx)
    assert a == b


def test_misaligned_derivatives_rejected(twobus, threebus):
    y2 = build_ybus(twobus)
    d3 = fused_derivatives(build_ybus(threebus), VoltageState.from_polar(np.ones(3), np.zeros(3)))
    with pytest.raises(CRSError):
        create_jacobian_direct(d3, y2, bus_index_sets(twobus))


def test_inconsistent_index_sets_rejected(threebus):
    y = build_ybus(threebus)
    d = fused_derivatives(y, VoltageState.from_polar(np.ones(3), np.zeros(3)))
    bad = IndexSets.from_sets([2], [1], 3)
    bad = IndexSets(bad.pv, bad.pq, np.array([1, 2]), bad.pvpq_lookup, bad.pq_lookup)
    with pytest.raises(CRSError):
        create_jacobian_direct(d, y, bad)
