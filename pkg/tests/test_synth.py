import numpy as np
import pytest
from scipy.sparse.csgraph import connected_components

from crsflow import BusType, build_ybus, crs_to_dense, newton_raphson, serialize_case_json, synth_grid
from crsflow.crs import crs_to_scipy


def test_deterministic():
    a = synth_grid(60, seed=7)
    b = synth_grid(60, seed=7)
    assert serialize_case_json(a) == serialize_case_json(b)
    assert serialize_case_json(a) != serialize_case_json(synth_grid(60, seed=8))


@pytest.mark.parametrize("n, seed", [(10, 0), (100, 1), (500, 2)])
def test_connected_and_solvable(n, seed):
    case = synth_grid(n, seed=seed)
    y = build_ybus(case)
    count, _ = connected_components(abs(crs_to_scipy(y)), directed=False)
    assert count == 1
    assert case.buses[0].btype is BusType.SLACK and case.slack == 0
    assert newton_raphson(case).converged


@pytest.mark.parametrize("deg", [2.0, 3.0, 4.0])
def test_nnz_close_to_target(deg):
    n = 1000
    y = build_ybus(synth_grid(n, avg_degree=deg, seed=0, check_solvable=False))
    target = n * (1 + deg)
    assert 0.8 * target <= y.nnz <= 1.2 * target


def test_pv_fraction():
    case = synth_grid(101, pv_fraction=0.3, seed=0, check_solvable=False)
    assert sum(b.btype is BusType.PV for b in case.buses) == 30


def test_parameter_ranges():
    case = synth_grid(200, seed=5, check_solvable=False)
    assert all(0.001 <= br.r <= 0.01 and 0.01 <= br.x <= 0.1 for br in case.branches)
    assert all(0.1 <= b.pd <= 1.0 and 0.1 <= b.qd <= 1.0 for b in case.buses)
    assert case.base_mva == 100


def test_symmetric_without_shunts():
    y = crs_to_dense(build_ybus(synth_grid(50, seed=1, check_solvable=False)))
    assert np.array_equal(y, y.T)


@pytest.mark.parametrize("kwargs", [dict(n_bus=1), dict(n_bus=10, avg_degree=0.5),
                                    dict(n_bus=10, pv_fraction=1.5)])
def test_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        synth_grid(**kwargs)
