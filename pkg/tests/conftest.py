from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from crsflow import load_case, synth_grid, validate_case

DATA = Path(__file__).parent / "data"
FIXTURES = ["twobus.json", "threebus.json", "case9.m", "case14.m", "case30.m", "case118.m"]


def fixture_path(name):
    return DATA / name


def perturbed_grid(n, seed, *, pv_fraction=0.3, avg_degree=3.0):
    """Synthetic grid with random taps, phase shifts, charging and shunts.

    Not guaranteed to be solvable; meant for kernel-level comparisons.
    """
    rng = np.random.default_rng(seed)
    case = synth_grid(n, avg_degree, pv_fraction, seed, check_solvable=False)
    branches = tuple(
        replace(br, b=float(rng.uniform(0, 0.05)),
                tap=float(rng.choice([1.0, rng.uniform(0.9, 1.1)])),
                shift=float(rng.choice([0.0, rng.uniform(-10, 10)])))
        for br in case.branches)
    buses = tuple(replace(b, gs=float(rng.choice([0.0, rng.uniform(0, 5)])),
                          bs=float(rng.choice([0.0, rng.uniform(-10, 10)])))
                  for b in case.buses)
    return validate_case(replace(case, buses=buses, branches=branches, bus_index=None))


def random_state(n, rng):
    from crsflow import VoltageState

    return VoltageState.from_polar(rng.uniform(0.9, 1.1, n), rng.uniform(-0.4, 0.4, n))


@pytest.fixture(scope="session")
def case118():
    return load_case(DATA / "case118.m")


@pytest.fixture(scope="session")
def twobus():
    return load_case(DATA / "twobus.json")


@pytest.fixture(scope="session")
def threebus():
    return load_case(DATA / "threebus.json")


@pytest.fixture(params=FIXTURES)
def any_fixture(request):
    return load_case(DATA / request.param)
