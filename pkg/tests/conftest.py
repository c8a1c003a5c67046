"""Shared fixtures: grids, reference profiles, seeded random fields."""

import json
import math
import pathlib

import numpy as np
import pytest

from nlslab.grid import RadialGrid, RadialField

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


def load_fixture(name: str):
    with open(FIXTURES / name) as fh:
        return json.load(fh)


def sobolev_bubble(grid: RadialGrid) -> RadialField:
    """Closed-form critical profile (d = 4): 2*sqrt(2) / (1 + r^2)."""
    assert grid.d == 4
    return grid.field(2.0 * math.sqrt(2.0) / (1.0 + grid.r**2))


def smooth_field(grid: RadialGrid, rng: np.random.Generator,
                 complex_: bool = False, scale: float = 1.0) -> RadialField:
    """Random decaying superposition of Gaussian bumps; H^1-regular."""
    def bumps():
        out = np.zeros(grid.n)
        for _ in range(4):
            amp = rng.uniform(-1.0, 1.0)
            center = rng.uniform(0.0, grid.r_max / 4.0)
            width = rng.uniform(0.8, 3.0)
            out += amp * np.exp(-((grid.r - center) / width) ** 2)
        return out * np.exp(-(grid.r / (grid.r_max / 3.0)) ** 2)

    vals = bumps().astype(np.complex128) + 1j * bumps() if complex_ else bumps()
    return grid.field(scale * vals)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def grid_default():
    return RadialGrid(4, 4096, 40.0)


@pytest.fixture(scope="session")
def grid_coarse():
    return RadialGrid(4, 1024, 40.0)


@pytest.fixture(scope="session")
def params_default():
    from nlslab.functionals import ModelParams
    return ModelParams(4, 2.5, 0.05)


@pytest.fixture(scope="session")
def gs_family(grid_default, params_default):
    """Ground states on the default grid keyed by omega, with derivatives."""
    from nlslab.groundstate import solve_phi
    return {w: solve_phi(grid_default, params_default.with_omega(w))
            for w in (0.02, 0.05, 0.1, 0.2)}


@pytest.fixture(scope="session")
def gs05(gs_family):
    return gs_family[0.05]


@pytest.fixture(scope="session")
def subcritical_default(grid_default, params_default):
    from nlslab.groundstate import solve_U
    return solve_U(grid_default, params_default)


@pytest.fixture(scope="session")
def ops05(specdata_family):
    return specdata_family[0.05][0]


@pytest.fixture(scope="session")
def specdata05(specdata_family):
    return specdata_family[0.05][1]


@pytest.fixture(scope="session")
def specdata_family(gs_family):
    """(ops, spec) pairs on the default grid keyed by omega."""
    from nlslab.spectrum import assemble_operators, solve_mu
    out = {}
    for w in (0.02, 0.05, 0.1):
        ops = assemble_operators(gs_family[w])
        out[w] = (ops, solve_mu(ops, gs_family[w]))
    return out


@pytest.fixture(scope="session")
def cfg05(gs05, specdata05):
    """Calibrated distance cutoff for the default model."""
    from nlslab.modes import calibrate_delta_E
    return calibrate_delta_E(gs05, specdata05)


@pytest.fixture(scope="session")
def mcurve05(grid_default, params_default):
    """Action/mass curve bracketing omega = 0.05 on both sides."""
    from nlslab.groundstate import build_mcurve
    return build_mcurve(grid_default, params_default,
                        [0.03, 0.04, 0.05, 0.065, 0.08, 0.1, 0.12])


@pytest.fixture(scope="session")
def table05(mcurve05, cfg05):
    from nlslab.classify import build_threshold_table
    return build_threshold_table(mcurve05, 0.05, 0.10, delta_E=cfg05.delta_E)


@pytest.fixture(scope="session")
def clscfg05(gs05, specdata05, cfg05, table05):
    from nlslab.classify import ClassifyConfig
    return ClassifyConfig(gs=gs05, spec=specdata05, dist=cfg05, table=table05)
