import numpy as np
import pytest

from ramanqed import (
    AmplitudeState,
    CouplingProfile,
    SystemParams,
    assemble_hamiltonian,
    build_continuum_grid,
    propagate_expm,
    ww_params,
)
from ramanqed.core import continuum_coupling

# default scenario in units of gamma: flat profile, 40 gamma band, 1600 modes
GAMMA = 1.0
OMEGA_P = 20.5
OMEGA_31 = 0.25


def default_params(n_atoms=2, omega_p=OMEGA_P, gamma=GAMMA):
    lam = continuum_coupling(gamma * n_atoms / 2, n_atoms)
    return SystemParams(omega_p, OMEGA_31, n_atoms, CouplingProfile.flat(lam))


def step_params(cut=10.0):
    """Flat coupling above omega_res - cut, switched off below (0.2-wide ramp).

    The missing lower band makes the principal-value shift negative.
    """
    lam = continuum_coupling(GAMMA, 2)
    res = OMEGA_P - OMEGA_31
    table = [(0.0, 0.0), (res - cut - 0.1, 0.0), (res - cut + 0.1, lam), (41.0, lam)]
    return SystemParams(OMEGA_P, OMEGA_31, 2, CouplingProfile.user_table(table))


@pytest.fixture(scope="session")
def params():
    return default_params()


@pytest.fixture(scope="session")
def grid(params):
    return build_continuum_grid(params, 40 * GAMMA, 1600)


@pytest.fixture(scope="session")
def ham(params, grid):
    return assemble_hamiltonian(params, grid)


@pytest.fixture(scope="session")
def ww(params, grid):
    return ww_params(params, grid)


@pytest.fixture(scope="session")
def times():
    return np.linspace(0, 5 / GAMMA, 501)


@pytest.fixture(scope="session")
def expm_traj(ham, grid, times):
    return propagate_expm(ham, AmplitudeState.initial(grid.n_modes), times)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.VERDICTS, key=lambda l: int(l.split("criterion ")[1].split(":")[0])):
        terminalreporter.write_line(line)
