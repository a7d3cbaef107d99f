import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import default_params
from oracles import full_three_level
from ramanqed import (
    AmplitudeState,
    CouplingProfile,
    FullParams,
    FullState,
    ModeGrid,
    adiabaticity_report,
    assemble_full_hamiltonian,
    build_continuum_grid,
    effective_coupling,
    propagate_expm,
)
from ramanqed.full_model import AdiabaticRegimeWarning, coupling_ratio, effective_system, stark_corrected_hamiltonian
from ramanqed.errors import InvalidArgument


def toy_grid(m, start=6.0, spacing=0.5):
    freqs = start + spacing * np.arange(m)
    return ModeGrid(freqs, np.zeros(m), spacing)


def table_profile(grid, values):
    pts = [(grid.frequencies[0] - 1, 0.0)] + list(zip(grid.frequencies, values))
    return CouplingProfile.user_table(pts + [(grid.frequencies[-1] + 1, 0.0)])


@pytest.mark.parametrize("n_atoms,m", [(2, 1), (2, 2), (2, 3), (3, 1)])
def test_matrix_matches_tensor_oracle(n_atoms, m):
    grid = toy_grid(m)
    gs = [0.07, 0.11, 0.05][:m]
    fp = FullParams(0.13, table_profile(grid, gs), 1.7, 10.0, 3.0, n_atoms)
    h = assemble_full_hamiltonian(fp, grid)
    big, basis = full_three_level(n_atoms, 10.0, 1.7, 3.0, 0.13, grid.frequencies, gs)
    projected = basis.T @ big @ basis
    np.testing.assert_allclose(basis.T @ basis, np.eye(m + 2), rtol=0, atol=1e-15)
    # identical zero pattern, nonzero entries equal up to round-off
    assert np.array_equal(h.entries == 0, np.abs(projected) < 1e-15)
    np.testing.assert_allclose(h.entries, projected, rtol=1e-15, atol=1e-15)
    # sector closure: the symmetric basis spans an invariant subspace
    np.testing.assert_allclose(big @ basis, basis @ projected, rtol=0, atol=1e-14)


def test_no_direct_pump_stokes_element():
    grid = toy_grid(3)
    fp = FullParams(0.1, CouplingProfile.flat(0.2), 5.0, 10.0, 3.0)
    h = assemble_full_hamiltonian(fp, grid)
    assert np.all(h.entries[0, 2:] == 0)
    assert h.entries[0, 1] == pytest.approx(0.1 * math.sqrt(2), abs=1e-16)
    assert h.layout == "full" and h.stokes_slice() == slice(2, 5)


def test_two_level_rabi_without_stokes():
    n, g_p, d2 = 2, 0.3, 0.8
    grid = toy_grid(2)
    fp = FullParams(g_p, CouplingProfile.flat(0.0), d2, 10.0, 3.0, n)
    h = assemble_full_hamiltonian(fp, grid)
    t = np.linspace(0, 30, 301)
    traj = propagate_expm(h, FullState.initial(2), t)
    omega2 = n * g_p**2
    rabi = math.sqrt(omega2 + d2**2 / 4)
    expected = 1 - omega2 / rabi**2 * np.sin(rabi * t) ** 2
    np.testing.assert_allclose(np.abs(traj.c0) ** 2, expected, atol=1e-13)
    assert np.all(traj.stokes == 0)


def test_zero_pump_coupling_stays_put():
    grid = toy_grid(3)
    fp = FullParams(0.0, CouplingProfile.flat(0.2), 5.0, 10.0, 3.0)
    traj = propagate_expm(assemble_full_hamiltonian(fp, grid), FullState.initial(3), np.linspace(0, 50, 11))
    np.testing.assert_allclose(np.abs(traj.c0), 1.0, atol=1e-15)


def test_effective_coupling_examples():
    fp = FullParams(0.1, CouplingProfile.flat(0.1), 10.0, 10.0, 3.0)
    assert effective_coupling(fp, 7.0) == pytest.approx(0.001, rel=1e-14)
    half = FullParams(0.1, CouplingProfile.flat(0.1), 5.0, 10.0, 3.0)
    assert effective_coupling(half, 7.0) == pytest.approx(2 * effective_coupling(fp, 7.0), rel=1e-14)
    neg = FullParams(0.1, CouplingProfile.flat(0.1), -10.0, 10.0, 3.0)
    assert effective_coupling(neg, 7.0) < 0
    zero = FullParams(0.0, CouplingProfile.flat(0.1), 10.0, 10.0, 3.0)
    assert effective_coupling(zero, 7.0) == 0
    with pytest.raises(InvalidArgument):
        effective_coupling(FullParams(0.1, CouplingProfile.flat(0.1), 0.0, 10.0, 3.0), 7.0)


def test_effective_system_uses_magnitude():
    grid = toy_grid(3)
    fp = FullParams(0.1, CouplingProfile.flat(0.1), -10.0, 10.0, 3.0)
    params, eff = effective_system(fp, grid)
    np.testing.assert_allclose(eff.couplings, 0.001, rtol=1e-14)
    assert params.omega_p == 10.0


def test_stark_shifts():
    grid = toy_grid(3)
    fp = FullParams(0.1, CouplingProfile.flat(0.2), 4.0, 10.0, 3.0)
    h = stark_corrected_hamiltonian(fp, grid)
    assert h.entries[0, 0] == pytest.approx(10.0 - 2 * 0.01 / 4.0, abs=1e-15)
    np.testing.assert_allclose(np.diag(h.entries)[1:], grid.frequencies + 3.0 - 0.04 / 4.0, atol=1e-15)


def test_from_effective_reproduces_coupling():
    params = default_params()
    grid = build_continuum_grid(params, 20, 400)
    scale = math.sqrt(grid.spacing)
    for r in (0.1, 0.01):
        fp = FullParams.from_effective(params, r, coupling_scale=scale)
        np.testing.assert_allclose(effective_coupling(fp, grid.frequencies), grid.couplings, rtol=1e-13)
        assert coupling_ratio(fp, grid) == pytest.approx(r, rel=1e-13)
        assert fp.detuning2 == pytest.approx(2.5 / r**2, rel=1e-14)
    with pytest.raises(InvalidArgument):
        FullParams.from_effective(params, 0.0)


def test_is_adiabatic_flag():
    grid = toy_grid(2)
    assert FullParams(0.1, CouplingProfile.flat(0.1), 1.0, 10.0, 3.0).is_adiabatic(grid)
    assert not FullParams(0.1, CouplingProfile.flat(0.2), 1.0, 10.0, 3.0).is_adiabatic(grid)


def _ladder_report(ratio, n_modes=400, bandwidth=20):
    params = default_params()
    grid = build_continuum_grid(params, bandwidth, n_modes)
    fp = FullParams.from_effective(params, ratio, coupling_scale=math.sqrt(grid.spacing))
    t = np.linspace(0, 5, 251)
    full = propagate_expm(assemble_full_hamiltonian(fp, grid), FullState.initial(n_modes), t)
    eff = propagate_expm(stark_corrected_hamiltonian(fp, grid), AmplitudeState.initial(n_modes), t)
    return adiabaticity_report(full, eff, fp, grid), full, eff


@pytest.fixture(scope="module")
def ladder():
    return {r: _ladder_report(r)[0] for r in (0.1, 0.03, 0.01)}


def test_small_ratio_passes(ladder):
    rep = ladder[0.01]
    assert rep.max_intermediate_population <= 4e-4
    assert rep.passed


def test_ladder_discrepancy_decreases(ladder):
    d = [ladder[r].max_population_discrepancy for r in (0.1, 0.03, 0.01)]
    assert d[0] > d[1] > d[2]
    for r, rep in ladder.items():
        assert rep.intermediate_ok
        # transient level-2 population is of order ratio**2
        assert rep.mean_intermediate_population < 4 * r * r


def test_large_ratio_fails_thresholds():
    with pytest.warns(AdiabaticRegimeWarning):
        rep, _, _ = _ladder_report(0.3, n_modes=200)
    assert not rep.regime_ok and not rep.passed
    d = rep.to_dict()
    assert d["passed"] is False and d["coupling_ratio"] == pytest.approx(0.3)


def test_zero_coupling_report():
    grid = toy_grid(3)
    fp = FullParams(0.0, CouplingProfile.flat(0.0), 5.0, 10.0, 3.0)
    t = np.linspace(0, 5, 11)
    full = propagate_expm(assemble_full_hamiltonian(fp, grid), FullState.initial(3), t)
    eff = propagate_expm(stark_corrected_hamiltonian(fp, grid), AmplitudeState.initial(3), t)
    rep = adiabaticity_report(full, eff, fp, grid)
    assert rep.max_population_discrepancy == 0 and rep.max_intermediate_population == 0


def test_report_time_mismatch():
    grid = toy_grid(3)
    fp = FullParams(0.1, CouplingProfile.flat(0.1), 5.0, 10.0, 3.0)
    full = propagate_expm(assemble_full_hamiltonian(fp, grid), FullState.initial(3), [0, 1, 2])
    eff = propagate_expm(stark_corrected_hamiltonian(fp, grid), AmplitudeState.initial(3), [0, 1, 3])
    with pytest.raises(InvalidArgument):
        adiabaticity_report(full, eff, fp, grid)
    with pytest.raises(InvalidArgument):
        adiabaticity_report(eff, eff, fp, grid)


@settings(max_examples=20, deadline=None)
@given(
    g_p=st.floats(0.0, 1.0),
    g_s=st.floats(0.0, 1.0),
    d2=st.floats(-20.0, 20.0),
    m=st.integers(1, 6),
)
def test_full_norm_conserved(g_p, g_s, d2, m):
    grid = toy_grid(m)
    fp = FullParams(g_p, CouplingProfile.flat(g_s), d2, 10.0, 3.0)
    traj = propagate_expm(assemble_full_hamiltonian(fp, grid), FullState.initial(m), np.linspace(0, 20, 9))
    assert np.max(np.abs(traj.norms - 1)) < 1e-12
