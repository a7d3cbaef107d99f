"""Two three-level atoms, one cavity photon, one Stokes photon.

Simulates the Raman-type exchange that leaves the atoms in a long-lived
entangled state heralded by the emitted Stokes photon, and checks the
closed-form Wigner-Weisskopf solution against direct integration.
"""

from .analytic import (
    WWParams,
    closed_form_state,
    closed_form_trajectory,
    decay_rate,
    frequency_shift,
    steady_amplitude,
    ww_params,
)
from .core import (
    CouplingProfile,
    GridDiagnostics,
    ModeGrid,
    SystemParams,
    build_continuum_grid,
    build_mode_grid,
    coupling_at,
    rb85_params,
    validate_grid,
)
from .dynamics import (
    AmplitudeState,
    HamiltonianMatrix,
    Trajectory,
    assemble_hamiltonian,
    derivative,
    propagate_expm,
    propagate_rk4,
    to_lab_frame,
    to_rotating_frame,
)
from .full_model import (
    AdiabaticityReport,
    FullParams,
    FullState,
    adiabaticity_report,
    assemble_full_hamiltonian,
    effective_coupling,
    stark_corrected_hamiltonian,
)
from .observables import (
    DensityMatrix,
    SpectrumSeries,
    concurrence,
    conditional_density,
    fit_exponential,
    fit_lorentzian,
    populations,
    reduced_atomic_density,
    stokes_spectrum,
)

__version__ = "0.1.0"

__all__ = [
    "WWParams",
    "closed_form_state",
    "closed_form_trajectory",
    "decay_rate",
    "frequency_shift",
    "steady_amplitude",
    "ww_params",
    "CouplingProfile",
    "GridDiagnostics",
    "ModeGrid",
    "SystemParams",
    "build_continuum_grid",
    "build_mode_grid",
    "coupling_at",
    "rb85_params",
    "validate_grid",
    "AmplitudeState",
    "HamiltonianMatrix",
    "Trajectory",
    "assemble_hamiltonian",
    "derivative",
    "propagate_expm",
    "propagate_rk4",
    "to_lab_frame",
    "to_rotating_frame",
    "AdiabaticityReport",
    "FullParams",
    "FullState",
    "adiabaticity_report",
    "assemble_full_hamiltonian",
    "effective_coupling",
    "stark_corrected_hamiltonian",
    "DensityMatrix",
    "SpectrumSeries",
    "concurrence",
    "conditional_density",
    "fit_exponential",
    "fit_lorentzian",
    "populations",
    "reduced_atomic_density",
    "stokes_spectrum",
]
