"""Three-level model with the intermediate level kept explicitly.

Symmetric single-excitation basis: ``psi0`` (pump photon, atoms in 1),
``psi1`` (pump absorbed, one atom shared in level 2), ``psi_k`` (one atom
shared in level 3, Stokes photon in mode k).  Used to check when level 2 can
be eliminated in favor of the effective two-photon coupling.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import CouplingProfile, ModeGrid, SystemParams
from .dynamics import MAX_DIM, HamiltonianMatrix, Trajectory, assemble_hamiltonian
from .errors import InvalidArgument, TooLarge

ADIABATIC_MARGIN = 10.0


class AdiabaticRegimeWarning(UserWarning):
    """Coupling ratio above 1/ADIABATIC_MARGIN: elimination is not expected to hold."""


@dataclass(frozen=True)
class FullParams:
    """Single-photon couplings and the detuning of level 2.

    ``detuning2`` is E2 - E1 - omega_p.  ``g_s_profile`` gives the per-mode
    Stokes couplings g_Sk on the 2<->3 transition.
    """

    g_p: float
    g_s_profile: CouplingProfile
    detuning2: float
    omega_p: float
    omega_31: float
    n_atoms: int = 2

    def __post_init__(self):
        if not self.g_p >= 0:
            raise InvalidArgument("g_p must be >= 0")
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 2:
            raise InvalidArgument("n_atoms must be an integer >= 2")
        # reuse the SystemParams checks on the shared fields
        self.system()

    @classmethod
    def from_effective(
        cls,
        params: SystemParams,
        ratio: float,
        stark_shift: float = 2.5,
        coupling_scale: float = 1.0,
    ) -> "FullParams":
        """Full-model parameters whose eliminated coupling reproduces ``params``.

        The collective pump element is ``stark_shift / ratio`` and
        ``detuning2 = stark_shift / ratio**2``, so the pump light shift stays
        fixed at ``stark_shift`` while ``sqrt(N) g_p / detuning2 = ratio``.
        The Stokes profile is chosen so that g_p g_S / detuning2 equals
        ``coupling_scale`` times the effective profile (pass sqrt(spacing)
        for continuum-normalized grids).
        """
        if not ratio > 0:
            raise InvalidArgument("ratio must be > 0")
        if not stark_shift > 0:
            raise InvalidArgument("stark_shift must be > 0")
        detuning2 = stark_shift / ratio**2
        g_p = stark_shift / ratio / math.sqrt(params.n_atoms)
        profile = params.coupling_profile.scaled(coupling_scale * detuning2 / g_p)
        return cls(g_p, profile, detuning2, params.omega_p, params.omega_31, params.n_atoms)

    @property
    def collective_pump_coupling(self) -> float:
        return math.sqrt(self.n_atoms) * self.g_p

    def system(self, profile: CouplingProfile | None = None) -> SystemParams:
        return SystemParams(
            self.omega_p,
            self.omega_31,
            self.n_atoms,
            profile if profile is not None else CouplingProfile.flat(0.0),
        )

    def stokes_couplings(self, grid: ModeGrid) -> np.ndarray:
        return self.g_s_profile.evaluate(grid.frequencies)

    def is_adiabatic(self, grid: ModeGrid) -> bool:
        """|detuning2| >= 10 max(g_p, max g_Sk)."""
        g = max(self.g_p, float(np.max(self.stokes_couplings(grid))))
        return abs(self.detuning2) >= ADIABATIC_MARGIN * g


@dataclass(frozen=True, eq=False)
class FullState:
    time: float
    b0: complex
    b1: complex
    bk: np.ndarray
    frame: str = "lab"

    def __post_init__(self):
        object.__setattr__(self, "b0", complex(self.b0))
        object.__setattr__(self, "b1", complex(self.b1))
        object.__setattr__(self, "bk", np.asarray(self.bk, dtype=complex).ravel())

    @classmethod
    def initial(cls, n_modes: int, time: float = 0.0):
        return cls(time, 1.0, 0.0, np.zeros(n_modes, complex))

    @property
    def norm_sq(self) -> float:
        return float(abs(self.b0) ** 2 + abs(self.b1) ** 2 + np.sum(np.abs(self.bk) ** 2))

    def vector(self) -> np.ndarray:
        return np.concatenate(([self.b0, self.b1], self.bk))


def assemble_full_hamiltonian(fp: FullParams, grid: ModeGrid, max_dim: int = MAX_DIM) -> HamiltonianMatrix:
    """Hamiltonian over (psi0, psi1, psi_k...).

    Diagonal: omega_p, omega_p + detuning2, omega_k + omega_31.  The pump
    absorption element <psi1|H|psi0> is sqrt(N) g_p; the Stokes emission
    element <psi_k|H|psi1> is g_Sk with no collective factor.  psi0 and psi_k
    are not coupled directly.
    """
    n = grid.n_modes
    dim = n + 2
    if dim > max_dim:
        raise TooLarge(f"Hamiltonian dimension {dim} exceeds max_dim={max_dim}")
    h = np.zeros((dim, dim))
    h[0, 0] = fp.omega_p
    h[1, 1] = fp.omega_p + fp.detuning2
    h[np.arange(2, dim), np.arange(2, dim)] = grid.frequencies + fp.omega_31
    h[0, 1] = h[1, 0] = fp.collective_pump_coupling
    gs = fp.stokes_couplings(grid)
    h[1, 2:] = gs
    h[2:, 1] = gs
    labels = ("psi0", "psi1") + tuple(f"psi_k[{i}]" for i in range(n))
    return HamiltonianMatrix(h, labels, n, "full")


def effective_coupling(fp: FullParams, omega_k):
    """Two-photon coupling g_p g_S(omega_k) / detuning2 after eliminating level 2."""
    if fp.detuning2 == 0:
        raise InvalidArgument("detuning2 = 0: level 2 is resonant and cannot be eliminated")
    g_s = fp.g_s_profile.evaluate(omega_k)
    lam = fp.g_p * g_s / fp.detuning2
    return float(lam) if np.ndim(lam) == 0 else lam


def effective_system(fp: FullParams, grid: ModeGrid) -> tuple[SystemParams, ModeGrid]:
    """Effective-model parameters and grid with lambda_k from :func:`effective_coupling`.

    The grid carries |lambda_k|; the sign of 1/detuning2 is a uniform phase
    of the Stokes states and does not affect any population.
    """
    lam = np.abs(effective_coupling(fp, grid.frequencies))
    return fp.system(), grid.with_couplings(lam)


def stark_corrected_hamiltonian(fp: FullParams, grid: ModeGrid) -> HamiltonianMatrix:
    """Effective Hamiltonian with the light shifts of the eliminated level.

    psi0 moves by -N g_p**2 / detuning2 and psi_k by -g_Sk**2 / detuning2.
    Only used for comparisons against the full model.
    """
    params, eff_grid = effective_system(fp, grid)
    h = assemble_hamiltonian(params, eff_grid)
    gs = fp.stokes_couplings(grid)
    shift = np.concatenate(([-fp.n_atoms * fp.g_p**2], -(gs**2))) / fp.detuning2
    return h.shifted(shift)


@dataclass(frozen=True)
class AdiabaticityReport:
    max_intermediate_population: float
    max_population_discrepancy: float
    coupling_ratio: float
    intermediate_bound: float
    discrepancy_bound: float
    mean_intermediate_population: float

    @property
    def intermediate_ok(self) -> bool:
        return self.max_intermediate_population <= self.intermediate_bound

    @property
    def discrepancy_ok(self) -> bool:
        return self.max_population_discrepancy <= self.discrepancy_bound

    @property
    def regime_ok(self) -> bool:
        return self.coupling_ratio <= (1 + 1e-12) / ADIABATIC_MARGIN

    @property
    def passed(self) -> bool:
        return self.regime_ok and self.intermediate_ok and self.discrepancy_ok

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(
            regime_ok=self.regime_ok,
            intermediate_ok=self.intermediate_ok,
            discrepancy_ok=self.discrepancy_ok,
            passed=self.passed,
        )
        return d


def coupling_ratio(fp: FullParams, grid: ModeGrid) -> float:
    """Largest coupling matrix element over |detuning2|.

    The pump element enters with its collective factor sqrt(N), since that
    is what drives psi0 <-> psi1.
    """
    g = max(fp.collective_pump_coupling, float(np.max(fp.stokes_couplings(grid))))
    return g / abs(fp.detuning2)


def adiabaticity_report(
    full_traj: Trajectory, eff_traj: Trajectory, fp: FullParams, grid: ModeGrid
) -> AdiabaticityReport:
    """Compare a full-model run against an effective run on the same time grid.

    Passes when r <= 0.1, max |b1|**2 <= 4 r**2 and the largest population
    difference (pump and Stokes) <= 10 r, with r from :func:`coupling_ratio`.
    A ratio above 0.1 also emits :class:`AdiabaticRegimeWarning`.
    """
    if full_traj.layout != "full":
        raise InvalidArgument("first trajectory must come from the full model")
    if len(full_traj) != len(eff_traj) or not np.allclose(
        full_traj.times, eff_traj.times, rtol=1e-12, atol=1e-12
    ):
        raise InvalidArgument("trajectories are not sampled at common times")
    b1 = np.abs(full_traj.intermediate) ** 2
    p0_diff = np.abs(np.abs(full_traj.c0) ** 2 - np.abs(eff_traj.c0) ** 2)
    ps_full = np.sum(np.abs(full_traj.stokes) ** 2, axis=1)
    ps_eff = np.sum(np.abs(eff_traj.stokes) ** 2, axis=1)
    disc = np.maximum(p0_diff, np.abs(ps_full - ps_eff))
    r = coupling_ratio(fp, grid) if fp.detuning2 != 0 else math.inf
    report = AdiabaticityReport(
        max_intermediate_population=float(np.max(b1)),
        max_population_discrepancy=float(np.max(disc)),
        coupling_ratio=r,
        intermediate_bound=4 * r * r,
        discrepancy_bound=10 * r,
        mean_intermediate_population=float(np.mean(b1)),
    )
    if not report.regime_ok:
        warnings.warn(
            f"coupling ratio {r:.3g} exceeds {1 / ADIABATIC_MARGIN:g}; level 2 is not adiabatic",
            AdiabaticRegimeWarning,
            stacklevel=2,
        )
    return report
