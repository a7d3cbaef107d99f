"""Physical parameters, coupling profiles and the discretized Stokes continuum.

Units: hbar = 1 and every frequency is expressed in a user-declared reference
unit (``SystemParams.frequency_unit`` converts it to rad/s).  Times are in the
inverse of that unit.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidArgument, OutOfSupport, UnphysicalGrid

PROFILE_KINDS = ("flat", "lorentzian-window", "user-table")

# production sizing, both in units of the decay rate gamma
DEFAULT_BANDWIDTH_GAMMA = 40.0
DEFAULT_MODES_PER_GAMMA = 40

# validate_grid thresholds
MIN_BANDWIDTH_GAMMA = 20.0
RECURRENCE_SAFETY = 2.0

SPEED_OF_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class CouplingProfile:
    """Frequency dependence lambda(omega) of the effective two-photon coupling.

    ``shape_params`` depends on ``kind``:

    * ``flat``: unused (empty tuple).
    * ``lorentzian-window``: ``(center, width)``; lambda**2 is a Lorentzian of
      full width ``width`` peaked at ``center`` with peak value lambda0**2.
    * ``user-table``: sorted ``((omega, lambda), ...)`` pairs, linearly
      interpolated; no extrapolation.
    """

    kind: str = "flat"
    lambda0: float = 0.0
    shape_params: tuple = ()

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise InvalidArgument(f"unknown coupling profile kind {self.kind!r}")
        if not self.lambda0 >= 0:
            raise InvalidArgument("lambda0 must be >= 0")
        if self.kind == "lorentzian-window":
            if len(self.shape_params) != 2:
                raise InvalidArgument("lorentzian-window needs (center, width)")
            if not self.shape_params[1] > 0:
                raise InvalidArgument("lorentzian-window width must be > 0")
        elif self.kind == "user-table":
            table = self.shape_params
            if len(table) < 2:
                raise InvalidArgument("user-table needs at least two (omega, lambda) pairs")
            omegas = [float(p[0]) for p in table]
            if any(b <= a for a, b in zip(omegas, omegas[1:])):
                raise InvalidArgument("user-table frequencies must be strictly increasing")
            if any(float(p[1]) < 0 for p in table):
                raise InvalidArgument("user-table couplings must be >= 0")

    @classmethod
    def flat(cls, lambda0: float) -> "CouplingProfile":
        return cls("flat", float(lambda0))

    @classmethod
    def lorentzian_window(cls, lambda0: float, center: float, width: float) -> "CouplingProfile":
        return cls("lorentzian-window", float(lambda0), (float(center), float(width)))

    @classmethod
    def user_table(cls, points) -> "CouplingProfile":
        table = tuple((float(w), float(lam)) for w, lam in points)
        lam0 = max((lam for _, lam in table), default=0.0)
        return cls("user-table", lam0, table)

    @property
    def support(self) -> tuple[float, float]:
        if self.kind == "user-table":
            return self.shape_params[0][0], self.shape_params[-1][0]
        return -math.inf, math.inf

    def scaled(self, factor: float) -> "CouplingProfile":
        """Same shape with every coupling multiplied by ``factor``."""
        if self.kind == "user-table":
            return CouplingProfile(
                self.kind,
                self.lambda0 * factor,
                tuple((w, lam * factor) for w, lam in self.shape_params),
            )
        return CouplingProfile(self.kind, self.lambda0 * factor, self.shape_params)

    def evaluate(self, omegas) -> np.ndarray:
        """Vectorized :func:`coupling_at`."""
        w = np.asarray(omegas, dtype=float)
        if self.kind == "flat":
            return np.full(w.shape, self.lambda0)
        if self.kind == "lorentzian-window":
            center, width = self.shape_params
            x = (w - center) / (0.5 * width)
            return self.lambda0 / np.sqrt(1.0 + x * x)
        lo, hi = self.support
        if np.any(w < lo) or np.any(w > hi):
            raise OutOfSupport(f"frequency outside user-table range [{lo}, {hi}]")
        xs = np.array([p[0] for p in self.shape_params])
        ys = np.array([p[1] for p in self.shape_params])
        return np.interp(w, xs, ys)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lambda0": self.lambda0, "shape_params": self.shape_params}


def coupling_at(profile: CouplingProfile, omega: float) -> float:
    """Coupling lambda(omega) >= 0 of ``profile`` at a single frequency."""
    return float(profile.evaluate(np.asarray(omega, dtype=float)))


@dataclass(frozen=True)
class SystemParams:
    """Model constants: pump frequency, 1-3 splitting, atom number, coupling."""

    omega_p: float
    omega_31: float
    n_atoms: int = 2
    coupling_profile: CouplingProfile = field(default_factory=CouplingProfile)
    frequency_unit: float = 1.0
    frequency_unit_label: str = "1"
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.omega_p > 0:
            raise InvalidArgument("omega_p must be > 0")
        if not self.omega_31 >= 0:
            raise InvalidArgument("omega_31 must be >= 0")
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 2:
            raise InvalidArgument("n_atoms must be an integer >= 2")
        if not self.omega_res > 0:
            raise InvalidArgument("two-photon resonance omega_p - omega_31 must be > 0")
        if not self.frequency_unit > 0:
            raise InvalidArgument("frequency_unit must be > 0")

    @property
    def omega_res(self) -> float:
        """Stokes frequency in two-photon resonance with the pump."""
        return self.omega_p - self.omega_31

    @property
    def dicke_factor(self) -> float:
        return math.sqrt(self.n_atoms)

    def to_dict(self) -> dict:
        return {
            "omega_p": self.omega_p,
            "omega_31": self.omega_31,
            "n_atoms": self.n_atoms,
            "coupling_profile": self.coupling_profile.to_dict(),
            "frequency_unit": self.frequency_unit,
            "frequency_unit_label": self.frequency_unit_label,
        }


@dataclass(frozen=True, eq=False)
class ModeGrid:
    """Uniform discretization of the Stokes continuum.

    Each mode stands for a frequency cell of width ``spacing``; the density of
    states is ``1/spacing`` so that a sum over modes of ``lambda_k**2``
    approximates the integral of ``p * lambda(omega)**2``.
    """

    frequencies: np.ndarray
    couplings: np.ndarray
    spacing: float

    def __post_init__(self):
        w = np.array(self.frequencies, dtype=float).ravel()
        lam = np.array(self.couplings, dtype=float).ravel()
        if w.size == 0:
            raise InvalidArgument("grid must contain at least one mode")
        if lam.shape != w.shape:
            raise InvalidArgument("couplings and frequencies differ in length")
        if np.any(lam < 0) or not np.all(np.isfinite(lam)):
            raise InvalidArgument("couplings must be finite and >= 0")
        if not self.spacing > 0:
            raise InvalidArgument("spacing must be > 0")
        if w.size > 1:
            steps = np.diff(w)
            if np.any(steps <= 0):
                raise InvalidArgument("frequencies must be strictly increasing")
            # float rounding of the node values scales with |omega|, not spacing
            tol = 1e-12 * max(float(np.max(np.abs(w))), self.spacing)
            if np.max(np.abs(steps - self.spacing)) > max(tol, 1e-12 * self.spacing):
                raise InvalidArgument("frequencies are not uniformly spaced by `spacing`")
        w.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "frequencies", w)
        object.__setattr__(self, "couplings", lam)
        object.__setattr__(self, "spacing", float(self.spacing))

    @property
    def density(self) -> float:
        return 1.0 / self.spacing

    @property
    def n_modes(self) -> int:
        return self.frequencies.size

    @property
    def bandwidth(self) -> float:
        return float(self.frequencies[-1] - self.frequencies[0])

    @property
    def midpoint(self) -> float:
        return 0.5 * float(self.frequencies[0] + self.frequencies[-1])

    @property
    def recurrence_time(self) -> float:
        return 2 * math.pi / self.spacing

    def contains(self, omega: float) -> bool:
        return bool(self.frequencies[0] <= omega <= self.frequencies[-1])

    def coupling_near(self, omega: float) -> float:
        """Linearly interpolated per-mode coupling at ``omega``."""
        if not self.contains(omega):
            raise OutOfSupport(f"omega={omega} outside grid support")
        if self.n_modes == 1:
            return float(self.couplings[0])
        return float(np.interp(omega, self.frequencies, self.couplings))

    def integrate(self, values) -> float:
        """Trapezoidal integral of ``values`` sampled on the grid nodes."""
        return float(np.trapezoid(np.asarray(values, dtype=float), dx=self.spacing))

    def with_couplings(self, couplings) -> "ModeGrid":
        return ModeGrid(self.frequencies, couplings, self.spacing)


def build_mode_grid(
    params: SystemParams,
    bandwidth: float,
    n_modes: int,
    profile: Optional[CouplingProfile] = None,
) -> ModeGrid:
    """Uniform grid of ``n_modes`` frequencies centered at the two-photon resonance.

    Parameters
    ----------
    params : SystemParams
    bandwidth : float
        Total width; the grid spans ``omega_res -+ bandwidth/2`` inclusive.
    n_modes : int
        Number of nodes (>= 3); the spacing is ``bandwidth / (n_modes - 1)``.
    profile : CouplingProfile, optional
        Overrides ``params.coupling_profile``.  Couplings are evaluated per
        mode with no density rescaling.
    """
    if not bandwidth > 0:
        raise InvalidArgument("bandwidth must be > 0")
    if int(n_modes) != n_modes or n_modes < 3:
        raise InvalidArgument("n_modes must be an integer >= 3")
    n_modes = int(n_modes)
    center = params.omega_res
    if center - bandwidth / 2 <= 0:
        raise UnphysicalGrid(
            f"grid lower edge {center - bandwidth / 2:g} <= 0; "
            "raise omega_p - omega_31 or shrink the bandwidth"
        )
    spacing = bandwidth / (n_modes - 1)
    offsets = (np.arange(n_modes) - (n_modes - 1) / 2) * spacing
    freqs = center + offsets
    prof = params.coupling_profile if profile is None else profile
    return ModeGrid(freqs, prof.evaluate(freqs), spacing)


@dataclass(frozen=True)
class GridDiagnostics:
    recurrence_time: float
    t_max: float
    bandwidth: float
    spacing: float
    gamma_estimate: float
    bandwidth_over_gamma: float
    recurrence_ok: bool
    bandwidth_ok: bool

    @property
    def passed(self) -> bool:
        return self.recurrence_ok and self.bandwidth_ok

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["passed"] = self.passed
        if math.isinf(d["bandwidth_over_gamma"]):
            d["bandwidth_over_gamma"] = None
        return d


def validate_grid(
    grid: ModeGrid, t_max: float, n_atoms: int = 2, gamma: Optional[float] = None
) -> GridDiagnostics:
    """Check that the grid resolves the continuum over ``[0, t_max]``.

    Passes when the recurrence time 2*pi/spacing exceeds ``2*t_max`` and the
    bandwidth is at least 20 decay rates.  ``gamma`` defaults to the
    golden-rule estimate from the coupling at the grid midpoint.
    """
    if not t_max > 0:
        raise InvalidArgument("t_max must be > 0")
    if gamma is None:
        lam = grid.coupling_near(grid.midpoint)
        gamma = 2 * math.pi * grid.density * n_atoms * lam**2
    ratio = grid.bandwidth / gamma if gamma > 0 else math.inf
    rec = grid.recurrence_time
    return GridDiagnostics(
        recurrence_time=rec,
        t_max=float(t_max),
        bandwidth=grid.bandwidth,
        spacing=grid.spacing,
        gamma_estimate=float(gamma),
        bandwidth_over_gamma=ratio,
        recurrence_ok=bool(rec > RECURRENCE_SAFETY * t_max),
        # tolerate round-off for grids built at exactly the threshold
        bandwidth_ok=bool(ratio >= MIN_BANDWIDTH_GAMMA * (1 - 1e-9)),
    )


# -- continuum normalization -------------------------------------------------


def continuum_gamma(lambda_c: float, n_atoms: int) -> float:
    """Decay rate for a continuum-normalized coupling (lambda_k = lambda_c*sqrt(dw))."""
    return 2 * math.pi * n_atoms * lambda_c**2


def continuum_coupling(gamma: float, n_atoms: int) -> float:
    """Inverse of :func:`continuum_gamma`."""
    return math.sqrt(gamma / (2 * math.pi * n_atoms))


def build_continuum_grid(
    params: SystemParams, bandwidth: float, n_modes: int
) -> ModeGrid:
    """Grid whose per-mode couplings are ``params.coupling_profile * sqrt(spacing)``.

    With this normalization the decay rate no longer depends on the mode
    count, which is what physical scenarios need.
    """
    probe = build_mode_grid(params, bandwidth, n_modes, profile=CouplingProfile.flat(0.0))
    profile = params.coupling_profile.scaled(math.sqrt(probe.spacing))
    return probe.with_couplings(profile.evaluate(probe.frequencies))


def params_digest(params: SystemParams, grid: Optional[ModeGrid] = None) -> str:
    h = hashlib.sha256(json.dumps(params.to_dict(), sort_keys=True).encode())
    if grid is not None:
        h.update(grid.frequencies.tobytes())
        h.update(grid.couplings.tobytes())
        h.update(repr(grid.spacing).encode())
    return h.hexdigest()[:16]


# -- presets -----------------------------------------------------------------

RB85_OMEGA_31_HZ = 3.0e9
RB85_STOKES_WAVELENGTH_NM = 780.0
RB85_LEVEL3_LIFETIME_RATIO = 10.0


def rb85_params(gamma: float = 1e-3, n_atoms: int = 2) -> SystemParams:
    """85Rb Raman scheme in units of 2*pi*GHz.

    The 1-3 hyperfine splitting is 3 GHz and the Stokes light sits at
    780 nm.  ``gamma`` (in the same units) sets the continuum coupling since
    no Raman rate is quoted for this system.
    """
    unit = 2 * math.pi * 1e9
    omega_31 = RB85_OMEGA_31_HZ / 1e9
    omega_s = SPEED_OF_LIGHT / (RB85_STOKES_WAVELENGTH_NM * 1e-9) / 1e9
    return SystemParams(
        omega_p=omega_s + omega_31,
        omega_31=omega_31,
        n_atoms=n_atoms,
        coupling_profile=CouplingProfile.flat(continuum_coupling(gamma, n_atoms)),
        frequency_unit=unit,
        frequency_unit_label="2pi*GHz",
        metadata={
            "preset": "rb85",
            "atom": "85Rb",
            "level_1": "5S1/2 (lower hyperfine)",
            "level_2": "5P3/2",
            "level_3": "5S1/2 (upper hyperfine)",
            "omega_31_hz": RB85_OMEGA_31_HZ,
            "stokes_wavelength_nm": RB85_STOKES_WAVELENGTH_NM,
            "level3_lifetime_over_level2_min": RB85_LEVEL3_LIFETIME_RATIO,
        },
    )
