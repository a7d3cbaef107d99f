"""Closed-form Wigner-Weisskopf solution of the effective amplitude equations.

The pump amplitude decays as exp(-gamma t / 2) with a pole shifted from
omega_p by the principal-value shift ``delta``; each Stokes amplitude
approaches ``J_k exp(-i(omega_k + omega_31) t)`` with a Lorentzian modulus.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import ModeGrid, SystemParams, params_digest
from .dynamics import AmplitudeState, Trajectory
from .errors import InvalidArgument, OutOfSupport


class AsymmetricGridWarning(UserWarning):
    """Grid is not centered on the resonance; the shift loses exact cancellation."""


@dataclass(frozen=True)
class WWParams:
    gamma: float
    delta: float
    omega_p: float
    omega_31: float
    n_atoms: int

    def __post_init__(self):
        if self.gamma < 0:
            raise InvalidArgument("gamma must be >= 0")

    @property
    def pole(self) -> float:
        """Oscillation frequency of the decaying pump amplitude."""
        return self.omega_p + self.delta


def decay_rate(params: SystemParams, grid: ModeGrid) -> float:
    """gamma = 2 pi p N lambda(omega_res)**2 with p = 1/spacing.

    The coupling is read from the grid (linear interpolation between nodes),
    and N is the atom number, so gamma matches the coupling that enters the
    equations of motion.
    """
    if not grid.contains(params.omega_res):
        raise OutOfSupport("two-photon resonance lies outside the grid")
    lam = grid.coupling_near(params.omega_res)
    return 2 * math.pi * grid.density * params.n_atoms * lam * lam


def _is_centered(params: SystemParams, grid: ModeGrid) -> bool:
    return abs(grid.midpoint - params.omega_res) <= 1e-6 * grid.spacing


def frequency_shift(params: SystemParams, grid: ModeGrid) -> float:
    """Principal-value shift Delta = -PV sum_k N lambda_k**2 / (omega_k - omega_res).

    On a grid centered at the resonance, modes at equal distance on either
    side are paired so the singular parts cancel exactly; a node sitting on
    the resonance contributes nothing.  Other grids fall back to the plain
    sum and emit :class:`AsymmetricGridWarning`.
    """
    weight = params.n_atoms * grid.couplings**2
    n = grid.n_modes
    if _is_centered(params, grid):
        half = n // 2
        # left node i pairs with right node n-1-i at offset -x_i
        offsets = (np.arange(half) - (n - 1) / 2) * grid.spacing
        left = weight[:half]
        right = weight[n - 1 : n - 1 - half : -1] if half else weight[:0]
        return -float(np.sum((left - right) / offsets))
    warnings.warn(
        "grid is not symmetric about the two-photon resonance; "
        "frequency shift computed without pairing (lower accuracy)",
        AsymmetricGridWarning,
        stacklevel=2,
    )
    x = grid.frequencies - params.omega_res
    keep = np.abs(x) > 1e-9 * grid.spacing
    return -float(np.sum(weight[keep] / x[keep]))


def ww_params(params: SystemParams, grid: ModeGrid) -> WWParams:
    return WWParams(
        decay_rate(params, grid),
        frequency_shift(params, grid),
        params.omega_p,
        params.omega_31,
        params.n_atoms,
    )


def steady_amplitude(omega_k, ww: WWParams, lambda_k):
    """Long-time Stokes amplitude J_k = -i sqrt(N) lambda_k / (gamma/2 - i D_k).

    D_k = omega_k + omega_31 - omega_p - delta.  Accepts scalars or arrays.
    """
    if not ww.gamma > 0:
        raise InvalidArgument("steady amplitude needs gamma > 0 (undamped pole)")
    detuning = np.asarray(omega_k, dtype=float) + ww.omega_31 - ww.omega_p - ww.delta
    lam = np.asarray(lambda_k, dtype=float)
    out = -1j * math.sqrt(ww.n_atoms) * lam / (0.5 * ww.gamma - 1j * detuning)
    return complex(out) if out.ndim == 0 else out


def _stokes_amplitudes(t, params, grid, ww, pole):
    lam = grid.couplings
    energy = grid.frequencies + params.omega_31
    detuning = energy - ww.omega_p - ww.delta
    denom = 0.5 * ww.gamma - 1j * detuning
    active = lam != 0
    if np.any(active & (denom == 0)):
        raise InvalidArgument("undamped resonant mode: gamma = 0 with nonzero coupling")
    pref = np.zeros(grid.n_modes, complex)
    pref[active] = -1j * math.sqrt(params.n_atoms) * lam[active] / denom[active]
    t = np.atleast_1d(np.asarray(t, dtype=float))
    c0 = np.exp(-0.5 * ww.gamma * t) * np.exp(-1j * pole * t)
    ck = pref * (np.exp(-1j * np.outer(t, energy)) - c0[:, None])
    return c0, ck


def closed_form_state(
    t: float,
    params: SystemParams,
    grid: ModeGrid,
    ww: WWParams,
    literal_phase: bool = False,
) -> AmplitudeState:
    """Analytic amplitudes at time ``t`` on the given grid.

    C0(t) = exp(-gamma t/2) exp(-i(omega_p + delta) t) and
    C_k(t) = J_k [exp(-i(omega_k + omega_31) t) - C0(t)].

    The pole sits at omega_p + delta, the same place the Lorentzian in J_k is
    centered.  ``literal_phase=True`` uses omega_p - delta instead; the two
    differ only when delta != 0 and only the default tracks the numerics.
    """
    if not t >= 0:
        raise InvalidArgument("t must be >= 0")
    pole = ww.omega_p - ww.delta if literal_phase else ww.pole
    c0, ck = _stokes_amplitudes(t, params, grid, ww, pole)
    return AmplitudeState(float(t), c0[0], ck[0])


def closed_form_trajectory(
    times, params: SystemParams, grid: ModeGrid, ww: WWParams, literal_phase: bool = False
) -> Trajectory:
    t = np.asarray(times, dtype=float).ravel()
    if np.any(t < 0):
        raise InvalidArgument("times must be >= 0")
    pole = ww.omega_p - ww.delta if literal_phase else ww.pole
    c0, ck = _stokes_amplitudes(t, params, grid, ww, pole)
    amps = np.concatenate([c0[:, None], ck], axis=1)
    return Trajectory(t, amps, "analytic", "effective", grid.n_modes, "lab", params_digest(params, grid))
