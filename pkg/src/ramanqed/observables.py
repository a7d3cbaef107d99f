"""Populations, atomic entanglement, Stokes spectrum and curve fits."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.optimize

from .core import ModeGrid
from .dynamics import AmplitudeState, Trajectory
from .errors import FitFailed, InvalidDensity, InvalidSeries, NotNormalized

DENSITY_TOL = 1e-12
NORM_BAND = 1e-6

# two-qubit basis order |11>, |13>, |31>, |33>; |1> and |3> are the qubit states
KET_11 = np.array([1, 0, 0, 0], dtype=complex)
KET_33 = np.array([0, 0, 0, 1], dtype=complex)
PSI_PLUS = np.array([0, 1, 1, 0], dtype=complex) / math.sqrt(2)
SIGMA_Y = np.array([[0, -1j], [1j, 0]])
SPIN_FLIP = np.kron(SIGMA_Y, SIGMA_Y)


@dataclass(frozen=True)
class Populations:
    times: np.ndarray
    p0: np.ndarray
    ps: np.ndarray
    p1: Optional[np.ndarray] = None

    @property
    def total(self) -> np.ndarray:
        return self.p0 + self.ps + (self.p1 if self.p1 is not None else 0.0)


def populations(traj: Trajectory) -> Populations:
    """Pump population |C0|^2 and Stokes-emission probability sum_k |C_k|^2.

    For full-model trajectories ``p1`` holds the level-2 population |b1|^2.
    """
    p0 = np.abs(traj.c0) ** 2
    ps = np.sum(np.abs(traj.stokes) ** 2, axis=1)
    p1 = np.abs(traj.intermediate) ** 2 if traj.layout == "full" else None
    return Populations(traj.times, p0, ps, p1)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Two-qubit density matrix on {|1>,|3>} x {|1>,|3>}."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise InvalidDensity("density matrix must be 4x4")
        if np.max(np.abs(m - m.conj().T)) > DENSITY_TOL:
            raise InvalidDensity("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > DENSITY_TOL:
            raise InvalidDensity("density matrix trace differs from 1")
        if np.min(np.linalg.eigvalsh(m)) < -DENSITY_TOL:
            raise InvalidDensity("density matrix has a negative eigenvalue")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def _projector(ket) -> np.ndarray:
    return np.outer(ket, ket.conj())


def _atomic_density(p0: float, ps: float, n_atoms: int) -> np.ndarray:
    # a shared level-3 excitation among N atoms leaves a given pair in
    # |psi+> with probability 2/N, otherwise both in level 1
    pair = 2.0 / n_atoms
    return (p0 + ps * (1 - pair)) * _projector(KET_11) + ps * pair * _projector(PSI_PLUS)


def _normalized_weights(p0: float, ps: float) -> tuple[float, float]:
    norm = p0 + ps
    if abs(norm - 1) > NORM_BAND:
        raise NotNormalized(f"state norm^2 = {norm:.9g} outside 1 +- {NORM_BAND:g}")
    return p0 / norm, ps / norm


def reduced_atomic_density(state: AmplitudeState, n_atoms: int = 2) -> DensityMatrix:
    """Atomic state with the pump and Stokes fields traced out.

    rho = |C0|^2 |11><11| + (sum_k |C_k|^2) |psi+><psi+| for two atoms,
    psi+ = (|31> + |13>)/sqrt(2).  There are no coherences because psi0 and
    every psi_k carry orthogonal field states.  For ``n_atoms`` > 2 the
    result is the reduced state of one pair.  Slightly unnormalized inputs
    (within 1e-6) are renormalized.
    """
    p0 = abs(state.c0) ** 2
    ps = float(np.sum(np.abs(state.ck) ** 2))
    p0, ps = _normalized_weights(p0, ps)
    return DensityMatrix(_atomic_density(p0, ps, n_atoms))


def conditional_density(state: AmplitudeState, n_atoms: int = 2) -> DensityMatrix:
    """Atomic state conditioned on a detected Stokes photon.

    Projects out psi0, renormalizes the Stokes amplitudes and traces out
    the field.
    """
    ps = float(np.sum(np.abs(state.ck) ** 2))
    if ps <= 0:
        raise NotNormalized("no Stokes amplitude to condition on")
    projected = AmplitudeState(state.time, 0.0, state.ck / math.sqrt(ps), state.frame)
    return reduced_atomic_density(projected, n_atoms)


def reduced_atomic_density_full(state, n_atoms: int = 2) -> tuple[DensityMatrix, float]:
    """Atomic state of a full-model sample projected onto levels {1, 3}.

    Returns the renormalized projection and its weight |b0|^2 + sum|b_k|^2;
    the level-2 population is ``1 - weight``.
    """
    p0 = abs(state.b0) ** 2
    ps = float(np.sum(np.abs(state.bk) ** 2))
    total = p0 + ps + abs(state.b1) ** 2
    if abs(total - 1) > NORM_BAND:
        raise NotNormalized(f"state norm^2 = {total:.9g} outside 1 +- {NORM_BAND:g}")
    weight = p0 + ps
    if weight <= 0:
        raise NotNormalized("state has no weight in the {1,3} subspace")
    return DensityMatrix(_atomic_density(p0 / weight, ps / weight, n_atoms)), weight / total


def concurrence(rho) -> float:
    """Wootters concurrence max(0, l1 - l2 - l3 - l4).

    The l_i are the square roots, in decreasing order, of the eigenvalues
    of rho (Y x Y) rho* (Y x Y).  They are computed here as eigenvalues of
    the Hermitian matrix sqrt(sqrt(rho) rho~ sqrt(rho)).
    """
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho)
    m = rho.matrix
    w, v = np.linalg.eigh(m)
    sqrt_rho = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    flipped = SPIN_FLIP @ m.conj() @ SPIN_FLIP
    r = sqrt_rho @ flipped @ sqrt_rho
    mu = np.linalg.eigvalsh(0.5 * (r + r.conj().T))
    lam = np.sort(np.sqrt(np.clip(mu, 0, None)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def concurrence_series(traj: Trajectory, n_atoms: int = 2) -> np.ndarray:
    """Unconditional concurrence at every sample of an effective trajectory."""
    return np.array([concurrence(reduced_atomic_density(s, n_atoms)) for s in traj.samples])


@dataclass(frozen=True)
class SpectrumSeries:
    omegas: np.ndarray
    weights: np.ndarray

    @property
    def total(self) -> float:
        return float(np.sum(self.weights))

    def window(self, lo: float, hi: float) -> "SpectrumSeries":
        keep = (self.omegas >= lo) & (self.omegas <= hi)
        return SpectrumSeries(self.omegas[keep], self.weights[keep])


class ShortTimeWarning(UserWarning):
    pass


def stokes_spectrum(state: AmplitudeState, grid: ModeGrid, gamma: Optional[float] = None) -> SpectrumSeries:
    """Emitted-photon distribution (omega_k, |C_k|^2) over the grid."""
    if state.n_modes != grid.n_modes:
        raise InvalidSeries("state and grid have different mode counts")
    if gamma is not None and gamma * state.time < 10:
        warnings.warn(
            f"gamma*t = {gamma * state.time:.3g} < 10; spectrum still transient",
            ShortTimeWarning,
            stacklevel=2,
        )
    return SpectrumSeries(grid.frequencies.copy(), np.abs(state.ck) ** 2)


@dataclass(frozen=True)
class ExponentialFit:
    rate: float
    amplitude: float
    rms_residual: float


def fit_exponential(times, values) -> ExponentialFit:
    """Least-squares line through (t, ln P); rate is minus the slope."""
    t = np.asarray(times, dtype=float).ravel()
    y = np.asarray(values, dtype=float).ravel()
    if t.size != y.size:
        raise InvalidSeries("times and values differ in length")
    if t.size < 10:
        raise InvalidSeries("need at least 10 samples")
    if np.any(~(y > 0)):
        raise InvalidSeries("values must be strictly positive")
    logs = np.log(y)
    slope, intercept = np.polyfit(t, logs, 1)
    resid = logs - (slope * t + intercept)
    return ExponentialFit(-float(slope), float(np.exp(intercept)), float(np.sqrt(np.mean(resid**2))))


@dataclass(frozen=True)
class LorentzianFit:
    center: float
    fwhm: float
    peak: float
    rms_residual: float
    iterations: int


def lorentzian(omega, center, fwhm, peak):
    hw2 = (0.5 * fwhm) ** 2
    return peak * hw2 / (hw2 + (np.asarray(omega) - center) ** 2)


def _initial_guess(w: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    i = int(np.argmax(y))
    peak = float(y[i])
    half = 0.5 * peak
    # linear interpolation of the half-maximum crossings on each side
    left = w[0]
    for j in range(i, 0, -1):
        if y[j - 1] < half <= y[j]:
            left = w[j - 1] + (half - y[j - 1]) * (w[j] - w[j - 1]) / (y[j] - y[j - 1])
            break
    right = w[-1]
    for j in range(i, w.size - 1):
        if y[j + 1] < half <= y[j]:
            right = w[j] + (y[j] - half) * (w[j + 1] - w[j]) / (y[j] - y[j + 1])
            break
    return float(w[i]), float(right - left), peak


def fit_lorentzian(series: SpectrumSeries, max_iterations: int = 200, xtol: float = 1e-10) -> LorentzianFit:
    """Fit peak * (w/2)^2 / ((w/2)^2 + (omega - center)^2) by Levenberg-Marquardt.

    Starts from the sample maximum and its half-maximum crossings, so the
    result is deterministic.  Needs at least 20 points spanning five
    estimated widths.  Raises :class:`FitFailed` when the parameter step has
    not dropped below ``xtol`` (relative) within ``max_iterations``.
    """
    w = np.asarray(series.omegas, dtype=float)
    y = np.asarray(series.weights, dtype=float)
    if w.size < 20:
        raise InvalidSeries("need at least 20 spectrum points")
    if not np.max(y) > 0:
        raise InvalidSeries("spectrum has no positive weight")
    x0 = _initial_guess(w, y)
    if not x0[1] > 0 or (w[-1] - w[0]) < 5 * x0[1]:
        raise InvalidSeries("spectrum must span at least five estimated widths")
    scale = np.array([x0[1], x0[1], x0[2]])

    def residual(p):
        return lorentzian(w, *(p * scale)) - y

    def jacobian(p):
        c, f, a = p * scale
        hw2 = (0.5 * f) ** 2
        d = w - c
        den = hw2 + d * d
        j_c = a * hw2 * 2 * d / den**2
        j_f = a * 0.5 * f * d * d / den**2
        j_a = hw2 / den
        return np.column_stack([j_c, j_f, j_a]) * scale

    start = np.array(x0) / scale
    res = scipy.optimize.least_squares(
        residual, start, jac=jacobian, method="lm",
        xtol=xtol, ftol=1e-15, gtol=1e-15, max_nfev=max_iterations,
    )
    if res.status <= 0:
        raise FitFailed(
            f"Lorentzian fit did not converge: {res.message}",
            {"initial": x0, "last": tuple(res.x * scale), "nfev": res.nfev, "status": res.status},
        )
    c, f, a = res.x * scale
    rms = float(np.sqrt(np.mean(res.fun**2)))
    return LorentzianFit(float(c), float(abs(f)), float(a), rms, int(res.nfev))
