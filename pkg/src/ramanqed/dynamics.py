"""Effective single-excitation Hamiltonian and its two propagators.

Basis order: ``psi0`` (pump photon, both atoms in level 1), then one
``psi_k`` per Stokes mode (symmetric level-3 excitation plus a Stokes photon
in mode k), then optionally the antisymmetric ``phi1`` and ``phi_k`` states.
"""

from __future__ import annotations

import hashlib
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.csgraph

from .core import ModeGrid, SystemParams, params_digest
from .errors import InvalidArgument, InvalidFrame, NumericalError, StepTooLarge, TooLarge

MAX_DIM = 20_000
RK4_STABILITY = 0.1
FRAMES = ("lab", "rotating")


@dataclass(frozen=True, eq=False)
class HamiltonianMatrix:
    """Real symmetric Hamiltonian matrix plus its basis bookkeeping.

    ``layout`` is one of ``effective``, ``effective+dark`` or ``full`` and
    fixes where the Stokes block starts (see :meth:`stokes_slice`).
    """

    entries: np.ndarray
    basis_labels: tuple
    n_modes: int
    layout: str = "effective"
    digest: str = ""

    def __post_init__(self):
        h = np.array(self.entries, dtype=float)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise InvalidArgument("Hamiltonian must be a square matrix")
        if len(self.basis_labels) != h.shape[0]:
            raise InvalidArgument("basis_labels length does not match dimension")
        h.setflags(write=False)
        object.__setattr__(self, "entries", h)
        if not self.digest:
            object.__setattr__(self, "digest", hashlib.sha256(h.tobytes()).hexdigest()[:16])

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.entries).copy()

    def stokes_slice(self) -> slice:
        start = 2 if self.layout == "full" else 1
        return slice(start, start + self.n_modes)

    def shifted(self, diagonal_shift) -> "HamiltonianMatrix":
        """Copy with ``diagonal_shift`` added to the diagonal."""
        h = self.entries.copy()
        h[np.diag_indices_from(h)] += np.asarray(diagonal_shift, dtype=float)
        return HamiltonianMatrix(h, self.basis_labels, self.n_modes, self.layout)


@dataclass(frozen=True, eq=False)
class AmplitudeState:
    """Amplitudes (C0, C_k) of the effective model at one instant.

    ``dark`` holds the amplitudes of (phi1, phi_k...) when the extended
    basis is in use and is empty otherwise.
    """

    time: float
    c0: complex
    ck: np.ndarray
    frame: str = "lab"
    dark: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise InvalidArgument(f"unknown frame {self.frame!r}")
        if not self.time >= 0:
            raise InvalidArgument("time must be >= 0")
        object.__setattr__(self, "c0", complex(self.c0))
        object.__setattr__(self, "ck", np.asarray(self.ck, dtype=complex).ravel())
        object.__setattr__(self, "dark", np.asarray(self.dark, dtype=complex).ravel())

    @classmethod
    def initial(cls, n_modes: int, include_dark: bool = False, time: float = 0.0):
        """The state psi0 with C0 = 1 and every other amplitude zero."""
        dark = np.zeros(n_modes + 1 if include_dark else 0, complex)
        return cls(time, 1.0, np.zeros(n_modes, complex), "lab", dark)

    @property
    def n_modes(self) -> int:
        return self.ck.size

    @property
    def norm_sq(self) -> float:
        return float(abs(self.c0) ** 2 + np.sum(np.abs(self.ck) ** 2) + np.sum(np.abs(self.dark) ** 2))

    def vector(self) -> np.ndarray:
        return np.concatenate(([self.c0], self.ck, self.dark))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-ordered amplitudes from one propagation.

    Amplitudes are stored as a ``(n_times, dim)`` array; :attr:`samples`
    rebuilds the per-time state objects on demand.
    """

    times: np.ndarray
    amplitudes: np.ndarray
    method: str
    layout: str
    n_modes: int
    frame: str = "lab"
    params_digest: str = ""
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).ravel()
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.ndim != 2 or a.shape[0] != t.size:
            raise InvalidArgument("amplitudes must have shape (n_times, dim)")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise InvalidArgument("sample times must be strictly increasing")
        if self.frame not in FRAMES:
            raise InvalidArgument(f"unknown frame {self.frame!r}")
        t.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "amplitudes", a)

    def __len__(self):
        return self.times.size

    def _stokes_start(self) -> int:
        return 2 if self.layout == "full" else 1

    @property
    def c0(self) -> np.ndarray:
        return self.amplitudes[:, 0]

    @property
    def stokes(self) -> np.ndarray:
        s = self._stokes_start()
        return self.amplitudes[:, s : s + self.n_modes]

    @property
    def intermediate(self) -> Optional[np.ndarray]:
        return self.amplitudes[:, 1] if self.layout == "full" else None

    @property
    def dark(self) -> np.ndarray:
        s = self._stokes_start() + self.n_modes
        return self.amplitudes[:, s:]

    @property
    def norms(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes) ** 2, axis=1)

    def sample(self, i: int):
        t = float(self.times[i])
        row = self.amplitudes[i]
        if self.layout == "full":
            from .full_model import FullState

            return FullState(t, row[0], row[1], row[2 : 2 + self.n_modes], self.frame)
        return AmplitudeState(
            t, row[0], row[1 : 1 + self.n_modes], self.frame, row[1 + self.n_modes :]
        )

    @property
    def samples(self) -> list:
        return [self.sample(i) for i in range(len(self))]

    def replace(self, **changes) -> "Trajectory":
        kw = {k: getattr(self, k) for k in self.__dataclass_fields__}
        kw.update(changes)
        return Trajectory(**kw)


def assemble_hamiltonian(
    params: SystemParams,
    grid: ModeGrid,
    include_dark: bool = False,
    max_dim: int = MAX_DIM,
) -> HamiltonianMatrix:
    """Star-shaped Hamiltonian of the linear amplitude equations.

    ``H[0,0] = omega_p``, ``H[k,k] = omega_k + omega_31`` and
    ``H[0,k] = sqrt(n_atoms) * lambda_k`` with ``lambda_k = grid.couplings``.
    The optional dark block (phi1 at omega_p, phi_k at omega_k + omega_31)
    has no off-diagonal entries at all.
    """
    if not grid.contains(params.omega_res):
        raise InvalidArgument(
            f"two-photon resonance {params.omega_res:g} lies outside the grid"
        )
    n = grid.n_modes
    dim = 1 + n + (n + 1 if include_dark else 0)
    if dim > max_dim:
        raise TooLarge(f"Hamiltonian dimension {dim} exceeds max_dim={max_dim}")
    stokes_energy = grid.frequencies + params.omega_31
    diag = [params.omega_p, *stokes_energy]
    labels = ["psi0"] + [f"psi_k[{i}]" for i in range(n)]
    if include_dark:
        diag += [params.omega_p, *stokes_energy]
        labels += ["phi1"] + [f"phi_k[{i}]" for i in range(n)]
    h = np.diag(np.asarray(diag, dtype=float))
    row = math.sqrt(params.n_atoms) * grid.couplings
    h[0, 1 : n + 1] = row
    h[1 : n + 1, 0] = row
    return HamiltonianMatrix(
        h,
        tuple(labels),
        n,
        "effective+dark" if include_dark else "effective",
        digest=params_digest(params, grid) + ("d" if include_dark else ""),
    )


def _state_vector(state) -> np.ndarray:
    return np.asarray(state.vector(), dtype=complex)


def derivative(h: HamiltonianMatrix, state) -> np.ndarray:
    """Right-hand side dC/dt = -i H C of the amplitude equations."""
    if state.frame != "lab":
        raise InvalidFrame("derivative is defined in the lab frame only")
    c = _state_vector(state)
    if c.size != h.dim:
        raise InvalidArgument(f"state dimension {c.size} != Hamiltonian dimension {h.dim}")
    return -1j * (h.entries @ c)


# eigendecompositions keyed by Hamiltonian digest; guarded for concurrent use
_EIG_CACHE: "OrderedDict[str, list]" = OrderedDict()
_EIG_LOCK = threading.Lock()
_EIG_CACHE_SIZE = 4


def eigensystem(h: HamiltonianMatrix) -> list[tuple[np.ndarray, float, np.ndarray, np.ndarray]]:
    """Cached block eigendecomposition of ``h``.

    The matrix is split into the connected components of its off-diagonal
    pattern and each block is diagonalized on its own, so states that are
    not coupled to each other (the dark block, zero-coupling modes) never
    mix through round-off.  Returns ``(indices, offset, eigenvalues,
    eigenvectors)`` per block, with eigenvalues measured from ``offset`` (the
    block's mean diagonal) so that optical-scale energies do not swamp the
    small splittings that drive the dynamics.
    """
    key = h.digest + hashlib.sha256(h.entries.tobytes()).hexdigest()[:8]
    with _EIG_LOCK:
        hit = _EIG_CACHE.get(key)
        if hit is not None:
            _EIG_CACHE.move_to_end(key)
            return hit
    a = h.entries
    if not np.all(np.isfinite(a)) or np.max(np.abs(a - a.T)) != 0:
        raise NumericalError("Hamiltonian is not real symmetric")
    pattern = scipy.sparse.csr_matrix(a - np.diag(np.diag(a)))
    n_blocks, labels = scipy.sparse.csgraph.connected_components(pattern, directed=False)
    blocks = []
    for b in range(n_blocks):
        idx = np.flatnonzero(labels == b)
        if idx.size == 1:
            blocks.append((idx, float(a[idx[0], idx[0]]), np.zeros(1), np.ones((1, 1))))
            continue
        sub = a[np.ix_(idx, idx)]
        offset = float(np.mean(np.diag(sub)))
        sub = sub - offset * np.eye(idx.size)
        try:
            evals, evecs = scipy.linalg.eigh(sub, driver="evd")
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalError(f"eigendecomposition failed: {exc}") from exc
        blocks.append((idx, offset, evals, evecs))
    with _EIG_LOCK:
        _EIG_CACHE[key] = blocks
        while len(_EIG_CACHE) > _EIG_CACHE_SIZE:
            _EIG_CACHE.popitem(last=False)
    return blocks


def _check_times(times, t0) -> np.ndarray:
    t = np.asarray(times, dtype=float).ravel()
    if t.size == 0:
        raise InvalidArgument("need at least one sample time")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise InvalidArgument("times must be strictly increasing")
    if t[0] < t0:
        raise InvalidArgument("times must not precede the initial state")
    return t


def propagate_expm(h: HamiltonianMatrix, initial, times: Sequence[float], chunk: int = 256) -> Trajectory:
    """Exact propagation C(t) = exp(-iH(t - t0)) C(t0) by eigendecomposition.

    The decomposition is computed once per Hamiltonian and reused for every
    sample time.  Blocks that start with zero amplitude stay exactly zero.
    """
    if initial.frame != "lab":
        raise InvalidFrame("propagation starts from a lab-frame state")
    c0 = _state_vector(initial)
    if c0.size != h.dim:
        raise InvalidArgument("initial state dimension does not match the Hamiltonian")
    t = _check_times(times, initial.time)
    out = np.zeros((t.size, h.dim), dtype=complex)
    for idx, offset, evals, evecs in eigensystem(h):
        start = c0[idx]
        if not np.any(start):
            continue
        coeff = evecs.T @ start
        for s in range(0, t.size, chunk):
            tau = t[s : s + chunk] - initial.time
            phases = np.exp(-1j * np.outer(tau, evals))
            common = np.exp(-1j * offset * tau)[:, None]
            out[s : s + chunk, idx] = common * ((phases * coeff) @ evecs.T)
    return Trajectory(t, out, "expm", h.layout, h.n_modes, "lab", h.digest)


def spectral_bound(h: HamiltonianMatrix, iterations: int = 60) -> float:
    """Upper bound on max |eigenvalue| from a diagonally scaled Gershgorin test.

    For any positive vector v, max_i (|H| v)_i / v_i bounds the spectral
    radius of H (Collatz-Wielandt).  v comes from a fixed number of power
    iterations on |H| started at ones, so the result is deterministic and
    tighter than the unscaled row sums for star-shaped matrices.
    """
    a = scipy.sparse.csr_matrix(np.abs(h.entries))
    v = np.ones(h.dim)
    best = float(np.max(a @ v))
    for _ in range(iterations):
        w = a @ v
        if not np.all(w > 0):
            break
        best = min(best, float(np.max(w / v)))
        v = w / np.max(w)
    return best


def propagate_rk4(
    h: HamiltonianMatrix,
    initial,
    dt: float,
    t_max: float,
    sample_every: int = 1,
) -> Trajectory:
    """Fixed-step classical RK4 integration of dC/dt = -iHC.

    ``dt`` is an upper bound: the step is shrunk so that an integer number of
    steps lands exactly on ``t_max``.  Samples are recorded at the start,
    every ``sample_every`` steps, and at ``t_max``.  Raises
    :class:`StepTooLarge` when ``dt * spectral_bound(h) >= 0.1``.
    """
    if initial.frame != "lab":
        raise InvalidFrame("propagation starts from a lab-frame state")
    if not dt > 0:
        raise InvalidArgument("dt must be > 0")
    if not t_max > initial.time:
        raise InvalidArgument("t_max must exceed the initial time")
    if int(sample_every) != sample_every or sample_every < 1:
        raise InvalidArgument("sample_every must be a positive integer")
    c = _state_vector(initial)
    if c.size != h.dim:
        raise InvalidArgument("initial state dimension does not match the Hamiltonian")
    bound = spectral_bound(h)
    span = t_max - initial.time
    n_steps = max(1, math.ceil(span / dt - 1e-9))
    step = span / n_steps
    if step * bound >= RK4_STABILITY:
        raise StepTooLarge(
            f"dt*|H| = {step * bound:.3g} >= {RK4_STABILITY}; use dt < {RK4_STABILITY / bound:.3g}"
        )
    mi_h = scipy.sparse.csr_matrix(-1j * h.entries)
    half = 0.5 * step
    times = [initial.time]
    rows = [c.copy()]
    for i in range(1, n_steps + 1):
        k1 = mi_h @ c
        k2 = mi_h @ (c + half * k1)
        k3 = mi_h @ (c + half * k2)
        k4 = mi_h @ (c + step * k3)
        c = c + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if i % sample_every == 0 or i == n_steps:
            times.append(initial.time + i * step)
            rows.append(c.copy())
    info = {"dt": step, "n_steps": n_steps, "spectral_bound": bound}
    return Trajectory(np.array(times), np.array(rows), "rk4", h.layout, h.n_modes, "lab", h.digest, info)


def _frame_phases(traj: Trajectory, h: HamiltonianMatrix) -> np.ndarray:
    if h.dim != traj.amplitudes.shape[1]:
        raise InvalidArgument("Hamiltonian does not match the trajectory")
    return np.exp(1j * np.outer(traj.times, h.diagonal))


def to_rotating_frame(traj: Trajectory, h: HamiltonianMatrix) -> Trajectory:
    """Strip each basis state's bare phase: C~_j(t) = C_j(t) exp(i H_jj t).

    For the effective model this is C~0 = C0 e^{i omega_p t} and
    C~k = Ck e^{i(omega_k + omega_31) t}; moduli are unchanged.
    """
    if traj.frame != "lab":
        raise InvalidFrame("trajectory is already in the rotating frame")
    return traj.replace(amplitudes=traj.amplitudes * _frame_phases(traj, h), frame="rotating")


def to_lab_frame(traj: Trajectory, h: HamiltonianMatrix) -> Trajectory:
    """Inverse of :func:`to_rotating_frame`."""
    if traj.frame != "rotating":
        raise InvalidFrame("trajectory is already in the lab frame")
    return traj.replace(amplitudes=traj.amplitudes * np.conj(_frame_phases(traj, h)), frame="lab")
