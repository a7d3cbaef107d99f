"""Brute-force reference computations built on explicit tensor products.

None of this code shares logic with the package; it is deliberately slow
and literal.
"""

import itertools
import math

import numpy as np


def _embed(op, site, dims):
    mats = [np.eye(d) for d in dims]
    mats[site] = op
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def _basis_index(occ, dims):
    idx = 0
    for o, d in zip(occ, dims):
        idx = idx * d + o
    return idx


def _transition(n_levels, i, j):
    """|i><j| for a single atom with levels numbered from 1."""
    m = np.zeros((n_levels, n_levels))
    m[i - 1, j - 1] = 1.0
    return m


LOWER = np.array([[0.0, 1.0], [0.0, 0.0]])  # photon annihilation on {0,1}


def full_three_level(n_atoms, omega_p, detuning2, omega_31, g_p, stokes_omegas, g_s):
    """Full N-atom x pump x Stokes Hamiltonian and the symmetric basis vectors.

    Atoms have levels 1, 2, 3 with energies 0, omega_p + detuning2, omega_31.
    Returns (H, basis) where basis columns are psi0, psi1, psi_k.
    """
    m = len(stokes_omegas)
    dims = [3] * n_atoms + [2] + [2] * m
    dim = int(np.prod(dims))
    pump = n_atoms
    h = omega_p * _embed(LOWER.T @ LOWER, pump, dims)
    for k, w in enumerate(stokes_omegas):
        h += w * _embed(LOWER.T @ LOWER, pump + 1 + k, dims)
    e2 = omega_p + detuning2
    a_p = _embed(LOWER, pump, dims)
    for f in range(n_atoms):
        h += e2 * _embed(_transition(3, 2, 2), f, dims)
        h += omega_31 * _embed(_transition(3, 3, 3), f, dims)
        r21 = _embed(_transition(3, 2, 1), f, dims)
        term = g_p * r21 @ a_p
        h += term + term.T
        r32 = _embed(_transition(3, 3, 2), f, dims)
        for k in range(m):
            b_dag = _embed(LOWER.T, pump + 1 + k, dims)
            term = g_s[k] * r32 @ b_dag
            h += term + term.T

    def ket(levels, n_pump, stokes_mode):
        occ = list(levels) + [n_pump] + [1 if k == stokes_mode else 0 for k in range(m)]
        v = np.zeros(dim)
        v[_basis_index([o - 1 if i < n_atoms else o for i, o in enumerate(occ)], dims)] = 1.0
        return v

    def w_state(level, n_pump, stokes_mode):
        v = np.zeros(dim)
        for f in range(n_atoms):
            levels = [1] * n_atoms
            levels[f] = level
            v += ket(levels, n_pump, stokes_mode)
        return v / math.sqrt(n_atoms)

    cols = [ket([1] * n_atoms, 1, None), w_state(2, 0, None)]
    cols += [w_state(3, 0, k) for k in range(m)]
    return h, np.column_stack(cols)


def effective_two_level(n_atoms, omega_p, omega_31, lam, stokes_omega):
    """Effective Raman Hamiltonian sum_f lam (R31(f) b^+ a + h.c.) plus H0.

    Atoms are two-level {1, 3}; a single Stokes mode.  Returns (H, basis)
    with basis columns psi0 and the symmetric psi_S.
    """
    dims = [2] * n_atoms + [2, 2]
    dim = int(np.prod(dims))
    pump, stokes = n_atoms, n_atoms + 1
    num = LOWER.T @ LOWER
    h = omega_p * _embed(num, pump, dims) + stokes_omega * _embed(num, stokes, dims)
    a = _embed(LOWER, pump, dims)
    b_dag = _embed(LOWER.T, stokes, dims)
    r31 = np.array([[0.0, 0.0], [1.0, 0.0]])  # |3><1| on (|1>, |3>)
    for f in range(n_atoms):
        h += omega_31 * _embed(np.diag([0.0, 1.0]), f, dims)
        term = lam * _embed(r31, f, dims) @ b_dag @ a
        h += term + term.T
    psi0 = np.zeros(dim)
    psi0[_basis_index([0] * n_atoms + [1, 0], dims)] = 1.0
    w = np.zeros(dim)
    for f in range(n_atoms):
        occ = [0] * n_atoms + [0, 1]
        occ[f] = 1
        w[_basis_index(occ, dims)] = 1.0
    return h, np.column_stack([psi0, w / math.sqrt(n_atoms)])


def reduced_density_bruteforce(c0, ck):
    """Two-atom state from (C0, C_k) via an explicit partial trace over the fields.

    Atom qubits use |1> -> 0 and |3> -> 1; field = pump {0,1} x Stokes modes {0,1}^M.
    """
    m = len(ck)
    field_dims = [2] + [2] * m
    n_field = int(np.prod(field_dims))
    psi = np.zeros((4, n_field), dtype=complex)
    vac_pump1 = _basis_index([1] + [0] * m, field_dims)
    psi[0b00, vac_pump1] += c0
    for k, amp in enumerate(ck):
        f = _basis_index([0] + [1 if j == k else 0 for j in range(m)], field_dims)
        psi[0b10, f] += amp / math.sqrt(2)  # |31>
        psi[0b01, f] += amp / math.sqrt(2)  # |13>
    return psi @ psi.conj().T


def wootters_bruteforce(rho):
    """Concurrence from the non-Hermitian product rho (YxY) rho* (YxY)."""
    y = np.array([[0, -1j], [1j, 0]])
    yy = np.kron(y, y)
    r = rho @ yy @ rho.conj() @ yy
    ev = np.linalg.eigvals(r)
    lam = np.sort(np.sqrt(np.abs(ev.real)))[::-1]
    return max(0.0, lam[0] - lam[1] - lam[2] - lam[3])


def random_density(rng, rank=None):
    rank = rank or rng.integers(1, 5)
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def all_symmetric(n_atoms):
    return list(itertools.permutations(range(n_atoms)))
