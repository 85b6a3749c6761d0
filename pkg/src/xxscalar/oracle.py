"""Brute-force reference: full 2^N tensor-product density-matrix simulation.

Independent of the sector machinery; used to cross-check it on small chains.
"""

from __future__ import annotations

from functools import reduce

import numpy as np
from scipy.linalg import expm

_SX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
_I2 = np.eye(2, dtype=complex)


def _site_op(op, site, n):
    return reduce(np.kron, [op if k == site else _I2 for k in range(n)])


def full_xx_hamiltonian(couplings) -> np.ndarray:
    n = len(couplings) + 1
    h = np.zeros((2**n, 2**n), dtype=complex)
    for i, d in enumerate(couplings):
        for s in (_SX, _SY):
            h += d * _site_op(s, i, n) @ _site_op(s, i + 1, n)
    return h


def excitation_number(n: int) -> np.ndarray:
    return np.diag([bin(k).count("1") for k in range(2**n)]).astype(complex)


def sender_ket(site_amplitudes, a0) -> np.ndarray:
    """a0|0..0> + sum_n amp_n |..1_n..> on a K-qubit register, qubit 0 leftmost."""
    K = len(site_amplitudes)
    psi = np.zeros(2**K, dtype=complex)
    psi[0] = a0
    for n, a in enumerate(site_amplitudes):
        psi[1 << (K - 1 - n)] = a
    return psi


def lift_sector_operator(op_matrix, sector_states, n) -> np.ndarray:
    """Embed an operator given on a <=2-excitation SectorBasis into 2^n, identity elsewhere."""
    full = np.eye(2**n, dtype=complex)
    idx = [int("".join(map(str, s.occupations)), 2) for s in sector_states]
    full[np.ix_(idx, idx)] = op_matrix
    return full


def embed_local(op, first_site, n_local, n) -> np.ndarray:
    left = np.eye(2**first_site)
    right = np.eye(2 ** (n - first_site - n_local))
    return np.kron(np.kron(left, op), right)


def partial_trace_keep(rho, keep, n) -> np.ndarray:
    keep = sorted(keep)
    rows = list(range(n))
    cols = [k if k not in keep else n + k for k in range(n)]
    out = [k for k in keep] + [n + k for k in keep]
    t = np.einsum(rho.reshape([2] * (2 * n)), rows + cols, out)
    d = 2 ** len(keep)
    return t.reshape(d, d)


def receiver_density(couplings, layout, site_amps1, a01, site_amps2, a02, t, u_er_full) -> np.ndarray:
    """rho_R of W rho(0) W^dagger; ``u_er_full`` acts on the ER register (2^N_ER)."""
    n = layout.n_sites
    psi = sender_ket(site_amps1, a01)
    mid = n - 2 * layout.K
    if mid:
        psi = np.kron(psi, np.eye(2**mid)[:, 0])
    psi = np.kron(psi, sender_ket(site_amps2, a02))
    rho = np.outer(psi, psi.conj())
    if not layout.senders_only:
        v = expm(-1j * full_xx_hamiltonian(couplings) * t)
        rho = v @ rho @ v.conj().T
    er = layout.extended_receiver
    w = embed_local(u_er_full, er.start, len(er), n)
    rho = w @ rho @ w.conj().T
    return partial_trace_keep(rho, list(layout.receiver), n)
