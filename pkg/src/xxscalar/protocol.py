"""Encoding, evolution and receiver read-out of the scalar-product protocol."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dynamics import ChainSpec, SectorOperator, Spectrum, build_xx_hamiltonian, evolution_basis, spectral_decompose
from .errors import (
    ArgumentError,
    ContractViolation,
    DegenerateScaleError,
    EncodingError,
    NormalizationError,
)
from .hilbert import BasisState, SectorBasis, SubsystemLayout, enumerate_basis, factorize, state_index

NORM_TOL = 1e-12


@dataclass(frozen=True)
class SenderState:
    """One-excitation pure sender state a0|0> + sum_n a_{K-n+1}|n>."""

    K: int
    a0: float
    v: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(float(x) for x in self.v))
        if len(self.v) != self.K:
            raise ArgumentError(f"vector has {len(self.v)} components, sender has K={self.K}")
        if self.a0 == 0:
            raise EncodingError("vacuum amplitude a0 must be nonzero")
        norm2 = self.a0**2 + sum(x * x for x in self.v)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise NormalizationError(f"a0^2 + |v|^2 = {norm2!r}, expected 1")

    def amplitude_of_site(self, n: int) -> float:
        """Amplitude on local sender site n (1-based)."""
        if not 1 <= n <= self.K:
            raise ArgumentError(f"sender site {n} outside 1..{self.K}")
        return self.v[self.K - n]

    @property
    def site_amplitudes(self) -> np.ndarray:
        return np.array(self.v[::-1])

    @property
    def amplitudes(self) -> np.ndarray:
        """(a0, amplitude on local site 1, ..., amplitude on local site K)."""
        return np.concatenate([[self.a0], self.site_amplitudes])


def encode_sender(K: int, v, a0: float | None = None) -> SenderState:
    v = np.asarray(v, dtype=float)
    norm2 = float(v @ v)
    if a0 is None:
        if norm2 >= 1.0:
            raise NormalizationError(f"|v|^2 = {norm2!r} must be < 1")
        a0 = float(np.sqrt(1.0 - norm2))
    if a0 == 0:
        raise EncodingError("vacuum amplitude a0 must be nonzero (the scale factor would vanish)")
    return SenderState(K, float(a0), tuple(v))


def assemble_initial_state(
    spec: ChainSpec, psi1: SenderState, psi2: SenderState, basis: SectorBasis | None = None
) -> np.ndarray:
    """psi1 (x) |0...0>_{TL1,R,TL2} (x) psi2 on the <=2-excitation basis."""
    layout = spec.layout
    if psi1.K != layout.K or psi2.K != layout.K:
        raise ArgumentError(f"senders must have K={layout.K} sites")
    basis = evolution_basis(spec) if basis is None else basis
    if basis.n_sites != spec.n_sites or basis.max_excitations < 2:
        raise ArgumentError("basis must span the chain with up to two excitations")
    n = spec.n_sites
    sites1, sites2 = layout.sender_sites(1), layout.sender_sites(2)
    psi = np.zeros(len(basis), dtype=complex)

    def put(sites, amp):
        psi[state_index(basis, BasisState.from_sites(n, sites))] += amp

    put((), psi1.a0 * psi2.a0)
    for i, a in enumerate(psi1.v):
        put((sites1[i],), a * psi2.a0)
    for j, b in enumerate(psi2.v):
        put((sites2[j],), psi1.a0 * b)
    for i, a in enumerate(psi1.v):
        for j, b in enumerate(psi2.v):
            put((sites1[i], sites2[j]), a * b)
    return psi


@lru_cache(maxsize=16)
def _factorization(basis: SectorBasis, sites: tuple[int, ...], sub_max: int):
    sub = enumerate_basis(len(sites), sub_max)
    rest_id, inner, n_rest = factorize(basis, sites, sub)
    return sub, rest_id, inner, n_rest


def er_basis(layout: SubsystemLayout) -> SectorBasis:
    return enumerate_basis(layout.n_er, 2)


def apply_local_operator(
    basis: SectorBasis, state: np.ndarray, sites: tuple[int, ...], op: SectorOperator
) -> np.ndarray:
    """(1 (x) op (x) 1) applied to a state vector; ``op`` acts on ``sites``."""
    sub, rest_id, inner, n_rest = _factorization(basis, tuple(sites), op.basis.max_excitations)
    if op.basis != sub:
        raise ContractViolation("local operator basis does not match the target sites")
    table = np.zeros((n_rest, len(sub)), dtype=complex)
    table[rest_id, inner] = state
    table = table @ op.matrix.T
    return table[rest_id, inner]


def _check_er_unitary(layout: SubsystemLayout, u_er: SectorOperator):
    if u_er.basis.n_sites != layout.n_er:
        raise ContractViolation(
            f"U_ER acts on {u_er.basis.n_sites} sites, extended receiver has {layout.n_er}"
        )
    m = u_er.matrix
    n = u_er.basis.excitation_counts()
    if np.abs(m[n[:, None] != n[None, :]]).max(initial=0.0) > 1e-12:
        raise ContractViolation("U_ER does not conserve the excitation number")
    if np.abs(m @ m.conj().T - np.eye(len(m))).max() > 1e-10:
        raise ContractViolation("U_ER is not unitary")


def chain_spectrum(spec: ChainSpec, basis: SectorBasis | None = None) -> Spectrum:
    basis = evolution_basis(spec) if basis is None else basis
    return spectral_decompose(build_xx_hamiltonian(spec, basis))


def apply_full_transformation(
    spec: ChainSpec,
    state: np.ndarray,
    t: float,
    u_er: SectorOperator,
    basis: SectorBasis | None = None,
    spectrum: Spectrum | None = None,
) -> np.ndarray:
    """W psi = (1 (x) U_ER (x) 1) V(t) psi; the senders-only line skips V."""
    layout = spec.layout
    _check_er_unitary(layout, u_er)
    basis = evolution_basis(spec) if basis is None else basis
    if not layout.senders_only:
        spectrum = chain_spectrum(spec, basis) if spectrum is None else spectrum
        state = spectrum.evolve(state, t)
    return apply_local_operator(basis, state, tuple(layout.extended_receiver), u_er)


def reduce_to_receiver(state: np.ndarray, basis: SectorBasis, layout: SubsystemLayout) -> np.ndarray:
    """Receiver density matrix in the order 00, 01, 10, 11.

    Accepts a state vector or a density matrix over ``basis``; the first bit
    is the channel-1 end node.
    """
    sites = tuple(layout.receiver)
    sub, rest_id, inner, n_rest = _factorization(basis, sites, 2)
    # sub-basis order 00, 10, 01, 11 -> receiver order 00, 01, 10, 11
    to_rx = np.array([int("".join(map(str, s.occupations)), 2) for s in sub.states])
    code = to_rx[inner]
    state = np.asarray(state)
    if state.ndim == 1:
        table = np.zeros((n_rest, 4), dtype=complex)
        table[rest_id, code] = state
        return table.T @ table.conj()
    rho = np.zeros((4, 4), dtype=complex)
    same_rest = rest_id[:, None] == rest_id[None, :]
    rows, cols = np.nonzero(same_rest)
    np.add.at(rho, (code[rows], code[cols]), state[rows, cols])
    return rho


def coherence_matrix(rho: np.ndarray, order: int) -> np.ndarray:
    """Order-``order`` coherence block: entries (a, b) with n(b) - n(a) = order."""
    n_qubits = int(np.log2(rho.shape[0]))
    n = np.array([bin(i).count("1") for i in range(2**n_qubits)])
    rows = [a for a in range(len(n)) if (n[a] + order) in n]
    cols = [b for b in range(len(n)) if (n[b] - order) in n]
    block = rho[np.ix_(rows, cols)].copy()
    block[n[rows][:, None] + order != n[cols][None, :]] = 0.0
    return block


def corner_element(rho_receiver: np.ndarray) -> complex:
    """The (00;11) entry: the single element of the order +2 coherence matrix."""
    return complex(rho_receiver[0, 3])


def coherence_intensity(rho_receiver: np.ndarray) -> float:
    """I2 = Tr rho^(+2) rho^(-2)."""
    plus = coherence_matrix(rho_receiver, 2)
    minus = coherence_matrix(rho_receiver, -2)
    return float(np.trace(plus @ minus).real)


@dataclass(frozen=True)
class ReceiverReport:
    rho_receiver: np.ndarray
    corner: complex
    intensity_I2: float
    scale_S: float
    recovered_dot: float
    imag_residue: float

    def to_dict(self) -> dict:
        return {
            "corner": [self.corner.real, self.corner.imag],
            "intensity_I2": self.intensity_I2,
            "scale_S": self.scale_S,
            "recovered_dot": self.recovered_dot,
            "imag_residue": self.imag_residue,
            "rho_receiver": {
                "real": self.rho_receiver.real.tolist(),
                "imag": self.rho_receiver.imag.tolist(),
            },
        }


def run_protocol(
    spec: ChainSpec,
    v1,
    v2,
    t: float,
    u_er: SectorOperator,
    s: float,
    basis: SectorBasis | None = None,
    spectrum: Spectrum | None = None,
) -> ReceiverReport:
    """Full pipeline for real vectors; ``s`` is the scale factor of the tuned U_ER."""
    K = spec.K
    psi1, psi2 = encode_sender(K, v1), encode_sender(K, v2)
    scale = s * psi1.a0 * psi2.a0
    if scale == 0:
        raise DegenerateScaleError("scale factor S is zero, scalar product not recoverable")
    basis = evolution_basis(spec) if basis is None else basis
    psi = assemble_initial_state(spec, psi1, psi2, basis)
    out = apply_full_transformation(spec, psi, t, u_er, basis, spectrum)
    rho = reduce_to_receiver(out, basis, spec.layout)
    corner = corner_element(rho)
    return ReceiverReport(
        rho_receiver=rho,
        corner=corner,
        intensity_I2=coherence_intensity(rho),
        scale_S=float(scale),
        recovered_dot=corner.real / scale,
        imag_residue=corner.imag,
    )


def is_density_matrix(rho: np.ndarray, tol: float = 1e-10) -> bool:
    herm = np.abs(rho - rho.conj().T).max() <= tol
    trace = abs(np.trace(rho) - 1.0) <= tol
    psd = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() >= -tol
    return bool(herm and trace and psd)
