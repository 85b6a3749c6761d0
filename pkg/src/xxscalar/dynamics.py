"""XX Hamiltonian on the restricted basis and its propagator."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ArgumentError, ContractViolation
from .hilbert import SectorBasis, SubsystemLayout, enumerate_basis

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class ChainSpec:
    """Nearest-neighbour couplings ``couplings[i]`` on bond (i, i+1) plus the layout."""

    couplings: tuple[float, ...]
    layout: SubsystemLayout

    def __post_init__(self):
        d = tuple(float(x) for x in self.couplings)
        object.__setattr__(self, "couplings", d)
        if len(d) != self.layout.n_sites - 1:
            raise ArgumentError(
                f"{self.layout.n_sites} sites need {self.layout.n_sites - 1} couplings, got {len(d)}"
            )
        if not np.all(np.isfinite(d)):
            raise ArgumentError("couplings must be finite")

    @property
    def n_sites(self) -> int:
        return self.layout.n_sites

    @property
    def K(self) -> int:
        return self.layout.K

    def to_dict(self) -> dict:
        lay = self.layout
        return {
            "n_sites": lay.n_sites,
            "K": lay.K,
            "channel1_length": lay.channel1_length,
            "K1": lay.K1,
            "K2": lay.K2,
            "couplings": list(self.couplings),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChainSpec":
        layout = SubsystemLayout(
            int(d["n_sites"]), int(d["K"]), int(d["channel1_length"]), int(d["K1"]), int(d["K2"])
        )
        return cls(tuple(d["couplings"]), layout)


@dataclass(frozen=True, eq=False)
class SectorOperator:
    basis: SectorBasis
    matrix: np.ndarray
    block_diagonal_by_excitation: bool = True

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (len(self.basis), len(self.basis)):
            raise ArgumentError(
                f"matrix shape {m.shape} does not match basis size {len(self.basis)}"
            )
        object.__setattr__(self, "matrix", m)
        if self.block_diagonal_by_excitation:
            n = self.basis.excitation_counts()
            leak = m[n[:, None] != n[None, :]]
            if leak.size and np.any(leak != 0):
                raise ContractViolation("operator mixes excitation sectors")

    def block(self, excitations: int) -> np.ndarray:
        sl = self.basis.sector_slice(excitations)
        return self.matrix[sl, sl]

    def dagger(self) -> "SectorOperator":
        return SectorOperator(self.basis, self.matrix.conj().T, self.block_diagonal_by_excitation)

    def __matmul__(self, other):
        if isinstance(other, SectorOperator):
            if other.basis != self.basis:
                raise ArgumentError("operators live on different bases")
            return SectorOperator(
                self.basis,
                self.matrix @ other.matrix,
                self.block_diagonal_by_excitation and other.block_diagonal_by_excitation,
            )
        return self.matrix @ other

    @classmethod
    def identity(cls, basis: SectorBasis) -> "SectorOperator":
        return cls(basis, np.eye(len(basis), dtype=complex))


def build_xx_hamiltonian(spec: ChainSpec, basis: SectorBasis) -> SectorOperator:
    """H = sum_i D_i (Ix_i Ix_{i+1} + Iy_i Iy_{i+1}) with I = sigma/2.

    The flip-flop form moves an excitation across bond i with amplitude D_i/2.
    """
    if basis.n_sites != spec.n_sites:
        raise ArgumentError(
            f"basis has {basis.n_sites} sites, chain has {spec.n_sites}"
        )
    n = basis.n_sites
    h = np.zeros((len(basis), len(basis)))
    for col, state in enumerate(basis.states):
        occ = state.occupations
        for bond in range(n - 1):
            if occ[bond] != occ[bond + 1]:
                flipped = list(occ)
                flipped[bond], flipped[bond + 1] = occ[bond + 1], occ[bond]
                row = basis.index_of[type(state)(tuple(flipped))]
                h[row, col] += 0.5 * spec.couplings[bond]
    return SectorOperator(basis, h)


def _check_hermitian(H: SectorOperator):
    m = H.matrix
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if np.abs(m - m.conj().T).max(initial=0.0) > HERMITIAN_TOL * scale:
        raise ContractViolation("operator is not Hermitian")


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenpairs of a Hermitian sector operator, reused for any t."""

    eigenvalues: np.ndarray
    eigenvectors: SectorOperator

    @property
    def basis(self) -> SectorBasis:
        return self.eigenvectors.basis

    def propagator(self, t: float) -> SectorOperator:
        q = self.eigenvectors.matrix
        v = (q * np.exp(-1j * self.eigenvalues * t)) @ q.conj().T
        return SectorOperator(self.basis, _zero_off_blocks(self.basis, v))

    def propagator_entries(self, t: float, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
        """V(t)[rows][:, cols] without forming the full matrix."""
        q = self.eigenvectors.matrix
        return (q[list(rows)] * np.exp(-1j * self.eigenvalues * t)) @ q[list(cols)].conj().T

    def evolve(self, state: np.ndarray, t: float) -> np.ndarray:
        q = self.eigenvectors.matrix
        return q @ (np.exp(-1j * self.eigenvalues * t) * (q.conj().T @ state))


def _zero_off_blocks(basis: SectorBasis, m: np.ndarray) -> np.ndarray:
    n = basis.excitation_counts()
    m = m.copy()
    m[n[:, None] != n[None, :]] = 0.0
    return m


def spectral_decompose(H: SectorOperator) -> Spectrum:
    """Diagonalize H sector by sector; eigenvalues returned in ascending order."""
    _check_hermitian(H)
    basis = H.basis
    dim = len(basis)
    values = np.empty(dim)
    vectors = np.zeros((dim, dim), dtype=complex)
    for k in range(basis.max_excitations + 1):
        sl = basis.sector_slice(k)
        lam, q = np.linalg.eigh(H.matrix[sl, sl])
        values[sl] = lam
        vectors[sl, sl] = q
    order = np.argsort(values, kind="stable")
    return Spectrum(values[order], SectorOperator(basis, vectors[:, order], block_diagonal_by_excitation=False))


def propagator(H: SectorOperator, t: float) -> SectorOperator:
    """V(t) = exp(-i H t)."""
    return spectral_decompose(H).propagator(t)


def paper_chain_spec(
    K: int,
    per_channel_length: int,
    junction_coupling: float,
    end_couplings: tuple[float, float],
    bulk_coupling: float = 1.0,
    er_per_channel: int | None = None,
) -> ChainSpec:
    """Mirror-symmetric two-channel line with optimized boundary pairs.

    Bonds next to either end of each channel take ``end_couplings``; the
    single bond between the channels is ``junction_coupling``; everything
    else is ``bulk_coupling``.
    """
    L = per_channel_length
    if K < 1 or L < K:
        raise ArgumentError(f"channel length {L} cannot hold a {K}-qubit sender")
    N = 2 * L
    d = np.full(N - 1, float(bulk_coupling))
    # 1-based bond labels D_1..D_{N-1}; later assignments win on short chains
    for bonds, value in (
        ((2, L - 2, L + 2, N - 2), end_couplings[1]),
        ((1, L - 1, L + 1, N - 1), end_couplings[0]),
    ):
        for b in bonds:
            if 1 <= b <= N - 1 and b != L:
                d[b - 1] = value
    d[L - 1] = junction_coupling
    layout = SubsystemLayout.symmetric(K, L, er_per_channel)
    return ChainSpec(tuple(d), layout)


def senders_only_spec(K: int, coupling: float = 1.0) -> ChainSpec:
    """The 2K-site line: no transmission lines, the extended receiver is everything."""
    return ChainSpec((float(coupling),) * (2 * K - 1), SubsystemLayout.symmetric(K, K))


def evolution_basis(spec: ChainSpec) -> SectorBasis:
    return enumerate_basis(spec.n_sites, min(2, spec.n_sites))
