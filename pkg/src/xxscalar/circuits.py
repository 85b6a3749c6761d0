"""CNOT / rotation circuits for the extended-receiver unitary.

Registers use the computational basis with qubit 0 as the most significant
bit and |1> the excited spin. A :class:`Circuit` lists gates in the order they
are printed in an operator product, and its matrix is that product read left
to right: ``G0 @ G1 @ ... @ Gn`` (so the last gate acts on a state first).
E-block formulas and the UER circuits below are written in this convention,
which reproduces the W2 block exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import ArgumentError
from .hilbert import enumerate_basis

_I2 = np.eye(2, dtype=complex)
_P0 = np.diag([1.0, 0.0]).astype(complex)
_P1 = np.diag([0.0, 1.0]).astype(complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)


@dataclass(frozen=True)
class Gate:
    kind: str  # "CNOT", "RY" or "RZ"
    sites: tuple[int, ...]
    angle: float = 0.0

    def __post_init__(self):
        if self.kind == "CNOT":
            if len(self.sites) != 2 or self.sites[0] == self.sites[1]:
                raise ArgumentError(f"CNOT needs distinct (control, target), got {self.sites}")
        elif self.kind in ("RY", "RZ"):
            if len(self.sites) != 1:
                raise ArgumentError(f"{self.kind} acts on one site, got {self.sites}")
        else:
            raise ArgumentError(f"unknown gate kind {self.kind!r}")

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "sites": list(self.sites)}
        if self.kind != "CNOT":
            d["angle"] = self.angle
        return d

    def inverse(self) -> "Gate":
        return self if self.kind == "CNOT" else Gate(self.kind, self.sites, -self.angle)


def cnot(control: int, target: int) -> Gate:
    return Gate("CNOT", (control, target))


def ry(site: int, beta: float) -> Gate:
    return Gate("RY", (site,), float(beta))


def rz(site: int, beta: float) -> Gate:
    return Gate("RZ", (site,), float(beta))


@dataclass
class Circuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise ArgumentError("circuits act on registers of different size")
        return Circuit(self.n_qubits, self.gates + other.gates)

    def adjoint(self) -> "Circuit":
        return Circuit(self.n_qubits, [g.inverse() for g in reversed(self.gates)])

    def to_list(self) -> list[dict]:
        return [g.to_dict() for g in self.gates]


def ry_matrix(beta: float) -> np.ndarray:
    """exp(i beta I_y)."""
    c, s = math.cos(beta / 2), math.sin(beta / 2)
    return np.array([[c, s], [-s, c]], dtype=complex)


def rz_matrix(beta: float) -> np.ndarray:
    """exp(i beta I_z)."""
    return np.diag([np.exp(0.5j * beta), np.exp(-0.5j * beta)])


def _on_site(op: np.ndarray, site: int, n: int) -> np.ndarray:
    return reduce(np.kron, [op if k == site else _I2 for k in range(n)])


def gate_matrix(g: Gate, n_qubits: int) -> np.ndarray:
    if any(not 0 <= s < n_qubits for s in g.sites):
        raise ArgumentError(f"gate {g} outside a {n_qubits}-qubit register")
    if g.kind == "RY":
        return _on_site(ry_matrix(g.angle), g.sites[0], n_qubits)
    if g.kind == "RZ":
        return _on_site(rz_matrix(g.angle), g.sites[0], n_qubits)
    c, t = g.sites
    idle = reduce(np.kron, [_P0 if k == c else _I2 for k in range(n_qubits)])
    flip = reduce(
        np.kron, [_P1 if k == c else (_X if k == t else _I2) for k in range(n_qubits)]
    )
    return idle + flip


def _cnot_permutation(control: int, target: int, n: int) -> np.ndarray:
    idx = np.arange(2**n)
    cbit = 1 << (n - 1 - control)
    tbit = 1 << (n - 1 - target)
    return np.where(idx & cbit, idx ^ tbit, idx)


def apply_circuit(circuit: Circuit, x: np.ndarray) -> np.ndarray:
    """circuit matrix @ x without forming gate matrices; x has shape (2^n, ...)."""
    n = circuit.n_qubits
    x = np.asarray(x, dtype=complex)
    trailing = x.shape[1:]
    x = x.reshape(2**n, -1)
    for g in reversed(circuit.gates):
        if g.kind == "CNOT":
            x = x[_cnot_permutation(*g.sites, n)]
            continue
        k = g.sites[0]
        op = ry_matrix(g.angle) if g.kind == "RY" else rz_matrix(g.angle)
        x = np.einsum("ab,ibjc->iajc", op, x.reshape(2**k, 2, 2 ** (n - k - 1), -1))
        x = x.reshape(2**n, -1)
    return x.reshape((2**n,) + trailing)


def compose(circuit: Circuit) -> np.ndarray:
    """Ordered product of the gate matrices, first listed gate leftmost."""
    return apply_circuit(circuit, np.eye(2**circuit.n_qubits, dtype=complex))


def e_block_z(i: int, j: int, alpha: float, beta: float, n_qubits: int = 2) -> Circuit:
    """C_ij Rz_i(a) Ry_i(b) Rz_i(-a) C_ji Rz_i(a) Ry_i(-b) Rz_i(-a) C_ij."""
    return Circuit(
        n_qubits,
        [
            cnot(i, j),
            rz(i, alpha),
            ry(i, beta),
            rz(i, -alpha),
            cnot(j, i),
            rz(i, alpha),
            ry(i, -beta),
            rz(i, -alpha),
            cnot(i, j),
        ],
    )


def e_block(i: int, j: int, beta: float, n_qubits: int = 2) -> Circuit:
    """C_ij Ry_i(b) C_ji Ry_i(-b) C_ij; conserves the excitation number of (i, j)."""
    return Circuit(n_qubits, [cnot(i, j), ry(i, beta), cnot(j, i), ry(i, -beta), cnot(i, j)])


def sector_projector(n_qubits: int, excitations: int) -> np.ndarray:
    """Computational indices of the given sector, in SectorBasis order."""
    basis = enumerate_basis(n_qubits, n_qubits)
    sl = basis.sector_slice(excitations)
    return np.array(
        [int("".join(map(str, s.occupations)), 2) for s in basis.states[sl]], dtype=int
    )


def sector_block(matrix: np.ndarray, n_qubits: int, excitations: int) -> np.ndarray:
    idx = sector_projector(n_qubits, excitations)
    return matrix[np.ix_(idx, idx)]


TWO_QUBIT_PAIRS_SIX_BLOCK = ((0, 1), (1, 2), (2, 3), (3, 2), (2, 1), (1, 0))

# Reference rotation pairs (alpha_k, beta_k) of the six-block circuit for the
# 40-node line at t = 26.441.
UER2_ALPHAS = (0.056765, 6.276980, 6.134857, 6.184914, 6.263752, 6.226368)
UER2_BETAS = (5.496129, 1.577448, 0.320085, 0.471440, 1.562174, 0.786962)

# Hyperspherical angles of the tuned column for the same line.
FORTY_NODE_ALPHAS = (3.135160, 1.570857, 4.712397, 5.497855, 1.581785)
FORTY_NODE_PHIS = (5.526328, 0.000065, 1.497402, 0.999731, 3.141532, 1.319482)


def six_block_circuit(alphas: Sequence[float], betas: Sequence[float]) -> Circuit:
    """E_01 E_12 E_23 E_32 E_21 E_10 with per-block (alpha, beta) on four qubits."""
    if len(alphas) != 6 or len(betas) != 6:
        raise ArgumentError("six-block circuit needs six alphas and six betas")
    out = Circuit(4)
    for (i, j), a, b in zip(TWO_QUBIT_PAIRS_SIX_BLOCK, alphas, betas):
        out = out + e_block_z(i, j, a, b, n_qubits=4)
    return out


def uer1_circuit() -> Circuit:
    """E_01(0) E_23(pi/4) E_12(-pi/2) E_23(pi/4) E_01(pi/4): reproduces W2."""
    q = math.pi / 4
    out = Circuit(4)
    for i, j, b in ((0, 1, 0.0), (2, 3, q), (1, 2, -2 * q), (2, 3, q), (0, 1, q)):
        out = out + e_block(i, j, b, n_qubits=4)
    return out


def uer2_circuit() -> Circuit:
    return six_block_circuit(UER2_ALPHAS, UER2_BETAS)


def uer12_circuit(phi: float = math.pi / 8) -> Circuit:
    return six_block_circuit(
        [0.0] * 6, [2 * phi, 4 * phi, -phi, -phi, 4 * phi, -2 * phi]
    )


@dataclass(frozen=True)
class DecompositionReport:
    max_error: float
    passed: bool
    worst_entry: tuple[int, ...]
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "max_error": self.max_error,
            "passed": self.passed,
            "worst_entry": list(self.worst_entry),
            "tolerance": self.tolerance,
        }


def verify_decomposition(
    circuit: Circuit,
    target: np.ndarray,
    sector: int,
    tolerance: float,
    column: int | None = None,
) -> DecompositionReport:
    """Compare the circuit's sector block (or one of its columns) with ``target``.

    ``target`` is in SectorBasis order: a full block, or a vector when
    ``column`` selects a single column of the block.
    """
    block = sector_block(compose(circuit), circuit.n_qubits, sector)
    got = block if column is None else block[:, column]
    target = np.asarray(target, dtype=complex)
    if got.shape != target.shape:
        raise ArgumentError(f"target shape {target.shape} does not match {got.shape}")
    err = np.abs(got - target)
    worst = np.unravel_index(int(np.argmax(err)), err.shape) if err.size else ()
    max_err = float(err.max(initial=0.0))
    return DecompositionReport(
        max_err, max_err <= tolerance, tuple(int(w) for w in worst), tolerance
    )


def fit_six_block(
    column: np.ndarray,
    target: int,
    seed: int = 0,
    restarts: int = 32,
    tolerance: float = 1e-10,
) -> tuple[Circuit, DecompositionReport]:
    """Find (alpha_k, beta_k) so the six-block circuit's two-excitation column
    ``target`` equals ``column`` (SectorBasis order, four-qubit register)."""
    column = np.asarray(column, dtype=complex)
    if column.shape != (6,):
        raise ArgumentError("six-block fit needs a four-qubit register (column of length 6)")
    idx = sector_projector(4, 2)
    e_t = np.zeros(16, dtype=complex)
    e_t[idx[target]] = 1.0

    def residual(x):
        got = apply_circuit(six_block_circuit(x[:6], x[6:]), e_t)[idx]
        d = got - column
        return np.concatenate([d.real, d.imag])

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(restarts, 1)):
        x0 = rng.uniform(0, 2 * math.pi, 12)
        sol = least_squares(residual, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        err = float(np.abs(residual(sol.x)).max())
        if best is None or err < best[0]:
            best = (err, sol.x)
        if err <= tolerance:
            break
    x = np.mod(best[1], 2 * math.pi)
    circ = six_block_circuit(x[:6], x[6:])
    return circ, verify_decomposition(circ, column, 2, tolerance, column=target)
