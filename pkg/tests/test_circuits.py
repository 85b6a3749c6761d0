import math
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xxscalar.circuits import (
    Circuit,
    apply_circuit,
    cnot,
    compose,
    e_block,
    e_block_z,
    fit_six_block,
    gate_matrix,
    ry,
    ry_matrix,
    rz,
    rz_matrix,
    sector_block,
    six_block_circuit,
    uer1_circuit,
    uer12_circuit,
    uer2_circuit,
    verify_decomposition,
)
from xxscalar.errors import ArgumentError
from xxscalar.tuner import w2_block

SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])


def _num_op(n):
    return np.diag([bin(k).count("1") for k in range(2**n)])


def _kron_product(circuit):
    return reduce(np.matmul, [gate_matrix(g, circuit.n_qubits) for g in circuit.gates], np.eye(2**circuit.n_qubits))


def test_rotation_identities():
    np.testing.assert_allclose(ry_matrix(0.0), np.eye(2))
    np.testing.assert_allclose(rz_matrix(0.0), np.eye(2))
    for b in (0.3, 1.7, -2.2):
        np.testing.assert_allclose(ry_matrix(b) @ ry_matrix(-b), np.eye(2), atol=1e-15)
        np.testing.assert_allclose(rz_matrix(b) @ rz_matrix(-b), np.eye(2), atol=1e-15)
    # exp(i b sigma_y / 2) at b = pi
    np.testing.assert_allclose(ry_matrix(math.pi), [[0, 1], [-1, 0]], atol=1e-15)


def test_cnot_squared_and_matrix():
    c = gate_matrix(cnot(0, 1), 2)
    np.testing.assert_array_equal(c, [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    np.testing.assert_array_equal(c @ c, np.eye(4))


def test_three_cnots_swap():
    circ = Circuit(2, [cnot(0, 1), cnot(1, 0), cnot(0, 1)])
    np.testing.assert_array_equal(compose(circ).real, SWAP)
    # E block at beta = 0 reduces to the same swap
    np.testing.assert_allclose(compose(e_block(0, 1, 0.0)), SWAP, atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.floats(-7, 7), st.floats(-7, 7))
def test_e_block_conserves_number(alpha, beta):
    n = _num_op(2)
    for c in (e_block(0, 1, beta), e_block_z(0, 1, alpha, beta), e_block_z(1, 0, alpha, beta)):
        e = compose(c)
        assert np.abs(e @ n - n @ e).max() < 1e-14
        assert np.abs(e @ e.conj().T - np.eye(4)).max() < 1e-14


def test_alpha_zero_reduces():
    np.testing.assert_allclose(compose(e_block_z(0, 1, 0.0, 0.9)), compose(e_block(0, 1, 0.9)), atol=1e-15)


def test_compose_matches_kron_product(rng):
    gates = []
    for _ in range(25):
        k = rng.integers(3)
        if k == 0:
            i, j = rng.choice(4, 2, replace=False)
            gates.append(cnot(int(i), int(j)))
        elif k == 1:
            gates.append(ry(int(rng.integers(4)), rng.uniform(-3, 3)))
        else:
            gates.append(rz(int(rng.integers(4)), rng.uniform(-3, 3)))
    circ = Circuit(4, gates)
    np.testing.assert_allclose(compose(circ), _kron_product(circ), atol=1e-13)
    x = rng.normal(size=16)
    np.testing.assert_allclose(apply_circuit(circ, x), _kron_product(circ) @ x, atol=1e-13)


def test_empty_and_adjoint(rng):
    np.testing.assert_array_equal(compose(Circuit(3)), np.eye(8))
    circ = six_block_circuit(rng.uniform(0, 6, 6), rng.uniform(0, 6, 6))
    np.testing.assert_allclose(compose(circ) @ compose(circ.adjoint()), np.eye(16), atol=1e-13)


def test_gate_validation():
    with pytest.raises(ArgumentError):
        cnot(1, 1)
    with pytest.raises(ArgumentError):
        gate_matrix(ry(4, 0.1), 4)
    with pytest.raises(ArgumentError):
        six_block_circuit([0] * 5, [0] * 6)


def test_six_block_conserves_number(rng):
    e = compose(six_block_circuit(rng.uniform(0, 6, 6), rng.uniform(0, 6, 6)))
    n = _num_op(4)
    assert np.abs(e @ n - n @ e).max() < 1e-13


def test_uer1_reproduces_w2():
    rep = verify_decomposition(uer1_circuit(), w2_block(), 2, 1e-12)
    assert rep.passed, rep


def test_uer12_column():
    rep = verify_decomposition(uer12_circuit(), w2_block()[:, 3], 2, 1e-12, column=3)
    assert rep.passed, rep


def test_uer2_unitary_on_sector():
    block = sector_block(compose(uer2_circuit()), 4, 2)
    assert np.abs(block @ block.conj().T - np.eye(6)).max() < 1e-12


def test_verify_shape_mismatch():
    with pytest.raises(ArgumentError):
        verify_decomposition(uer1_circuit(), np.eye(4), 2, 1e-9)


def test_fit_six_block_recovers_column():
    col = w2_block()[:, 3]
    circ, rep = fit_six_block(col, 3, seed=0, restarts=8)
    assert rep.passed and rep.max_error <= 1e-10
    assert len(circ.gates) == 54
