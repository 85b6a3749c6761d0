import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xxscalar import oracle
from xxscalar.dynamics import (
    ChainSpec,
    SectorOperator,
    build_xx_hamiltonian,
    paper_chain_spec,
    propagator,
    senders_only_spec,
    spectral_decompose,
)
from xxscalar.errors import ArgumentError, ContractViolation
from xxscalar.hilbert import BasisState, SubsystemLayout, enumerate_basis, state_index


def _chain(couplings, K=1):
    n = len(couplings) + 1
    return ChainSpec(tuple(couplings), SubsystemLayout(n, K, n // 2, 1, 1))


def _project_full(h_full, basis):
    idx = [int(str(s), 2) for s in basis.states]
    return h_full[np.ix_(idx, idx)]


def test_two_site_one_excitation_block():
    spec = _chain([1.0])
    h = build_xx_hamiltonian(spec, enumerate_basis(2, 1))
    np.testing.assert_allclose(h.block(1), [[0, 0.5], [0.5, 0]], atol=0)


def test_three_site_two_excitation_entries():
    spec = _chain([1.0, 1.0])
    basis = enumerate_basis(3, 2)
    h = build_xx_hamiltonian(spec, basis).matrix
    full = oracle.full_xx_hamiltonian([1.0, 1.0])
    i110, i101, i011 = (state_index(basis, BasisState.from_string(s)) for s in ("110", "101", "011"))
    assert h[i110, i101] == pytest.approx(full[0b110, 0b101].real) == pytest.approx(0.5)
    assert h[i110, i011] == 0 == full[0b110, 0b011]


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-2, 2, allow_nan=False), min_size=1, max_size=4))
def test_sector_matches_full_tensor_product(couplings):
    n = len(couplings) + 1
    basis = enumerate_basis(n, min(2, n))
    h = build_xx_hamiltonian(_chain(couplings), basis)
    full = oracle.full_xx_hamiltonian(couplings)
    np.testing.assert_allclose(h.matrix, _project_full(full, basis), atol=1e-15)
    # full H never leaves an excitation sector
    num = oracle.excitation_number(n)
    assert np.abs(full @ num - num @ full).max() < 1e-14


def test_hamiltonian_hermitian_and_conserving(forty_node):
    spec, _ = forty_node
    basis = enumerate_basis(40, 2)
    h = build_xx_hamiltonian(spec, basis)
    assert np.array_equal(h.matrix, h.matrix.conj().T)
    n = basis.excitation_counts()
    assert np.all(h.matrix[n[:, None] != n[None, :]] == 0)
    assert np.all(np.diag(h.matrix) == 0)


def test_size_mismatch():
    with pytest.raises(ArgumentError):
        build_xx_hamiltonian(_chain([1.0, 1.0]), enumerate_basis(4, 2))


def test_propagator_identity_at_zero():
    h = build_xx_hamiltonian(_chain([0.3, 0.7, 1.1]), enumerate_basis(4, 2))
    np.testing.assert_allclose(propagator(h, 0.0).matrix, np.eye(11), atol=1e-15)


def test_two_site_perfect_transfer():
    basis = enumerate_basis(2, 1)
    v = propagator(build_xx_hamiltonian(_chain([1.0]), basis), math.pi).matrix
    amp = v[state_index(basis, BasisState.from_string("10")), state_index(basis, BasisState.from_string("01"))]
    assert abs(amp) ** 2 == pytest.approx(1.0, abs=1e-14)
    # sin^2(D t / 2) at other times
    v = propagator(build_xx_hamiltonian(_chain([1.0]), basis), 1.0).matrix
    assert abs(v[1, 2]) ** 2 == pytest.approx(math.sin(0.5) ** 2, abs=1e-14)


def test_propagator_group_and_unitarity(rng):
    h = build_xx_hamiltonian(_chain(rng.uniform(0.2, 1.5, 5)), enumerate_basis(6, 2))
    spec = spectral_decompose(h)
    for t in rng.uniform(0, 30, 5):
        v = spec.propagator(t).matrix
        assert np.abs(v @ spec.propagator(-t).matrix - np.eye(len(v))).max() < 1e-12
        assert np.abs(v @ v.conj().T - np.eye(len(v))).max() < 1e-12


def test_spectral_two_site():
    h = build_xx_hamiltonian(_chain([1.0]), enumerate_basis(2, 1))
    lam = spectral_decompose(h).eigenvalues
    np.testing.assert_allclose(lam, [-0.5, 0.0, 0.5], atol=1e-15)


def test_spectral_reconstruction(rng):
    a = rng.normal(size=(10, 10)) + 1j * rng.normal(size=(10, 10))
    basis = enumerate_basis(10, 1)
    h = SectorOperator(basis, np.pad(a + a.conj().T, ((1, 0), (1, 0))))
    sp = spectral_decompose(h)
    q = sp.eigenvectors.matrix
    assert np.all(np.diff(sp.eigenvalues) >= 0)
    assert np.abs(q.conj().T @ q - np.eye(11)).max() < 1e-12
    err = np.abs(q @ np.diag(sp.eigenvalues) @ q.conj().T - h.matrix).max()
    assert err <= 1e-10 * np.abs(h.matrix).max()


def test_spectral_zero_matrix():
    basis = enumerate_basis(3, 2)
    sp = spectral_decompose(SectorOperator(basis, np.zeros((7, 7))))
    assert np.all(sp.eigenvalues == 0)


def test_non_hermitian_rejected():
    basis = enumerate_basis(2, 1)
    h = SectorOperator(basis, np.diag([0, 1j, 0]))
    with pytest.raises(ContractViolation):
        propagator(h, 1.0)


def test_block_flag_enforced():
    basis = enumerate_basis(2, 1)
    m = np.zeros((3, 3))
    m[0, 1] = 1
    with pytest.raises(ContractViolation):
        SectorOperator(basis, m)


def test_paper_chain_couplings():
    spec = paper_chain_spec(2, 20, 0.006, (0.55, 0.817), 1.0)
    d = dict(enumerate(spec.couplings, start=1))  # 1-based bond labels
    assert spec.n_sites == 40 and len(spec.couplings) == 39
    for b in (1, 19, 21, 39):
        assert d[b] == 0.55
    for b in (2, 18, 22, 38):
        assert d[b] == 0.817
    assert d[20] == 0.006
    others = set(d) - {1, 19, 21, 39, 2, 18, 22, 38, 20}
    assert all(d[b] == 1.0 for b in others)


def test_paper_chain_degenerate_senders_only():
    spec = paper_chain_spec(2, 2, 0.3, (0.5, 0.6), 1.0)
    assert spec.n_sites == 4 and spec.layout.senders_only
    assert list(spec.layout.line1) == [] and list(spec.layout.line2) == []
    with pytest.raises(ArgumentError):
        paper_chain_spec(3, 2, 0.1, (0.5, 0.5))


def test_chain_spec_validation():
    lay = SubsystemLayout.symmetric(1, 2)
    with pytest.raises(ArgumentError):
        ChainSpec((1.0,), lay)
    with pytest.raises(ArgumentError):
        ChainSpec((1.0, float("nan"), 1.0), lay)
    spec = senders_only_spec(3)
    assert ChainSpec.from_dict(spec.to_dict()) == spec
