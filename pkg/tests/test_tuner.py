import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xxscalar.dynamics import paper_chain_spec, senders_only_spec
from xxscalar.errors import ArgumentError, InfeasibleConstraintsError, OptimizationError
from xxscalar.protocol import er_basis
from xxscalar.tuner import (
    AngleSet,
    angle_order_to_basis,
    angles_from_column,
    column_from_angles,
    complete_to_unitary,
    constraint_matrix,
    default_time_grid,
    min_extended_receiver_size,
    senders_only_unitary,
    solve_by_angles,
    solve_exact,
    sweep_time,
    target_ordinal,
    unitary_from_result,
    w2_block,
)


def _explicit_column(alphas, phis):
    # direct transcription of the nested products for P = 4
    a1, a2, a3 = alphas
    mods = [
        math.sin(a1) * math.sin(a2) * math.sin(a3),
        math.cos(a1) * math.sin(a2) * math.sin(a3),
        math.cos(a2) * math.sin(a3),
        math.cos(a3),
    ]
    return np.array(mods) * np.exp(1j * np.array(phis))


def test_column_from_angles_examples():
    np.testing.assert_allclose(column_from_angles(AngleSet((math.pi / 2,), (0.0, 0.0))), [1, 0], atol=1e-16)
    np.testing.assert_allclose(column_from_angles(AngleSet((0.0,), (0.0, 0.0))), [0, 1], atol=1e-16)
    np.testing.assert_allclose(column_from_angles(AngleSet((), (0.3,))), [np.exp(0.3j)])
    al, ph = (0.3, 1.1, 2.0), (0.1, -0.4, 2.5, 3.0)
    np.testing.assert_allclose(column_from_angles(AngleSet(al, ph)), _explicit_column(al, ph), atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7).flatmap(lambda P: st.tuples(
    st.lists(st.floats(0.01, math.pi - 0.01), min_size=P - 1, max_size=P - 1),
    st.lists(st.floats(-3.1, 3.1), min_size=P, max_size=P),
)))
def test_angles_roundtrip(data):
    alphas, phis = data
    col = column_from_angles(AngleSet(tuple(alphas), tuple(phis)))
    assert np.linalg.norm(col) == pytest.approx(1.0, abs=1e-14)
    back = column_from_angles(angles_from_column(col))
    np.testing.assert_allclose(back, col, atol=1e-12)


def test_angle_set_validation():
    with pytest.raises(ArgumentError):
        AngleSet((0.1, 0.2), (0.0, 0.0))
    a = AngleSet((0.1,), (0.2, 0.3))
    assert AngleSet.from_vector(a.as_vector(), 2) == a


def test_order_reversal():
    assert angle_order_to_basis([1, 2, 3]).tolist() == [3, 2, 1]


@pytest.mark.parametrize("K", [1, 2, 3, 4, 5])
def test_senders_only_exact_scale(K):
    spec = senders_only_spec(K)
    res = solve_exact(constraint_matrix(spec, 0.0))
    assert res.s == pytest.approx(1 / math.sqrt(K), abs=1e-10)
    assert res.max_offdiagonal() <= 1e-12
    assert res.diagonal_spread() <= 1e-12
    assert np.linalg.norm(res.column) == pytest.approx(1.0, abs=1e-12)


def test_senders_only_k1_perfect():
    res = solve_exact(constraint_matrix(senders_only_spec(1), 0.0))
    assert res.s == pytest.approx(1.0, abs=1e-12)


def test_infeasible_raises():
    # 9 unknowns can't satisfy 24 generic conditions
    rng = np.random.default_rng(0)
    M = rng.normal(size=(25, 9)) + 1j * rng.normal(size=(25, 9))
    with pytest.raises(InfeasibleConstraintsError) as exc:
        solve_exact(M)
    assert exc.value.rank == 9


def test_target_ordinal():
    assert target_ordinal(paper_chain_spec(2, 20, 0.006, (0.55, 0.817))) == 3
    assert target_ordinal(senders_only_spec(2)) == 3
    assert target_ordinal(senders_only_spec(1)) == 0


def test_completion_unitary_and_conserving(rng):
    basis = er_basis(paper_chain_spec(2, 20, 0.006, (0.55, 0.817)).layout)
    for target in range(6):
        col = rng.normal(size=6) + 1j * rng.normal(size=6)
        col /= np.linalg.norm(col)
        u = complete_to_unitary(col, target, basis)
        m = u.matrix
        assert np.abs(m @ m.conj().T - np.eye(11)).max() < 1e-12
        np.testing.assert_allclose(m.conj().T[5:, 5 + target], col, atol=1e-14)
        np.testing.assert_array_equal(m[:5, :5], np.eye(5))
    with pytest.raises(ArgumentError):
        complete_to_unitary(np.ones(6), 0, basis)


def test_w2_is_unitary_and_matches_solver():
    w = w2_block()
    assert np.abs(w @ w.conj().T - np.eye(6)).max() < 1e-15
    spec = senders_only_spec(2)
    M = constraint_matrix(spec, 0.0)
    res = (M @ w[:, target_ordinal(spec)]).reshape(2, 2)
    np.testing.assert_allclose(res, np.eye(2) / math.sqrt(2), atol=1e-15)
    u = senders_only_unitary(2).matrix
    np.testing.assert_allclose(u.conj().T[5:, 5:], w)


@pytest.mark.parametrize("K, n", [(1, 3), (2, 4), (3, 5), (4, 7), (10, 15)])
def test_min_er_size(K, n):
    assert min_extended_receiver_size(K) == n


def test_min_er_size_scan():
    for K in range(1, 31):
        scan = next(m for m in range(2, 100) if m * (m - 1) - 1 >= 2 * K * K)
        assert min_extended_receiver_size(K) == scan


def test_sweep_single_point(forty_node):
    spec, spectrum = forty_node
    t, table, res = sweep_time(spec, [26.441], spectrum)
    assert t == 26.441 and table.shape == (1, 2)
    assert res.s == pytest.approx(table[0, 1])
    with pytest.raises(ArgumentError):
        sweep_time(spec, [], spectrum)
    with pytest.raises(ArgumentError):
        sweep_time(spec, [-1.0], spectrum)


def test_sweep_senders_only_flat():
    t, table, res = sweep_time(senders_only_spec(2), [0.0, 1.0, 2.0])
    assert np.all(table[:, 1] == res.s)


def test_default_grid():
    g = default_time_grid(paper_chain_spec(2, 20, 0.006, (0.55, 0.817)))
    assert g[0] == 0.0 and g[-1] == pytest.approx(80.0)


def test_forty_node_exact_and_recovery(forty_node):
    spec, spectrum = forty_node
    res = solve_exact(constraint_matrix(spec, 26.441, spectrum), t=26.441)
    assert res.s == pytest.approx(0.6813, abs=0.01)
    assert res.s <= 1 / math.sqrt(2) + 1e-9
    assert res.max_offdiagonal() <= 1e-12
    u = unitary_from_result(spec, res)
    assert np.abs(u.matrix @ u.matrix.conj().T - np.eye(11)).max() < 1e-12


def test_angles_agree_with_exact_senders_only():
    M = constraint_matrix(senders_only_spec(2), 0.0)
    res = solve_by_angles(M, restarts=8, seed=1)
    assert res.s == pytest.approx(1 / math.sqrt(2), abs=1e-6)
    assert res.extras["max_condition_violation"] <= 1e-9
    assert res.angles is not None


def test_angles_reports_best_on_failure():
    rng = np.random.default_rng(2)
    M = rng.normal(size=(9, 3)) + 1j * rng.normal(size=(9, 3))
    with pytest.raises(OptimizationError) as exc:
        solve_by_angles(M, restarts=2)
    assert exc.value.best is not None


def test_column_jacobian_finite_difference(rng):
    from xxscalar.tuner import column_jacobian

    P = 5
    x = np.concatenate([rng.uniform(0.1, 3.0, P - 1), rng.uniform(-3, 3, P)])
    col, jac = column_jacobian(AngleSet.from_vector(x, P))
    np.testing.assert_allclose(col, column_from_angles(AngleSet.from_vector(x, P)))
    h = 1e-6
    for k in range(2 * P - 1):
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        fd = (column_from_angles(AngleSet.from_vector(xp, P)) - column_from_angles(AngleSet.from_vector(xm, P))) / (2 * h)
        np.testing.assert_allclose(jac[:, k], fd, atol=1e-8)


def test_angles_k1():
    res = solve_by_angles(constraint_matrix(senders_only_spec(1), 0.0), restarts=2)
    assert res.s == pytest.approx(1.0, abs=1e-9)
