"""Design of the extended-receiver unitary.

Only one column of (U_ER)^dagger enters the receiver corner element: the one
indexed by the ER state with both receiver sites excited. Every conditioned
entry of W^dagger is linear in that column, so the design problem is a set of
K^2 linear conditions on a unit vector of length P = N_ER (N_ER - 1) / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import minimize, minimize_scalar

from .dynamics import ChainSpec, SectorOperator, Spectrum, senders_only_spec
from .errors import ArgumentError, InfeasibleConstraintsError, OptimizationError
from .hilbert import BasisState, SectorBasis, state_index
from .protocol import chain_spectrum, er_basis

RANK_TOL = 1e-10


@dataclass(frozen=True)
class AngleSet:
    """Hyperspherical coordinates (alpha_1..alpha_{P-1}, phi_1..phi_P) of a unit P-vector.

    Components follow ascending binary order of the ER two-excitation states
    (site 0 most significant), i.e. 0011, 0101, 0110, 1001, 1010, 1100 for
    four sites. That is the reverse of :class:`SectorBasis` order.
    """

    alphas: tuple[float, ...]
    phis: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "phis", tuple(float(p) for p in self.phis))
        if len(self.phis) < 1 or len(self.alphas) != len(self.phis) - 1:
            raise ArgumentError(
                f"need P-1 alphas and P phis, got {len(self.alphas)} and {len(self.phis)}"
            )

    @property
    def P(self) -> int:
        return len(self.phis)

    def as_vector(self) -> np.ndarray:
        return np.array(self.alphas + self.phis)

    @classmethod
    def from_vector(cls, x, P: int) -> "AngleSet":
        x = np.asarray(x, dtype=float)
        return cls(tuple(x[: P - 1]), tuple(x[P - 1 :]))

    def to_dict(self) -> dict:
        return {"alphas": list(self.alphas), "phis": list(self.phis)}


def column_from_angles(angles: AngleSet) -> np.ndarray:
    """Nested sine/cosine product: c_1 = e^{i phi_1} sin a_1 ... sin a_{P-1},
    c_k = e^{i phi_k} cos a_{k-1} sin a_k ... sin a_{P-1} for k >= 2."""
    a = np.asarray(angles.alphas)
    P = angles.P
    sin_tail = np.ones(P)  # sin_tail[k] = prod_{m >= k} sin a_m (0-based a)
    for k in range(P - 2, -1, -1):
        sin_tail[k] = sin_tail[k + 1] * np.sin(a[k])
    mod = np.empty(P)
    mod[0] = sin_tail[0] if P > 1 else 1.0
    for k in range(1, P):
        mod[k] = np.cos(a[k - 1]) * sin_tail[k]
    return mod * np.exp(1j * np.asarray(angles.phis))


def angles_from_column(column) -> AngleSet:
    """Inverse of :func:`column_from_angles` (alphas in [0, pi], phis in (-pi, pi])."""
    c = np.asarray(column, dtype=complex)
    r = np.abs(c)
    phis = np.angle(c)
    P = len(c)
    alphas = np.zeros(P - 1)
    if P > 1:
        alphas[0] = math.atan2(r[0], r[1])
        for k in range(1, P - 1):
            alphas[k] = math.atan2(np.linalg.norm(r[: k + 1]), r[k + 1])
    return AngleSet(tuple(alphas), tuple(phis))


def angle_order_to_basis(column) -> np.ndarray:
    """Reorder an angle-ordered column into SectorBasis order (and back; it is a reversal)."""
    return np.asarray(column)[::-1].copy()


basis_to_angle_order = angle_order_to_basis


@dataclass
class TunerResult:
    column: np.ndarray  # constrained (U_ER)^dagger column, SectorBasis two-excitation order
    s: float
    residuals: np.ndarray  # (M u) reshaped K x K
    t_opt: float = 0.0
    angles: AngleSet | None = None
    degenerate: bool = False
    solver: str = "exact"
    extras: dict = field(default_factory=dict)

    @property
    def K(self) -> int:
        return self.residuals.shape[0]

    def max_offdiagonal(self) -> float:
        r = self.residuals
        return float(np.abs(r - np.diag(np.diag(r))).max(initial=0.0))

    def diagonal_spread(self) -> float:
        d = np.diag(self.residuals)
        return float(np.abs(d - d.mean()).max())

    def to_dict(self) -> dict:
        out = {
            "solver": self.solver,
            "s": self.s,
            "t_opt": self.t_opt,
            "degenerate": self.degenerate,
            "column": {"real": self.column.real.tolist(), "imag": self.column.imag.tolist()},
            "residuals": {
                "real": self.residuals.real.tolist(),
                "imag": self.residuals.imag.tolist(),
            },
            "max_offdiagonal_residual": self.max_offdiagonal(),
            "diagonal_spread": self.diagonal_spread(),
        }
        if self.angles is not None:
            out["angles"] = self.angles.to_dict()
        return out


def target_ordinal(spec: ChainSpec) -> int:
    """Ordinal, in the ER two-excitation block, of the state exciting both receiver sites."""
    lay = spec.layout
    basis = er_basis(lay)
    local = [s - lay.extended_receiver.start for s in lay.receiver]
    g = state_index(basis, BasisState.from_sites(lay.n_er, local))
    return g - basis.sector_slice(2).start


def constraint_matrix(
    spec: ChainSpec,
    t: float,
    spectrum: Spectrum | None = None,
) -> np.ndarray:
    """K^2 x P matrix M with residual (i, j) = (M u)[i*K + j].

    Row (i, j) is the W^dagger entry between the pair state "component i in
    S1, component j in S2" and the receiver-excited column; it equals
    sum_p conj(V(t)[p, (i, j)]) u_p over ER two-excitation states p.
    """
    lay = spec.layout
    K, n = lay.K, lay.n_sites
    ebasis = er_basis(lay)
    er_sites = list(lay.extended_receiver)
    two = ebasis.states[ebasis.sector_slice(2)]
    s1, s2 = lay.sender_sites(1), lay.sender_sites(2)
    pair_states = [
        BasisState.from_sites(n, (s1[i], s2[j])) for i in range(K) for j in range(K)
    ]
    er_states = [
        BasisState.from_sites(n, [er_sites[k] for k in st.excited_sites]) for st in two
    ]
    if lay.senders_only:
        v = np.array(
            [[1.0 if p == q else 0.0 for q in pair_states] for p in er_states], dtype=complex
        )
    else:
        if spectrum is None:
            spectrum = chain_spectrum(spec)
        basis = spectrum.basis
        rows = [state_index(basis, p) for p in er_states]
        cols = [state_index(basis, q) for q in pair_states]
        v = spectrum.propagator_entries(t, rows, cols)
    return v.conj().T


def _index_sets(K: int):
    diag = [i * K + i for i in range(K)]
    off = [i * K + j for i in range(K) for j in range(K) if i != j]
    return diag, off


def homogeneous_conditions(M: np.ndarray) -> np.ndarray:
    """Rows that must vanish: off-diagonal entries and diagonal differences."""
    K = math.isqrt(M.shape[0])
    if K * K != M.shape[0]:
        raise ArgumentError(f"constraint matrix has {M.shape[0]} rows, not a square number")
    diag, off = _index_sets(K)
    return np.vstack([M[off], M[diag[1:]] - M[diag[0]]]).reshape(-1, M.shape[1])


def solve_exact(M: np.ndarray, t: float = 0.0) -> TunerResult:
    """Maximize s over unit u satisfying the K^2 - 1 homogeneous conditions.

    The feasible set is the unit sphere of the null space of the conditions;
    the largest |row_0 . u| there is the norm of row_0 projected onto it.
    """
    M = np.asarray(M, dtype=complex)
    K = math.isqrt(M.shape[0])
    A = homogeneous_conditions(M)
    basis = null_space(A, rcond=RANK_TOL) if A.shape[0] else np.eye(M.shape[1], dtype=complex)
    if basis.shape[1] == 0:
        rank = np.linalg.matrix_rank(A, tol=RANK_TOL)
        raise InfeasibleConstraintsError(
            f"conditions have full rank {rank} on {M.shape[1]} unknowns; no unit solution",
            rank=rank,
            shape=A.shape,
        )
    w = M[0] @ basis
    s = float(np.linalg.norm(w))
    if s > 0:
        u = basis @ (w.conj() / s)
    else:
        u = basis[:, 0].astype(complex)
    u = u / np.linalg.norm(u)
    res = (M @ u).reshape(K, K)
    return TunerResult(
        column=u, s=float(np.mean(np.diag(res)).real), residuals=res, t_opt=t, degenerate=s == 0
    )


def column_jacobian(angles: AngleSet) -> tuple[np.ndarray, np.ndarray]:
    """Angle-ordered column and its P x (2P - 1) derivative w.r.t. (alphas, phis)."""
    a = np.asarray(angles.alphas)
    P = angles.P
    # factor of a_j in the modulus of component k, and its derivative
    F = np.ones((P, P - 1))
    D = np.zeros((P, P - 1))
    for k in range(P):
        for j in range(k, P - 1):
            F[k, j], D[k, j] = np.sin(a[j]), np.cos(a[j])
        if k >= 1:
            F[k, k - 1], D[k, k - 1] = np.cos(a[k - 1]), -np.sin(a[k - 1])
    mod = F.prod(axis=1)
    dmod = np.empty((P, P - 1))
    for j in range(P - 1):
        G = F.copy()
        G[:, j] = D[:, j]
        dmod[:, j] = G.prod(axis=1)
    phase = np.exp(1j * np.asarray(angles.phis))
    col = mod * phase
    return col, np.hstack([dmod * phase[:, None], np.diag(1j * col)])


def _augmented_lagrangian(M, A, x0, P, tolerance, max_outer=60):
    """Maximize Re(row_0 . u) subject to A u = 0 over the angles.

    Sub-problems are unconstrained BFGS runs with analytic gradients, which
    keeps working where the angle chart degenerates (vanishing components).
    """

    def unpack(x):
        col, jac = column_jacobian(AngleSet.from_vector(x, P))
        return angle_order_to_basis(col), angle_order_to_basis(jac)

    lam = np.zeros(2 * A.shape[0])
    mu = 10.0
    prev = np.inf
    x = np.asarray(x0, dtype=float)
    for _ in range(max_outer):

        def lagrangian(x):
            u, J = unpack(x)
            v, AJ = A @ u, A @ J
            r = np.concatenate([v.real, v.imag])
            dr = np.vstack([AJ.real, AJ.imag])
            f = -(M[0] @ u).real + lam @ r + 0.5 * mu * r @ r
            return f, -(M[0] @ J).real + dr.T @ (lam + mu * r)

        x = minimize(lagrangian, x, jac=True, method="BFGS", options={"gtol": 1e-13, "maxiter": 5000}).x
        v = A @ unpack(x)[0]
        r = np.concatenate([v.real, v.imag])
        viol = float(np.abs(r).max(initial=0.0))
        if viol <= 1e-3 * tolerance:
            break
        lam = lam + mu * r
        if viol > 0.25 * prev:
            mu = min(10 * mu, 1e8)
        prev = viol
    return x


def solve_by_angles(
    M: np.ndarray,
    initial: AngleSet | None = None,
    tolerance: float = 1e-9,
    restarts: int = 32,
    seed: int = 0,
    t: float = 0.0,
) -> TunerResult:
    """Local search over the 2P - 1 hyperspherical angles.

    Each start runs an augmented-Lagrangian search for the largest
    Re(row_0 . u) under the homogeneous conditions. The best start that meets
    ``tolerance`` wins; ties go to the lexicographically smaller angle vector.
    """
    M = np.asarray(M, dtype=complex)
    P = M.shape[1]
    K = math.isqrt(M.shape[0])
    A = homogeneous_conditions(M)
    rng = np.random.default_rng(seed)

    starts = []
    if initial is not None:
        if initial.P != P:
            raise ArgumentError(f"initial angles have P={initial.P}, problem has P={P}")
        starts.append(initial.as_vector())
    while len(starts) < max(restarts, 1):
        starts.append(
            np.concatenate([rng.uniform(0, np.pi, P - 1), rng.uniform(-np.pi, np.pi, P)])
        )

    best = None
    best_key = None
    for x0 in starts:
        x = _augmented_lagrangian(M, A, x0, P, tolerance)
        angles = AngleSet.from_vector(x, P)
        u = angle_order_to_basis(column_from_angles(angles))
        res = (M @ u).reshape(K, K)
        viol = float(np.abs(A @ u).max(initial=0.0))
        s = float(np.mean(np.diag(res)).real)
        ok = viol <= tolerance
        key = (ok, round(s, 12), tuple(-x))
        if best_key is None or key > best_key:
            best_key = key
            best = TunerResult(
                column=u,
                s=s,
                residuals=res,
                t_opt=t,
                angles=angles,
                solver="angles",
                extras={"max_condition_violation": viol},
            )
    if not best_key[0]:
        raise OptimizationError(
            f"no start met tolerance {tolerance:g} after {len(starts)} restarts", best=best
        )
    return best


def sweep_time(
    spec: ChainSpec,
    t_grid,
    spectrum: Spectrum | None = None,
    refine: bool = True,
    xatol: float = 1e-5,
):
    """Scan s(t) with the exact solver, then refine the argmax by bounded search.

    Returns ``(t_opt, table, result)`` where ``table`` is an (n, 2) array of
    (t, s) pairs and ``result`` the exact solution at ``t_opt``.
    """
    grid = np.asarray(t_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ArgumentError("time grid must be a non-empty 1-D sequence")
    if np.any(grid < 0):
        raise ArgumentError("times must be non-negative")
    if spec.layout.senders_only:
        res = solve_exact(constraint_matrix(spec, 0.0), t=float(grid[0]))
        table = np.column_stack([grid, np.full(grid.size, res.s)])
        return float(grid[0]), table, res
    if spectrum is None:
        spectrum = chain_spectrum(spec)

    def s_at(t):
        return solve_exact(constraint_matrix(spec, t, spectrum), t=t).s

    values = np.array([s_at(t) for t in grid])
    k = int(np.argmax(values))  # first maximum: ties go to lower t
    t_opt = float(grid[k])
    if refine and grid.size > 1:
        lo = grid[max(k - 1, 0)]
        hi = grid[min(k + 1, grid.size - 1)]
        sol = minimize_scalar(
            lambda t: -s_at(t), bounds=(lo, hi), method="bounded", options={"xatol": xatol}
        )
        if -sol.fun > values[k]:
            t_opt = float(sol.x)
    result = solve_exact(constraint_matrix(spec, t_opt, spectrum), t=t_opt)
    return t_opt, np.column_stack([grid, values]), result


def default_time_grid(spec: ChainSpec, step: float = 0.05) -> np.ndarray:
    return np.arange(0.0, 2.0 * spec.n_sites + step / 2, step)


def _householder_to(column: np.ndarray, target: int) -> np.ndarray:
    """Unitary Q with Q[:, target] = column."""
    P = len(column)
    col = np.asarray(column, dtype=complex)
    theta = np.angle(col[target]) if col[target] != 0 else 0.0
    y = col * np.exp(-1j * theta)  # y[target] real, non-negative
    e = np.zeros(P, dtype=complex)
    e[target] = 1.0
    w = e - y
    nw = np.linalg.norm(w)
    q = np.eye(P, dtype=complex)
    if nw > 1e-15:
        q = q - 2.0 * np.outer(w, w.conj()) / nw**2
    q[:, target] *= np.exp(1j * theta)
    return q


def complete_to_unitary(
    column, target: int, basis: SectorBasis, tolerance: float = 1e-12
) -> SectorOperator:
    """ER unitary U whose (U)^dagger two-excitation column ``target`` equals ``column``.

    Vacuum and one-excitation blocks are the identity.
    """
    col = np.asarray(column, dtype=complex)
    two = basis.sector_slice(2)
    if col.shape != (two.stop - two.start,):
        raise ArgumentError(f"column length {col.shape} does not match two-excitation block")
    if abs(np.linalg.norm(col) - 1.0) > tolerance:
        raise ArgumentError(f"column norm {np.linalg.norm(col)!r} is not 1")
    u_dag = np.eye(len(basis), dtype=complex)
    u_dag[two, two] = _householder_to(col, target)
    return SectorOperator(basis, u_dag.conj().T)


def w2_block() -> np.ndarray:
    """The K=2 senders-only two-excitation block of W^dagger, in SectorBasis order."""
    r = 1 / math.sqrt(2)
    binary = np.array(
        [
            [-1, 0, 0, 0, 0, 0],
            [0, 0, r, 0, -r, 0],
            [0, r, 0, -r, 0, 0],
            [0, r, 0, r, 0, 0],
            [0, 0, r, 0, r, 0],
            [0, 0, 0, 0, 0, 1],
        ]
    )
    return binary[::-1, ::-1].astype(complex)


def senders_only_unitary(K: int) -> SectorOperator:
    """U_ER for the 2K-site line: s = 1/sqrt(K) on the K matched sender pairs.

    For K = 2 the two-excitation block of U^dagger is exactly W2.
    """
    if K < 1:
        raise ArgumentError(f"K must be >= 1, got {K}")
    spec = senders_only_spec(K)
    basis = er_basis(spec.layout)
    if K == 2:
        u_dag = np.eye(len(basis), dtype=complex)
        two = basis.sector_slice(2)
        u_dag[two, two] = w2_block()
        return SectorOperator(basis, u_dag.conj().T)
    M = constraint_matrix(spec, 0.0)
    column = M[[i * K + i for i in range(K)]].sum(axis=0) / math.sqrt(K)
    return complete_to_unitary(column, target_ordinal(spec), basis)


def unitary_from_result(spec: ChainSpec, result: TunerResult) -> SectorOperator:
    return complete_to_unitary(result.column, target_ordinal(spec), er_basis(spec.layout))


def min_extended_receiver_size(K: int) -> int:
    """Smallest N_ER with N_ER (N_ER - 1) - 1 >= 2 K^2."""
    if K < 1:
        raise ArgumentError(f"K must be >= 1, got {K}")
    n = math.ceil((1 + math.sqrt(5 + 8 * K * K)) / 2)
    # float guard on exact squares
    while n > 2 and (n - 1) * (n - 2) - 1 >= 2 * K * K:
        n -= 1
    while n * (n - 1) - 1 < 2 * K * K:
        n += 1
    return n
