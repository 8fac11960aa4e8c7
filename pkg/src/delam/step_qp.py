"""Per-step QP in displacement and plastic slip with damage frozen.

The non-smooth dissipation ``sigma_yield * sum_i w_i |pi_i - pi_prev_i|`` is
linearised by splitting ``pi - pi_prev = p_plus - p_minus`` with
``p_plus, p_minus >= 0``. Interface displacements are rotated to nodal
``(jump_N, jump_T)`` coordinates (plus the minus-side displacement for two
bodies), so non-penetration becomes the bound ``jump_N >= 0``.

Variable layout (both forms): ``[y_u, p_plus, p_minus]``. In the full form
``y_u`` holds every nodal dof (interface nodes rotated); in the condensed
form the interior dofs are eliminated by a Schur complement, which is exact
because the bulk is linear, and ``y_u`` holds interface coordinates only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import DiscreteOperators
from .material import MaterialSpec
from .mesh import InterfaceMode, Mesh2D
from .qp import QpProblem


def interface_coordinates(mesh: Mesh2D) -> tuple[np.ndarray, sp.csr_matrix, np.ndarray, np.ndarray]:
    """Rotation from interface coordinates to nodal dofs of the interface vertices.

    Returns ``(dofs, T, jn_idx, jt_idx)``: ``u[dofs] = T @ y`` and
    ``y[jn_idx]``, ``y[jt_idx]`` are the nodal normal/tangential jumps.
    """
    t, nu = mesh.node_frames()
    n_i = mesh.n_interface_nodes
    rows, cols, vals = [], [], []

    def put(dof_row, y_col, v):
        rows.append(dof_row)
        cols.append(y_col)
        vals.append(v)

    if mesh.layout.mode is InterfaceMode.RIGID_OBSTACLE:
        nodes = np.asarray(mesh.interface_nodes)
        dofs = np.stack([2 * nodes, 2 * nodes + 1], axis=1).ravel()
        for i in range(n_i):
            for c in range(2):
                put(2 * i + c, 2 * i, nu[i, c])
                put(2 * i + c, 2 * i + 1, t[i, c])
        jn_idx, jt_idx = 2 * np.arange(n_i), 2 * np.arange(n_i) + 1
        ny = 2 * n_i
    else:
        pairs = np.asarray(mesh.layout.pairs)
        plus, minus = pairs[:, 0], pairs[:, 1]
        dofs = np.concatenate(
            [np.stack([2 * plus, 2 * plus + 1], 1).ravel(), np.stack([2 * minus, 2 * minus + 1], 1).ravel()]
        )
        # y = [jN_0, jT_0, ..., jN_n, jT_n, m_x0, m_y0, ...]
        for i in range(n_i):
            for c in range(2):
                r_plus, r_minus = 2 * i + c, 2 * n_i + 2 * i + c
                put(r_plus, 2 * i, nu[i, c])
                put(r_plus, 2 * i + 1, t[i, c])
                put(r_plus, 2 * n_i + 2 * i + c, 1.0)
                put(r_minus, 2 * n_i + 2 * i + c, 1.0)
        jn_idx, jt_idx = 2 * np.arange(n_i), 2 * np.arange(n_i) + 1
        ny = 4 * n_i
    T = sp.csr_matrix((vals, (rows, cols)), shape=(len(dofs), ny))
    return dofs, T, jn_idx, jt_idx


@dataclass
class StepQp:
    """A step problem plus the map back to ``(u, pi)``."""

    problem: QpProblem
    decode: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    encode: Callable[[np.ndarray, np.ndarray], np.ndarray]
    n_u: int
    n_interface: int

    @property
    def p_plus(self) -> slice:
        return slice(self.n_u, self.n_u + self.n_interface)

    @property
    def p_minus(self) -> slice:
        return slice(self.n_u + self.n_interface, self.n_u + 2 * self.n_interface)


def _interface_blocks(ops: DiscreteOperators, spec: MaterialSpec, zeta_prev, pi_prev):
    """Quadratic/linear coefficients of the interface energy in ``(jN, jT, dpi)``.

    Energy per node: ``zw (kN/2 jN^2 + kT/2 (jT - pi_prev - dpi)^2)
    + w kH/2 (pi_prev + dpi)^2`` plus the gradient term.
    """
    zw = ops.zeta_weights(zeta_prev)
    w = ops.node_weights
    aN = spec.kappa_N * zw
    aT = spec.kappa_T * zw
    H_pp = sp.diags(aT + spec.kappa_H * w)
    g_p = aT * pi_prev + spec.kappa_H * w * pi_prev
    if spec.kappa_G:
        H_pp = H_pp + spec.kappa_G * ops.K_G
        g_p = g_p + spec.kappa_G * (ops.K_G @ pi_prev)
    return aN, aT, sp.csr_matrix(H_pp), -aT * pi_prev, g_p


def _assemble(H_u, g_u, jn_idx, jt_idx, aN, aT, H_pp, g_jt, g_p, sigma_w):
    """Combine bulk part in ``y_u`` with interface and split-slip parts."""
    n_u = H_u.shape[0]
    n_i = len(jn_idx)
    dense = not sp.issparse(H_u)
    rows_u = np.concatenate([jn_idx, jt_idx])
    diag_u = np.concatenate([aN, aT])
    I = np.arange(n_i)
    # jT-dpi coupling, dpi = p_plus - p_minus
    C = sp.csr_matrix((-aT, (jt_idx, I)), shape=(n_u, n_i))
    P = sp.hstack([sp.identity(n_i), -sp.identity(n_i)]).tocsr()
    Huu_int = sp.csr_matrix((diag_u, (rows_u, rows_u)), shape=(n_u, n_u))
    Hup = C @ P
    Hpp = P.T @ H_pp @ P
    if dense:
        H = np.zeros((n_u + 2 * n_i, n_u + 2 * n_i))
        H[:n_u, :n_u] = H_u + Huu_int.toarray()
        H[:n_u, n_u:] = Hup.toarray()
        H[n_u:, :n_u] = Hup.T.toarray()
        H[n_u:, n_u:] = Hpp.toarray()
    else:
        H = sp.bmat([[H_u + Huu_int, Hup], [Hup.T, Hpp]], format="csr")
    g = np.concatenate([g_u, P.T @ g_p + np.concatenate([sigma_w, sigma_w])])
    g[jt_idx] += g_jt
    return H, g


@dataclass
class Condensation:
    """Schur complement of the bulk stiffness onto the interface coordinates.

    Depends only on the mesh, material and Dirichlet data, so one instance
    serves every time step.
    """

    dofs: np.ndarray  # retained nodal dofs
    T: np.ndarray  # dense rotation, u[dofs] = T y
    jn_idx: np.ndarray
    jt_idx: np.ndarray
    S: np.ndarray  # T' (K_rr - K_rf K_ff^-1 K_fr) T
    b: np.ndarray  # T' (f1_r - K_rf K_ff^-1 f1_f), per unit amplitude
    interior: np.ndarray  # eliminated dofs
    B: np.ndarray  # K_ff^-1 K_fr
    z: np.ndarray  # K_ff^-1 f1_f
    fixed_y: np.ndarray  # interface coordinates pinned by Dirichlet data
    n_dofs: int
    T_inv: np.ndarray

    @classmethod
    def build(cls, ops: DiscreteOperators) -> "Condensation":
        mesh = ops.mesh
        dofs, T, jn_idx, jt_idx = interface_coordinates(mesh)
        T = T.toarray()
        n = mesh.n_dofs
        is_d = np.zeros(n, bool)
        is_d[ops.dirichlet_dofs] = True
        fixed_y = np.zeros(0, np.int64)
        if np.any(is_d[dofs]):
            # a pinned interface vertex pins every coordinate that moves it
            pinned_rows = np.flatnonzero(is_d[dofs])
            fixed_y = np.flatnonzero(np.any(T[pinned_rows] != 0.0, axis=0))
        is_r = np.zeros(n, bool)
        is_r[dofs] = True
        interior = np.flatnonzero(~is_r & ~is_d)
        K = ops.K
        Kff = K[interior][:, interior].tocsc()
        Kfr = K[interior][:, dofs].toarray()
        Krr = K[dofs][:, dofs].toarray()
        lu = spla.splu(Kff)
        B = lu.solve(Kfr)
        f1 = ops.f1_rate
        z = lu.solve(f1[interior])
        S_r = Krr - Kfr.T @ B
        b_r = f1[dofs] - Kfr.T @ z
        S = T.T @ S_r @ T
        return cls(dofs, T, jn_idx, jt_idx, 0.5 * (S + S.T), T.T @ b_r, interior, B, z, fixed_y, n, np.linalg.inv(T))

    def expand(self, amplitude: float, y: np.ndarray) -> np.ndarray:
        u = np.zeros(self.n_dofs)
        u_r = self.T @ y
        u[self.dofs] = u_r
        u[self.interior] = amplitude * self.z - self.B @ u_r
        return u

    def restrict(self, u: np.ndarray) -> np.ndarray:
        return self.T_inv @ u[self.dofs]


def build_step_qp(
    ops: DiscreteOperators,
    spec: MaterialSpec,
    t_k: float,
    zeta_prev: np.ndarray,
    pi_prev: np.ndarray,
    *,
    condensation: Optional[Condensation] = None,
    freeze_slip: bool = False,
) -> StepQp:
    """QP for ``min_{u, pi} E(t_k, u, zeta_prev, pi) + R1(pi - pi_prev)``.

    With ``condensation`` the interior displacement dofs are eliminated;
    otherwise all nodal dofs are variables and the Dirichlet ones are fixed
    at zero. ``freeze_slip`` pins ``pi = pi_prev`` (used for the initial
    equilibrium).
    """
    pi_prev = np.asarray(pi_prev, float)
    zeta_prev = np.asarray(zeta_prev, float)
    a = ops.load.amplitude(t_k)
    aN, aT, H_pp, g_jt, g_p = _interface_blocks(ops, spec, zeta_prev, pi_prev)
    sigma_w = spec.sigma_yield * ops.node_weights
    n_i = ops.n_interface_nodes

    if condensation is not None:
        c = condensation
        H, g = _assemble(c.S, -a * c.b, c.jn_idx, c.jt_idx, aN, aT, H_pp, g_jt, g_p, sigma_w)
        n_u = c.S.shape[0]
        fixed_u = c.fixed_y
        jn_idx = c.jn_idx

        def decode(x):
            return c.expand(a, x[:n_u]), pi_prev + x[n_u : n_u + n_i] - x[n_u + n_i :]

        def encode(u, pi):
            return _encode(c.restrict(u), pi - pi_prev, n_u, n_i)

    else:
        mesh = ops.mesh
        dofs, T_i, jn_loc, jt_loc = interface_coordinates(mesh)
        n = mesh.n_dofs
        # full rotation: interface coordinates replace the interface dofs
        others = np.setdiff1d(np.arange(n), dofs)
        n_y_int = T_i.shape[1]
        n_u = len(others) + n_y_int
        Tf = sp.lil_matrix((n, n_u))
        for k, dof in enumerate(others):
            Tf[dof, k] = 1.0
        Ti = T_i.tocoo()
        for r, col, v in zip(Ti.row, Ti.col, Ti.data):
            Tf[dofs[r], len(others) + col] = v
        Tf = Tf.tocsr()
        H_u = (Tf.T @ ops.K @ Tf).tocsr()
        g_u = -a * (Tf.T @ ops.f1_rate)
        jn_idx = len(others) + jn_loc
        jt_idx = len(others) + jt_loc
        H, g = _assemble(H_u, g_u, jn_idx, jt_idx, aN, aT, H_pp, g_jt, g_p, sigma_w)
        is_d = np.zeros(n, bool)
        is_d[ops.dirichlet_dofs] = True
        fixed_u = np.flatnonzero(np.asarray(abs(Tf[is_d]).sum(axis=0)).ravel() > 0)

        def decode(x):
            return Tf @ x[:n_u], pi_prev + x[n_u : n_u + n_i] - x[n_u + n_i :]

        Tf_lu = spla.splu(Tf.tocsc())

        def encode(u, pi):
            return _encode(Tf_lu.solve(np.asarray(u, float)), pi - pi_prev, n_u, n_i)

    nonneg = np.concatenate([jn_idx, n_u + np.arange(2 * n_i)])
    fixed = np.asarray(fixed_u, np.int64)
    if freeze_slip:
        fixed = np.concatenate([fixed, n_u + np.arange(2 * n_i)])
    nonneg = np.setdiff1d(nonneg, fixed)
    problem = QpProblem(H, g, nonneg=nonneg, fixed=fixed)
    return StepQp(problem, decode, encode, n_u, n_i)


def _encode(y_u, dpi, n_u, n_i):
    x = np.zeros(n_u + 2 * n_i)
    x[:n_u] = y_u
    x[n_u : n_u + n_i] = np.maximum(dpi, 0.0)
    x[n_u + n_i :] = np.maximum(-dpi, 0.0)
    return x
