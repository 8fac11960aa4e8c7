"""Finite-element operators for the transformed delamination energy.

The displacement is split as ``u_total = u + a(t) * uD_rate`` where
``uD_rate`` (the Dirichlet lift) carries the prescribed boundary motion and
vanishes on the contact interface, so the unknown ``u`` has homogeneous
Dirichlet data. ``a(t)`` is the load amplitude (``a(t) = t`` for a linear
ramp). The transformed bulk energy is ``1/2 u.K.u - a(t) f1_rate.u``.

Interface integrals use the trapezoidal (nodal, lumped) rule: a P1 field is
sampled at the interface nodes with weights ``w_i = sum of half the adjacent
edge lengths``; a P0 damage field enters node ``i`` through
``zw_i = sum_e |e|/2 * zeta_e``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .material import MaterialSpec, elasticity_tensor
from .mesh import BoundaryTag, Mesh2D, interface_dofs, jump_operator

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LoadProgram:
    """Prescribed displacement ``w_D(t) = a(t) * velocity * direction`` on Gamma_D.

    ``a(t) = t`` unless ``table`` gives ``(time, amplitude)`` breakpoints of a
    piecewise-linear amplitude. ``traction_rate`` (Pa per unit amplitude) acts
    on the Neumann part; ``second_body_direction`` is used for Dirichlet
    vertices of body 1 in two-body meshes.
    """

    direction: tuple = (1.0, 0.6)
    velocity: float = 1e-3
    traction_rate: tuple = (0.0, 0.0)
    second_body_direction: tuple = (0.0, 0.0)
    table: Optional[tuple] = None

    def amplitude(self, t: float) -> float:
        if self.table is None:
            return float(t)
        ts, amps = zip(*self.table)
        return float(np.interp(t, ts, amps))


def stiffness_matrix(mesh: Mesh2D, spec: MaterialSpec) -> sp.csr_matrix:
    """P1 plane-strain stiffness, dofs interleaved ``(u_x, u_y)`` per vertex."""
    D = elasticity_tensor(spec).voigt
    p = mesh.vertices[mesh.triangles]  # (m, 3, 2)
    x, y = p[..., 0], p[..., 1]
    area = mesh.signed_areas()
    # gradients of barycentric coordinates
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1) / (2 * area[:, None])
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1) / (2 * area[:, None])
    m = len(area)
    B = np.zeros((m, 3, 6))
    B[:, 0, 0::2] = b
    B[:, 1, 1::2] = c
    B[:, 2, 0::2] = c
    B[:, 2, 1::2] = b
    Ke = np.einsum("mki,kl,mlj,m->mij", B, D, B, area)
    dofs = np.empty((m, 6), np.int64)
    dofs[:, 0::2] = 2 * mesh.triangles
    dofs[:, 1::2] = 2 * mesh.triangles + 1
    rows = np.repeat(dofs, 6, axis=1).ravel()
    cols = np.tile(dofs, (1, 6)).ravel()
    K = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(mesh.n_dofs, mesh.n_dofs)).tocsr()
    K.sum_duplicates()
    return K


def traction_vector(mesh: Mesh2D, traction: np.ndarray) -> np.ndarray:
    """Consistent nodal loads of a uniform traction on the Neumann edges."""
    f = np.zeros(mesh.n_dofs)
    traction = np.asarray(traction, float)
    if not np.any(traction):
        return f
    for a, b in mesh.edges_with_tag(BoundaryTag.NEUMANN):
        half = 0.5 * np.linalg.norm(mesh.vertices[b] - mesh.vertices[a])
        for v in (a, b):
            f[2 * v : 2 * v + 2] += half * traction
    return f


def interface_stiffness(mesh: Mesh2D) -> sp.csr_matrix:
    """P1 stiffness of ``int |d pi / ds|^2 ds`` along the interface polyline."""
    L = mesh.interface_edge_lengths
    n = mesh.n_interface_nodes
    i = np.arange(len(L))
    rows = np.concatenate([i, i, i + 1, i + 1])
    cols = np.concatenate([i, i + 1, i, i + 1])
    vals = np.concatenate([1 / L, -1 / L, -1 / L, 1 / L])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


@dataclass(eq=False)
class DiscreteOperators:
    """All matrices and vectors of the discrete energy; read-only after assembly."""

    mesh: Mesh2D
    spec: MaterialSpec
    load: LoadProgram
    K: sp.csr_matrix
    JN: sp.csr_matrix
    JT: sp.csr_matrix
    edge_lengths: np.ndarray
    node_weights: np.ndarray
    K_G: sp.csr_matrix
    lift_uD: np.ndarray
    uD_rate: np.ndarray
    f1_rate: np.ndarray
    dirichlet_dofs: np.ndarray
    primary_dirichlet_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))

    @property
    def n_interface_nodes(self) -> int:
        return len(self.node_weights)

    @property
    def n_interface_elements(self) -> int:
        return len(self.edge_lengths)

    def zeta_weights(self, zeta: np.ndarray) -> np.ndarray:
        """Nodal weights ``sum_e |e|/2 zeta_e`` of a P0 damage field."""
        half = 0.5 * self.edge_lengths * np.asarray(zeta, float)
        zw = np.zeros(self.n_interface_nodes)
        zw[:-1] += half
        zw[1:] += half
        return zw

    def jumps(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.JN @ u, self.JT @ u

    def f1(self, t: float) -> np.ndarray:
        return self.load.amplitude(t) * self.f1_rate

    @cached_property
    def lift_energy_rate2(self) -> float:
        """``uD_rate.K.uD_rate`` (the amplitude-squared coefficient of the dropped constant)."""
        return float(self.uD_rate @ (self.K @ self.uD_rate))

    @cached_property
    def traction_rate_vector(self) -> np.ndarray:
        return traction_vector(self.mesh, self.load.traction_rate)

    def lift_energy(self, t: float) -> float:
        """Energy of the lift alone: the constant dropped by the transformation."""
        a = self.load.amplitude(t)
        return 0.5 * a * a * self.lift_energy_rate2 - a * a * float(self.traction_rate_vector @ self.uD_rate)

    def total_displacement(self, t: float, u: np.ndarray) -> np.ndarray:
        return u + self.load.amplitude(t) * self.uD_rate


def _dirichlet_values(mesh: Mesh2D, load: LoadProgram) -> tuple[np.ndarray, np.ndarray]:
    nodes = mesh.nodes_with_tag(BoundaryTag.DIRICHLET)
    d0 = np.asarray(load.direction, float)
    d1 = np.asarray(load.second_body_direction, float)
    vals = np.where(mesh.body[nodes, None] == 0, d0[None, :], d1[None, :])
    return nodes, vals


def assemble(mesh: Mesh2D, spec: MaterialSpec, load: LoadProgram) -> DiscreteOperators:
    """Assemble stiffness, interface maps/weights and the Dirichlet lift.

    The lift solves the elastic problem with trace ``direction`` on Gamma_D,
    zero trace on Gamma_C and zero traction elsewhere.

    Raises
    ------
    ValueError
        If Gamma_D and Gamma_C share a vertex with nonzero prescribed motion,
        or the constrained stiffness is singular (a tagging defect).
    """
    K = stiffness_matrix(mesh, spec)
    JN, JT = jump_operator(mesh)
    L = mesh.interface_edge_lengths
    w = np.zeros(mesh.n_interface_nodes)
    w[:-1] += 0.5 * L
    w[1:] += 0.5 * L

    d_nodes, d_vals = _dirichlet_values(mesh, load)
    c_nodes = interface_dofs(mesh)
    overlap = np.intersect1d(d_nodes, c_nodes)
    if overlap.size:
        moving = np.any(d_vals[np.isin(d_nodes, overlap)] != 0.0)
        if moving:
            raise ValueError("Gamma_D and Gamma_C share vertices with nonzero prescribed displacement")

    n = mesh.n_dofs
    lift = np.zeros(n)
    fixed = np.zeros(n, bool)
    for v, val in zip(d_nodes, d_vals):
        lift[2 * v : 2 * v + 2] = val
        fixed[2 * v : 2 * v + 2] = True
    for v in c_nodes:
        lift[2 * v : 2 * v + 2] = 0.0
        fixed[2 * v : 2 * v + 2] = True
    free = ~fixed
    if np.any(lift):
        Kff = K[free][:, free].tocsc()
        rhs = -(K[free][:, fixed] @ lift[fixed])
        try:
            lift[free] = spla.splu(Kff).solve(rhs)
        except RuntimeError as exc:
            raise ValueError("singular constrained stiffness: check boundary tagging") from exc
        if not np.all(np.isfinite(lift)):
            raise ValueError("singular constrained stiffness: check boundary tagging")

    dirichlet_dofs = np.sort(np.concatenate([2 * d_nodes, 2 * d_nodes + 1]))
    uD_rate = load.velocity * lift
    f1_rate = traction_vector(mesh, load.traction_rate) - K @ uD_rate
    f1_rate[dirichlet_dofs] = 0.0

    _check_dirichlet_coercive(K, dirichlet_dofs)
    primary_d = d_nodes[mesh.body[d_nodes] == 0]
    return DiscreteOperators(
        mesh=mesh,
        spec=spec,
        load=load,
        K=K,
        JN=JN,
        JT=JT,
        edge_lengths=L,
        node_weights=w,
        K_G=interface_stiffness(mesh),
        lift_uD=lift,
        uD_rate=uD_rate,
        f1_rate=f1_rate,
        dirichlet_dofs=dirichlet_dofs,
        primary_dirichlet_nodes=primary_d,
    )


def _check_dirichlet_coercive(K: sp.csr_matrix, dirichlet_dofs: np.ndarray) -> None:
    free = np.ones(K.shape[0], bool)
    free[dirichlet_dofs] = False
    try:
        lu = spla.splu(K[free][:, free].tocsc())
    except RuntimeError as exc:
        raise ValueError("stiffness is singular after Dirichlet constraints: check boundary tagging") from exc
    piv = np.abs(lu.U.diagonal())
    if piv.min() <= 1e-12 * piv.max():
        raise ValueError("stiffness is singular after Dirichlet constraints: check boundary tagging")


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------


def gap_density(ops: DiscreteOperators, spec: MaterialSpec, u: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """Nodal ``kappa_N/2 jN^2 + kappa_T/2 (jT - pi)^2`` (J/m^2)."""
    jN, jT = ops.jumps(u)
    return 0.5 * spec.kappa_N * jN**2 + 0.5 * spec.kappa_T * (jT - pi) ** 2


def element_gap(ops: DiscreteOperators, spec: MaterialSpec, u: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """Element mean of the gap density under the trapezoidal rule."""
    G = gap_density(ops, spec, u, pi)
    return 0.5 * (G[:-1] + G[1:])


def interface_energy(ops: DiscreteOperators, spec: MaterialSpec, u, zeta, pi) -> float:
    G = gap_density(ops, spec, u, pi)
    pi = np.asarray(pi, float)
    e = ops.zeta_weights(zeta) @ G + 0.5 * spec.kappa_H * (ops.node_weights @ pi**2)
    if spec.kappa_G:
        e += 0.5 * spec.kappa_G * float(pi @ (ops.K_G @ pi))
    return float(e)


def bulk_energy(ops: DiscreteOperators, t: float, u: np.ndarray) -> float:
    """Transformed bulk energy ``1/2 u.K.u - <f1(t), u>``."""
    return float(0.5 * u @ (ops.K @ u) - ops.f1(t) @ u)


def stored_energy(ops: DiscreteOperators, spec: MaterialSpec, t: float, state, *, physical: bool = False):
    """Return ``(bulk, interface)`` stored energy of ``state`` at time ``t``.

    ``state`` needs ``u``, ``zeta`` and ``pi``. With ``physical=True`` the
    bulk part is the elastic energy of the total displacement ``u + uD(t)``
    minus the traction work, i.e. the transformed value plus ``lift_energy``.
    """
    bulk = bulk_energy(ops, t, state.u)
    if physical:
        bulk += ops.lift_energy(t)
    return bulk, interface_energy(ops, spec, state.u, state.zeta, state.pi)


def interface_gradient_u(ops: DiscreteOperators, spec: MaterialSpec, u, zeta, pi) -> np.ndarray:
    """Derivative of the interface energy with respect to nodal displacements."""
    jN, jT = ops.jumps(u)
    zw = ops.zeta_weights(zeta)
    return ops.JN.T @ (zw * spec.kappa_N * jN) + ops.JT.T @ (zw * spec.kappa_T * (jT - pi))


def reaction_force(ops: DiscreteOperators, spec: MaterialSpec, state, t: float) -> np.ndarray:
    """Total force (N per unit depth) exerted on the loaded Dirichlet side.

    Sums the residual of the untransformed equilibrium (bulk stiffness action
    on ``u + uD(t)`` minus applied tractions plus interface forces) over the
    Dirichlet vertices of the primary body.
    """
    u_tot = ops.total_displacement(t, state.u)
    a = ops.load.amplitude(t)
    r = ops.K @ u_tot - a * ops.traction_rate_vector
    r += interface_gradient_u(ops, spec, state.u, state.zeta, state.pi)
    nodes = ops.primary_dirichlet_nodes
    return np.array([r[2 * nodes].sum(), r[2 * nodes + 1].sum()])
