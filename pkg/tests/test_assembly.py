import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delam.assembly import (
    LoadProgram,
    assemble,
    bulk_energy,
    element_gap,
    gap_density,
    interface_energy,
    stiffness_matrix,
    stored_energy,
)
from delam.material import elasticity_tensor
from delam.mesh import BoundaryTag, build_bilayer_mesh, build_rectangle_mesh


@pytest.fixture(scope="module")
def small(bench_spec):
    mesh = build_rectangle_mesh(0.05, 0.01, 0.8, 5e-3)
    return assemble(mesh, bench_spec, LoadProgram())


def test_stiffness_symmetric_with_rigid_kernel(small):
    K = small.K
    assert abs(K - K.T).max() <= 1e-12 * abs(K).max()
    x, y = small.mesh.vertices.T
    for mode in (np.tile([1.0, 0.0], len(x)), np.tile([0.0, 1.0], len(x)), np.stack([-y, x], 1).ravel()):
        assert np.abs(K @ mode).max() <= 1e-9 * abs(K).max()


def test_patch_test_energy(bench_spec, rng):
    # a linear displacement field is represented exactly
    mesh = build_rectangle_mesh(0.03, 0.02, 1.0, 5e-3)
    K = stiffness_matrix(mesh, bench_spec)
    G = rng.standard_normal((2, 2)) * 1e-4
    u = (mesh.vertices @ G.T).ravel()
    eps = 0.5 * (G + G.T)
    area = 0.03 * 0.02
    ref = 0.5 * area * elasticity_tensor(bench_spec).contract(eps, eps)
    assert 0.5 * u @ (K @ u) == pytest.approx(ref, rel=1e-10)


def test_lift(small):
    mesh = small.mesh
    d = mesh.nodes_with_tag(BoundaryTag.DIRICHLET)
    lift = small.lift_uD.reshape(-1, 2)
    assert np.allclose(lift[d], [1.0, 0.6])
    assert np.allclose(lift[mesh.interface_nodes], 0.0)
    assert np.allclose(small.uD_rate, 1e-3 * small.lift_uD)
    assert np.all(small.f1_rate[small.dirichlet_dofs] == 0.0)


def test_lumped_weights_sum_to_length(small):
    assert small.node_weights.sum() == pytest.approx(0.04)
    assert small.zeta_weights(np.ones(small.n_interface_elements)) == pytest.approx(small.node_weights)


def test_energies_vanish_at_rest(small, bench_spec):
    z = np.zeros(small.mesh.n_dofs)
    assert interface_energy(small, bench_spec, z, np.ones(small.n_interface_elements), np.zeros(small.n_interface_nodes)) == 0
    assert bulk_energy(small, 0.0, z) == 0
    assert small.lift_energy(0.0) == 0


def test_element_gap_is_mean_of_nodal(small, bench_spec, rng):
    u = rng.standard_normal(small.mesh.n_dofs) * 1e-5
    pi = rng.standard_normal(small.n_interface_nodes) * 1e-5
    G = gap_density(small, bench_spec, u, pi)
    assert np.allclose(element_gap(small, bench_spec, u, pi), 0.5 * (G[1:] + G[:-1]))


def test_physical_energy_of_lift(small, bench_spec):
    # the physical bulk energy of u = 0 is the energy of the lift alone
    class S:
        u = np.zeros(small.mesh.n_dofs)
        zeta = np.ones(small.n_interface_elements)
        pi = np.zeros(small.n_interface_nodes)

    t = 0.3
    bulk, _ = stored_energy(small, bench_spec, t, S, physical=True)
    w = small.total_displacement(t, S.u)
    assert bulk == pytest.approx(0.5 * w @ (small.K @ w), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), lam=st.floats(0.0, 1.0))
def test_energy_convex_in_u_and_pi(small, bench_spec, seed, lam):
    r = np.random.default_rng(seed)
    zeta = r.random(small.n_interface_elements)
    n, m = small.mesh.n_dofs, small.n_interface_nodes

    def E(x):
        return bulk_energy(small, 0.2, x[:n]) + interface_energy(small, bench_spec, x[:n], zeta, x[n:])

    a, b = r.standard_normal((2, n + m)) * 1e-4
    assert E(lam * a + (1 - lam) * b) <= lam * E(a) + (1 - lam) * E(b) + 1e-9 * (abs(E(a)) + abs(E(b)) + 1)


def test_moving_dirichlet_on_contact_rejected(bench_spec):
    # the loaded left side shares its corner vertex with the interface
    m = build_rectangle_mesh(0.02, 0.01, 1.0, 5e-3, dirichlet_side="left")
    assert np.intersect1d(m.nodes_with_tag(BoundaryTag.DIRICHLET), m.interface_nodes).size
    with pytest.raises(ValueError, match="share vertices"):
        assemble(m, bench_spec, LoadProgram())


def test_two_body_assembly(bench_spec):
    m = build_bilayer_mesh(0.04, 0.01, 0.01, 0.75, 5e-3)
    ops = assemble(m, bench_spec, LoadProgram())
    lift = ops.lift_uD.reshape(-1, 2)
    plus, minus = m.layout.pairs.T
    assert np.allclose(lift[plus], 0) and np.allclose(lift[minus], 0)
    bottom = m.nodes_with_tag(BoundaryTag.DIRICHLET)
    assert np.allclose(lift[bottom[m.body[bottom] == 1]], 0)
    assert len(ops.primary_dirichlet_nodes) > 0
