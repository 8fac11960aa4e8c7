import numpy as np
import pytest
from conftest import soft_spec

from delam.assembly import LoadProgram, assemble, element_gap
from delam.diagnostics import energy_report, energy_scale
from delam.mesh import build_bilayer_mesh, build_rectangle_mesh
from delam.stepper import State, Stepper, n_steps, simulate, step, zeta_update


@pytest.fixture(scope="module")
def short_bar(bench_spec):
    mesh = build_rectangle_mesh(0.06, 0.0125, 0.9, 5e-3)
    return assemble(mesh, bench_spec, LoadProgram())


@pytest.fixture(scope="module")
def short_run(short_bar, bench_spec):
    return simulate(short_bar, bench_spec, 0.01, 1.0)


def test_run_debonds_and_stops(short_run):
    k = short_run.debond_step()
    assert k is not None
    assert len(short_run.states) - 1 == k + 3


def test_no_healing(short_run):
    for a, b in zip(short_run.states[:-1], short_run.states[1:]):
        assert np.all(b.zeta <= a.zeta)
        assert set(np.unique(b.zeta)) <= {0.0, 1.0}


def test_non_penetration(short_run, short_bar):
    for s in short_run.states:
        jN, _ = short_bar.jumps(s.u)
        assert jN.min() >= -1e-15


def test_dirichlet_dofs_stay_zero(short_run, short_bar):
    for s in short_run.states:
        assert np.all(s.u[short_bar.dirichlet_dofs] == 0.0)


def test_zeta_update_is_the_minimiser(short_run, short_bar, bench_spec):
    # per element: minimise |e| (g_e - a_I) z over 0 <= z <= zeta_prev
    for a, b in zip(short_run.states[:-1], short_run.states[1:]):
        g = element_gap(short_bar, bench_spec, b.u, b.pi)
        assert np.all(b.zeta[g > bench_spec.a_I] == 0.0)
        keep = g <= bench_spec.a_I
        assert np.array_equal(b.zeta[keep], a.zeta[keep])


def test_zeta_tie_keeps_previous(short_bar, bench_spec):
    jc = np.sqrt(2 * bench_spec.a_I / bench_spec.kappa_N)
    u = np.zeros(short_bar.mesh.n_dofs)
    u[2 * short_bar.mesh.interface_nodes + 1] = jc
    zeta = np.full(short_bar.n_interface_elements, 1.0)
    g = element_gap(short_bar, bench_spec, u, np.zeros(short_bar.n_interface_nodes))
    z = zeta_update(u, np.zeros(short_bar.n_interface_nodes), zeta, short_bar, bench_spec)
    assert np.array_equal(z[g == bench_spec.a_I], zeta[g == bench_spec.a_I])


def test_condensed_equals_full(short_bar, bench_spec):
    a = Stepper(short_bar, bench_spec, condense=True, tol_kkt=1e-12)
    b = Stepper(short_bar, bench_spec, condense=False, tol_kkt=1e-12)
    sa, sb = a.initial_state(), b.initial_state()
    for _ in range(15):
        sa, sb = a.step(sa, 0.01), b.step(sb, 0.01)
        scale = np.abs(sa.u).max()
        assert np.abs(sa.u - sb.u).max() <= 1e-8 * scale
        assert np.allclose(sa.pi, sb.pi, atol=1e-8 * max(1e-12, np.abs(sa.pi).max()))
        assert np.array_equal(sa.zeta, sb.zeta)


def test_module_level_step(short_bar, bench_spec):
    st = Stepper(short_bar, bench_spec)
    s0 = st.initial_state()
    a = step(s0, 0.02, short_bar, bench_spec)
    b = st.step(s0, 0.02)
    assert a.k == 1 and a.t == pytest.approx(0.02)
    assert np.allclose(a.u, b.u, atol=1e-12 * np.abs(b.u).max())


def test_initial_state_of_zero_load(short_bar, bench_spec):
    s = Stepper(short_bar, bench_spec).initial_state()
    assert np.all(s.u == 0) and np.all(s.zeta == 1) and np.all(s.pi == 0)


def test_n_steps():
    assert n_steps(1.2, 0.012) == 100
    assert n_steps(1.205, 0.012) == 100
    assert n_steps(0.0, 0.012) == 0


def test_failure_attaches_history(short_bar, bench_spec, monkeypatch):
    calls = {"n": 0}
    real = Stepper.step

    def flaky(self, prev, tau):
        calls["n"] += 1
        if calls["n"] == 3:
            raise RuntimeError("boom")
        return real(self, prev, tau)

    monkeypatch.setattr(Stepper, "step", flaky)
    with pytest.raises(RuntimeError) as exc:
        simulate(short_bar, bench_spec, 0.01, 1.0)
    assert len(exc.value.history.states) == 3


def test_two_body_run():
    spec = soft_spec(young_modulus=70e9, poisson_ratio=0.35)
    mesh = build_bilayer_mesh(0.06, 0.01, 0.01, 0.9, 5e-3)
    ops = assemble(mesh, spec, LoadProgram())
    hist = simulate(ops, spec, 0.02, 2.0)
    assert hist.debond_step() is not None
    reps = energy_report(hist, ops, spec)
    scale = energy_scale(reps)
    assert min(r.step_slack for r in reps[1:]) >= -1e-8 * scale
    for s in hist.states:
        assert ops.jumps(s.u)[0].min() >= -1e-14


def test_state_is_immutable():
    s = State(0.0, np.zeros(2), np.ones(1), np.zeros(2))
    with pytest.raises(AttributeError):
        s.t = 1.0
