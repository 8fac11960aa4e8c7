import numpy as np
import pytest

from delam import LoadProgram, assemble, build_rectangle_mesh, pull_push_material, simulate
from delam.diagnostics import amdp_report, energy_report
from delam.material import MaterialSpec

ACCEPTANCE_LINES = []


def soft_spec(young_modulus=1e9, **kw):
    """Benchmark adhesive on a Poisson-free bulk, for problems with exact P1 solutions."""
    p = pull_push_material()
    base = dict(
        young_modulus=young_modulus,
        poisson_ratio=0.0,
        kappa_N=p.kappa_N,
        kappa_T=p.kappa_T,
        kappa_H=p.kappa_H,
        a_I=p.a_I,
        sigma_yield=p.sigma_yield,
    )
    base.update(kw)
    return MaterialSpec(**base)


@pytest.fixture(scope="session")
def bench_spec():
    return pull_push_material()


@pytest.fixture(scope="session")
def benchmark(bench_spec):
    """The pull-push benchmark at the published tau and h, with its diagnostics."""
    mesh = build_rectangle_mesh(0.25, 0.0125, 0.9, 4.6e-3)
    ops = assemble(mesh, bench_spec, LoadProgram())
    hist = simulate(ops, bench_spec, 0.012, 3.6)
    reports = energy_report(hist, ops, bench_spec)
    return {"ops": ops, "hist": hist, "reports": reports, "amdp": amdp_report(hist, ops, bench_spec)}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
