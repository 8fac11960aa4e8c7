import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delam.cli import convergence_study, main, run_benchmark
from delam.config import RunConfig, pull_push


def small_config(**kw):
    cfg = RunConfig(
        geometry={"length_mm": 60.0, "height_mm": 12.5, "glued_fraction": 0.9},
        discretisation={"tau_s": 0.01, "h_mm": 5.0},
        T_s=0.3,
        audit_samples=10,
        audit_steps=3,
    )
    for k, v in kw.items():
        setattr(cfg, k, v)
    return cfg


def test_preset_encodes_benchmark():
    cfg = pull_push()
    assert cfg.geometry.length_mm == 250 and cfg.geometry.height_mm == 12.5 and cfg.geometry.glued_fraction == 0.9
    assert cfg.loading.direction == (1.0, 0.6) and cfg.loading.velocity_mm_per_s == 1.0
    assert cfg.discretisation.tau_s == 0.012 and cfg.discretisation.h_mm == 4.6
    assert cfg.material_spec().sigma_yield == pytest.approx(4.2e6, rel=1e-3)


@settings(max_examples=40, deadline=None)
@given(
    tau=st.floats(1e-4, 1.0),
    h=st.floats(0.1, 10.0),
    T=st.floats(0.0, 100.0),
    direction=st.tuples(st.floats(0.1, 5), st.floats(-5, 5)),
    snaps=st.none() | st.lists(st.integers(0, 500), max_size=5),
    seed=st.integers(0, 2**32 - 1),
)
def test_config_round_trip(tau, h, T, direction, snaps, seed):
    cfg = RunConfig(
        discretisation={"tau_s": tau, "h_mm": h},
        loading={"direction": direction, "velocity_mm_per_s": 2.0},
        T_s=T,
        snapshots=snaps,
        seed=seed,
    )
    assert RunConfig.from_json(cfg.to_json()) == cfg


@pytest.mark.parametrize(
    "patch",
    [
        {"discretisation": {"tau_s": 0.0, "h_mm": 4.6}},
        {"discretisation": {"tau_s": 0.01, "h_mm": -1.0}},
        {"loading": {"direction": [0.0, 0.0]}},
        {"T_s": -1.0},
        {"bogus": 1},
    ],
)
def test_config_rejects(patch):
    d = pull_push().to_dict()
    d.update(patch)
    with pytest.raises((ValueError, TypeError)):
        RunConfig.from_dict(d)


def test_zero_horizon_writes_headers(tmp_path):
    s = run_benchmark(small_config(T_s=0.0), tmp_path)
    assert s["n_steps"] == 0
    for name in ("energies", "reactions", "amdp", "mixity"):
        assert len((tmp_path / f"{name}.csv").read_text().splitlines()) == 1
    assert json.loads((tmp_path / "summary.json").read_text())["schema_version"] == 1


def test_run_outputs_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    s = run_benchmark(small_config(), a)
    run_benchmark(small_config(), b)
    names = sorted(p.name for p in a.iterdir())
    assert {"energies.csv", "reactions.csv", "amdp.csv", "mixity.csv", "summary.json"} <= set(names)
    assert any(n.startswith("interface_k") for n in names)
    for n in names:
        if n.endswith(".csv"):
            assert (a / n).read_bytes() == (b / n).read_bytes()
    head = (a / "energies.csv").read_text().splitlines()
    assert head[0] == "t,bulk,interface_stored,diss_R0,diss_R1,total,work,gap"
    assert len(head) == s["n_steps"] + 2
    assert s["energy"]["gap_nondecreasing"]


def test_explicit_snapshots(tmp_path):
    run_benchmark(small_config(snapshots=[0, 3, 10_000]), tmp_path)
    assert sorted(p.name for p in tmp_path.glob("interface_k*.csv")) == ["interface_k0.csv", "interface_k3.csv"]


def test_convergence_two_levels(tmp_path):
    res = convergence_study(small_config(T_s=0.1), 2, tmp_path)
    assert len(res["sup_diff"]) == 1
    assert (tmp_path / "convergence.csv").exists()
    with pytest.raises(ValueError):
        convergence_study(small_config(), 1)


def test_main_commands(tmp_path, capsys):
    cfg = small_config(T_s=0.05)
    path = tmp_path / "cfg.json"
    path.write_text(cfg.to_json())
    assert main(["validate", "--config", str(path)]) == 0
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "summary.json").exists()
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert "error" in capsys.readouterr().err


def test_validate_flags_bad_material(tmp_path):
    cfg = small_config()
    cfg.material = dict(cfg.material, sigma_yield_factor=0.2)
    path = tmp_path / "cfg.json"
    path.write_text(cfg.to_json())
    assert main(["validate", "--config", str(path)]) == 0  # warnings only
    cfg.material = dict(cfg.material, nu=0.7)
    path.write_text(cfg.to_json())
    assert main(["validate", "--config", str(path)]) == 1
