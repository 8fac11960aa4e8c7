"""Command-line driver: benchmark runs, convergence ladders and config validation.

::

    delam run --out results/ --preset paper_pull_push
    delam run --config my.json --out results/
    delam converge --config my.json --levels 3 --out ladder/
    delam validate --config my.json
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from .assembly import assemble
from .config import PRESETS, RunConfig
from .diagnostics import (
    amdp_report,
    amdp_residuals,
    energy_report,
    energy_scale,
    mixity_map,
    semistability_audit,
)
from .material import mode_II_toughness, validate
from .stepper import History, simulate

log = logging.getLogger("delam")

SUMMARY_SCHEMA = 1
FMT = "%.17g"
DEBOND_ALERT_BAND = (180, 280)

ENERGY_COLS = ["t", "bulk", "interface_stored", "diss_R0", "diss_R1", "total", "work", "gap"]
REACTION_COLS = ["t", "Fx", "Fy"]
AMDP_COLS = ["t", "lhs_pi", "rhs_pi", "lhs_zeta", "rhs_zeta"]
INTERFACE_COLS = ["s", "zeta", "pi", "jump_N", "jump_T"]
MIXITY_COLS = ["s", "damage", "plastic", "hardening", "ratio", "ratio_with_hardening"]


def write_csv(path: Path, columns: list, rows) -> None:
    rows = np.asarray(rows, float).reshape(-1, len(columns))
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for r in rows:
            fh.write(",".join(FMT % v for v in r) + "\n")


def _snapshot_steps(cfg: RunConfig, hist: History) -> list:
    last = hist.states[-1].k
    if cfg.snapshots is not None:
        missing = [k for k in cfg.snapshots if k > last or k < 0]
        if missing:
            log.warning("snapshot steps %s are beyond the run (last step %d)", missing, last)
        return sorted({k for k in cfg.snapshots if 0 <= k <= last})
    steps = set(np.linspace(0, last, 8).round().astype(int).tolist())
    if hist.debond_step() is not None:
        steps.add(hist.debond_step())
    return sorted(steps)


def _audit_steps(cfg: RunConfig, hist: History, rng) -> list:
    ks = np.arange(1, len(hist.states))
    if len(ks) <= cfg.audit_steps:
        return ks.tolist()
    return sorted(rng.choice(ks, cfg.audit_steps, replace=False).tolist())


def run_benchmark(cfg: RunConfig, out: Optional[Path] = None) -> dict:
    """Run one configuration and write all artefacts; returns the summary."""
    t_start = time.perf_counter()
    out = Path(out or cfg.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    spec = cfg.material_spec()
    report = validate(spec)
    if not report.ok:
        raise ValueError("invalid material: " + "; ".join(report.errors))
    mesh = cfg.mesh()
    ops = assemble(mesh, spec, cfg.load_program())
    summary = {
        "schema_version": SUMMARY_SCHEMA,
        "config": cfg.to_dict(),
        "validation": report.to_dict(),
        "a_II": mode_II_toughness(spec),
        "a_II_over_a_I": mode_II_toughness(spec) / spec.a_I,
        "tau": cfg.tau,
        "h": mesh.h,
        "n_interface_elements": ops.n_interface_elements,
    }
    if cfg.T_s == 0:
        for name, cols in (
            ("energies", ENERGY_COLS),
            ("reactions", REACTION_COLS),
            ("amdp", AMDP_COLS),
            ("mixity", MIXITY_COLS),
        ):
            write_csv(out / f"{name}.csv", cols, [])
        summary.update(n_steps=0, debond_step=None, runtime_s=time.perf_counter() - t_start)
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
        return summary

    hist = simulate(
        ops,
        spec,
        cfg.tau,
        cfg.T_s,
        post_debond_steps=cfg.post_debond_steps,
        stop_on_debond=cfg.stop_on_debond,
    )
    reps = energy_report(hist, ops, spec)
    write_csv(
        out / "energies.csv",
        ENERGY_COLS,
        [
            (r.t, r.bulk_energy, r.interface_stored, r.dissipated_R0_cum, r.dissipated_R1_cum, r.total, r.work_cum, r.imbalance_gap)
            for r in reps
        ],
    )
    write_csv(out / "reactions.csv", REACTION_COLS, [(r.t, *r.reaction) for r in reps])
    amdp = amdp_report(hist, ops, spec)
    write_csv(out / "amdp.csv", AMDP_COLS, amdp)
    for k in _snapshot_steps(cfg, hist):
        s = hist.states[k]
        jN, jT = ops.jumps(s.u)
        zn = ops.zeta_weights(s.zeta) / ops.node_weights
        write_csv(out / f"interface_k{k}.csv", INTERFACE_COLS, np.column_stack([mesh.interface_arclength(), zn, s.pi, jN, jT]))
    mix = mixity_map(hist, ops, spec)
    write_csv(
        out / "mixity.csv",
        MIXITY_COLS,
        np.column_stack([mix.s, mix.damage, mix.plastic, mix.hardening, mix.ratio, mix.ratio_with_hardening]),
    )

    rng = np.random.default_rng(cfg.seed)
    scale = energy_scale(reps)
    audits = [
        semistability_audit(hist.states[k], hist.states[k - 1], ops, spec, cfg.audit_samples, rng)
        for k in _audit_steps(cfg, hist, rng)
    ]
    res_pi, res_zeta = amdp_residuals(amdp)
    debond = hist.debond_step()
    iters = [i.qp_iterations for i in hist.step_info[1:]]
    gaps = np.array([r.imbalance_gap for r in reps])
    summary.update(
        n_steps=len(hist.states) - 1,
        debond_step=debond,
        debond_time=None if debond is None else hist.states[debond].t,
        debond_alert=debond is None or not (DEBOND_ALERT_BAND[0] <= debond <= DEBOND_ALERT_BAND[1]),
        energy={
            "final_total": reps[-1].total,
            "final_work": reps[-1].work_cum,
            "final_gap": reps[-1].imbalance_gap,
            "min_step_slack_rel": min((r.step_slack for r in reps[1:]), default=0.0) / scale,
            "gap_nondecreasing": bool(np.all(np.diff(gaps) >= -1e-8 * scale)),
        },
        amdp={
            "residual_pi": res_pi,
            "residual_zeta": res_zeta,
            "rhs_zeta_convention": "a_I*(zeta_0 - zeta_K) >= 0",
            "rhs_zeta_displayed_sign": -amdp[-1, 4],
        },
        mixity={
            "max_ratio": float(mix.ratio.max()),
            "max_ratio_with_hardening": float(mix.ratio_with_hardening.max()),
            "max_damage_density": float(mix.damage.max()),
        },
        semistability_worst_rel=(min(audits) / scale) if audits else 0.0,
        qp={"max_iterations": max(iters, default=0), "mean_iterations": float(np.mean(iters)) if iters else 0.0},
        runtime_s=time.perf_counter() - t_start,
    )
    if summary["debond_alert"]:
        log.warning("full delamination at step %s, outside the expected band %s", debond, DEBOND_ALERT_BAND)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=float))
    return summary


def _level_curve(cfg: RunConfig):
    spec = cfg.material_spec()
    ops = assemble(cfg.mesh(), spec, cfg.load_program())
    hist = simulate(ops, spec, cfg.tau, cfg.T_s, post_debond_steps=cfg.post_debond_steps, stop_on_debond=cfg.stop_on_debond)
    reps = energy_report(hist, ops, spec)
    first_loss = next((s.t for s in hist.states if s.zeta.min() < 1.0), None)
    return hist.times, np.array([r.total for r in reps]), first_loss


def convergence_study(cfg: RunConfig, levels: int, out: Optional[Path] = None) -> dict:
    """Run ``levels`` nested discretisations with ``tau/h`` fixed and compare total energies.

    Curves are resampled onto the coarsest time grid, truncated at the
    shortest run. ``sup_diff`` is over the common window; ``sup_diff_smooth``
    is restricted to times before the first damage on any level.
    """
    if levels < 2:
        raise ValueError("levels must be >= 2")
    curves = []
    for lvl in range(levels):
        try:
            curves.append(_level_curve(cfg.refined(lvl)))
        except Exception as exc:  # keep going, report the gap
            log.error("level %d failed: %s", lvl, exc)
            curves.append(None)
    ok = [c for c in curves if c is not None]
    t_end = min(c[0][-1] for c in ok)
    tc = curves[0][0] if curves[0] is not None else ok[0][0]
    tc = tc[tc <= t_end + 1e-12]
    losses = [c[2] for c in ok if c[2] is not None]
    t_smooth = min(losses) if losses else t_end
    table = np.column_stack([tc] + [np.interp(tc, c[0], c[1]) if c is not None else np.full(len(tc), np.nan) for c in curves])
    smooth = tc <= t_smooth + 1e-12
    sup, sup_s = [], []
    for i in range(levels - 1):
        d = np.abs(table[:, i + 2] - table[:, i + 1])
        sup.append(float(np.max(d)))
        sup_s.append(float(np.max(d[smooth])))
    result = {"levels": levels, "t_smooth_end": t_smooth, "sup_diff": sup, "sup_diff_smooth": sup_s}
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "convergence.csv", ["t"] + [f"total_l{i}" for i in range(levels)], table)
        (out / "convergence.json").write_text(json.dumps(result, indent=2))
    return result


def _load_config(args) -> RunConfig:
    if getattr(args, "preset", None):
        cfg = PRESETS[args.preset]()
        if args.config:
            log.warning("--preset given; ignoring --config %s", args.config)
        return cfg
    if not args.config:
        raise ValueError("either --config or --preset is required")
    return RunConfig.load(args.config)


def main(argv: Optional[list] = None) -> int:
    ap = argparse.ArgumentParser(prog="delam", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run one configuration")
    r.add_argument("--config")
    r.add_argument("--preset", choices=sorted(PRESETS))
    r.add_argument("--out", required=True)
    c = sub.add_parser("converge", help="nested refinement ladder with tau/h fixed")
    c.add_argument("--config")
    c.add_argument("--preset", choices=sorted(PRESETS))
    c.add_argument("--levels", type=int, default=3)
    c.add_argument("--out", required=True)
    v = sub.add_parser("validate", help="check the material parameters of a config")
    v.add_argument("--config")
    v.add_argument("--preset", choices=sorted(PRESETS))
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    try:
        cfg = _load_config(args)
        if args.cmd == "run":
            s = run_benchmark(cfg, Path(args.out))
            print(f"{s['n_steps']} steps, debond step {s['debond_step']}, results in {args.out}")
        elif args.cmd == "converge":
            res = convergence_study(cfg, args.levels, Path(args.out))
            print(json.dumps(res, indent=2))
        else:
            rep = validate(cfg.material_spec())
            print(json.dumps(rep.to_dict(), indent=2))
            return 0 if rep.ok else 1
    except Exception as exc:
        print(f"delam: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
