"""Sensitivity of the benchmark to the time step at fixed mesh.

Reports the step of complete delamination, the AMDP residuals and the
mid-interface mixity plateau for a few values of tau.

    python scripts/time_step_sweep.py [--taus 0.012 0.004 0.0012]
"""

import argparse

import numpy as np

from delam import assemble, simulate
from delam.config import pull_push
from delam.diagnostics import amdp_report, amdp_residuals, mixity_map


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--taus", type=float, nargs="+", default=[0.012, 0.004, 0.0012])
    args = ap.parse_args()
    cfg = pull_push()
    spec = cfg.material_spec()
    ops = assemble(cfg.mesh(), spec, cfg.load_program())
    print(f"{'tau':>8} {'debond k':>9} {'t':>7} {'res_pi':>8} {'res_zeta':>9} {'plateau':>8}")
    for tau in args.taus:
        hist = simulate(ops, spec, tau, cfg.T_s)
        k = hist.debond_step()
        r_pi, r_z = amdp_residuals(amdp_report(hist, ops, spec))
        ratio = mixity_map(hist, ops, spec).ratio
        n = len(ratio)
        plateau = float(np.median(ratio[n // 3 : 2 * n // 3]))
        t = hist.states[k].t if k is not None else float("nan")
        print(f"{tau:8.4g} {k!s:>9} {t:7.3f} {r_pi:8.2%} {r_z:9.2%} {plateau:8.2f}")


if __name__ == "__main__":
    main()
