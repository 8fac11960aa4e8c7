"""Energy ledger, maximum-dissipation sums, mode-mixity map and stability audits.

Energies are reported in physical form: the bulk energy is that of the total
displacement ``u + uD(t)``, and the work of the loading includes the lift
energy dropped by the transformation. The gap ``work - total`` is identical
to the transformed one, so the (im)balance is unaffected.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .assembly import (
    DiscreteOperators,
    bulk_energy,
    element_gap,
    interface_energy,
    reaction_force,
)
from .material import MaterialSpec


@dataclass
class StepReport:
    k: int
    t: float
    bulk_energy: float
    interface_stored: float
    dissipated_R0_cum: float
    dissipated_R1_cum: float
    total: float
    work_cum: float
    imbalance_gap: float
    step_slack: float  # rhs - lhs of the one-step energy inequality
    reaction: tuple
    amdp_pi_lhs: float = 0.0
    amdp_pi_rhs: float = 0.0
    amdp_zeta_lhs: float = 0.0
    amdp_zeta_rhs: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def r0_increment(ops: DiscreteOperators, spec: MaterialSpec, zeta_old, zeta_new) -> float:
    dz = np.asarray(zeta_old) - np.asarray(zeta_new)
    if np.any(dz < -1e-15):
        return float("inf")
    return float(spec.a_I * (ops.edge_lengths @ dz))


def r1_increment(ops: DiscreteOperators, spec: MaterialSpec, pi_old, pi_new) -> float:
    return float(spec.sigma_yield * (ops.node_weights @ np.abs(np.asarray(pi_new) - np.asarray(pi_old))))


def transformed_energy(ops, spec, t, u, zeta, pi) -> float:
    return bulk_energy(ops, t, u) + interface_energy(ops, spec, u, zeta, pi)


def energy_report(history, ops: DiscreteOperators, spec: MaterialSpec) -> list:
    """Per-state energy ledger; also fills ``history.step_reports``."""
    states = history.states
    if not states:
        raise ValueError("empty history")
    reports = []
    R0 = R1 = 0.0
    work_t = 0.0  # transformed complementary work, left-endpoint rule
    s0 = states[0]
    c0 = ops.lift_energy(s0.t)
    E_prev = None
    for k, s in enumerate(states):
        slack = 0.0
        if k > 0:
            p = states[k - 1]
            dR0 = r0_increment(ops, spec, p.zeta, s.zeta)
            dR1 = r1_increment(ops, spec, p.pi, s.pi)
            dW = -float((ops.f1(s.t) - ops.f1(p.t)) @ p.u)
            R0 += dR0
            R1 += dR1
            work_t += dW
        bulk_t = bulk_energy(ops, s.t, s.u)
        inter = interface_energy(ops, spec, s.u, s.zeta, s.pi)
        E_t = bulk_t + inter
        if k > 0:
            slack = (E_prev + dW) - (E_t + dR0 + dR1)
        E_prev = E_t
        lift = ops.lift_energy(s.t)
        bulk = bulk_t + lift
        total = bulk + inter + R0 + R1
        work = work_t + lift - c0
        rep = StepReport(
            k=s.k,
            t=s.t,
            bulk_energy=bulk,
            interface_stored=inter,
            dissipated_R0_cum=R0,
            dissipated_R1_cum=R1,
            total=total,
            work_cum=work,
            imbalance_gap=work - total,
            step_slack=slack,
            reaction=tuple(reaction_force(ops, spec, s, s.t)),
        )
        reports.append(rep)
    amdp = amdp_report(history, ops, spec)
    for rep, row in zip(reports, amdp):
        rep.amdp_pi_lhs, rep.amdp_pi_rhs, rep.amdp_zeta_lhs, rep.amdp_zeta_rhs = row[1:]
    history.step_reports = reports
    return reports


def slip_driving_force(ops: DiscreteOperators, spec: MaterialSpec, u, zeta, pi) -> np.ndarray:
    """Nodal ``-dE/dpi`` (already integrated with the lumped weights), in N/m."""
    jN, jT = ops.jumps(u)
    pi = np.asarray(pi, float)
    f = spec.kappa_T * ops.zeta_weights(zeta) * (jT - pi) - spec.kappa_H * ops.node_weights * pi
    if spec.kappa_G:
        f -= spec.kappa_G * (ops.K_G @ pi)
    return f


def amdp_report(history, ops: DiscreteOperators, spec: MaterialSpec) -> np.ndarray:
    """Cumulative sums of both discrete maximum-dissipation checks.

    Returns an array with columns ``(t, lhs_pi, rhs_pi, lhs_zeta, rhs_zeta)``.
    The driving forces are taken at the previous level: the slip force at
    ``(u, zeta, pi)^{k-1}`` with the damage that was frozen in step ``k-1``;
    the damage force is the gap-energy density at ``(u, pi)^{k-1}``.
    The damage dissipation is counted positive, ``a_I (zeta_0 - zeta)``.
    """
    states = history.states
    out = np.zeros((len(states), 5))
    out[0, 0] = states[0].t
    lp = rp = lz = 0.0
    zeta0 = states[0].zeta
    for k in range(1, len(states)):
        s, p = states[k], states[k - 1]
        frozen = states[k - 2].zeta if k >= 2 else states[0].zeta
        f = slip_driving_force(ops, spec, p.u, frozen, p.pi)
        dpi = s.pi - p.pi
        lp += float(f @ dpi)
        rp += r1_increment(ops, spec, p.pi, s.pi)
        g = element_gap(ops, spec, p.u, p.pi)
        lz += float((ops.edge_lengths * g) @ (p.zeta - s.zeta))
        rz = float(spec.a_I * (ops.edge_lengths @ (zeta0 - s.zeta)))
        out[k] = (s.t, lp, rp, lz, rz)
    return out


def amdp_residuals(amdp: np.ndarray) -> tuple[float, float]:
    """Final relative residuals ``(rhs - lhs) / rhs`` for the slip and damage channels."""
    last = amdp[-1]
    res = []
    for lhs, rhs in ((last[1], last[2]), (last[3], last[4])):
        res.append(0.0 if rhs <= 0 else (rhs - lhs) / rhs)
    return res[0], res[1]


@dataclass
class MixityMap:
    s: np.ndarray  # arc length of interface nodes
    damage: np.ndarray  # J/m^2, a_I (zeta_0 - zeta) averaged onto nodes
    plastic: np.ndarray  # J/m^2, sigma_yield * total variation of pi
    hardening: np.ndarray  # J/m^2, kappa_H/2 pi^2 locked after debonding
    a_I: float

    @property
    def dissipated(self) -> np.ndarray:
        return self.damage + self.plastic

    @property
    def total(self) -> np.ndarray:
        return self.damage + self.plastic + self.hardening

    @property
    def ratio(self) -> np.ndarray:
        """Dissipated density over ``a_I``: 1 for Mode I, ``(a_I + sigma pi_c)/a_I`` for Mode II."""
        return self.dissipated / self.a_I

    @property
    def ratio_with_hardening(self) -> np.ndarray:
        """Including the locked hardening energy; tends to ``a_II/a_I`` for Mode II."""
        return self.total / self.a_I


def mixity_map(history, ops: DiscreteOperators, spec: MaterialSpec) -> MixityMap:
    """Dissipated energy density per interface node after the evolution."""
    states = history.states
    first, last = states[0], states[-1]
    half = 0.5 * ops.edge_lengths * spec.a_I * (first.zeta - last.zeta)
    dmg = np.zeros(ops.n_interface_nodes)
    dmg[:-1] += half
    dmg[1:] += half
    dmg /= ops.node_weights
    tv = np.zeros(ops.n_interface_nodes)
    for a, b in zip(states[:-1], states[1:]):
        tv += np.abs(b.pi - a.pi)
    return MixityMap(
        s=ops.mesh.interface_arclength(),
        damage=dmg,
        plastic=spec.sigma_yield * tv,
        hardening=0.5 * spec.kappa_H * last.pi**2,
        a_I=spec.a_I,
    )


def semistability_audit(
    state,
    prev_state,
    ops: DiscreteOperators,
    spec: MaterialSpec,
    n_samples: int = 100,
    rng: Optional[np.random.Generator] = None,
    *,
    competitors: Optional[list] = None,
) -> float:
    """Most negative stability margin over random competitors (J).

    Damage: ``E(u, zeta~, pi) + R0(zeta~ - zeta) - E(u, zeta, pi)`` for
    ``0 <= zeta~ <= zeta``. Slip: ``E(u, zeta_prev, pi~) + R1(pi~ - pi)
    - E(u, zeta_prev, pi)`` with the damage frozen in that step. A value
    ``>= 0`` means no competitor beats the state. ``competitors`` may
    add explicit ``("zeta", field)`` / ``("pi", field)`` entries.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    u, z, pi = state.u, state.zeta, state.pi
    z_prev = prev_state.zeta
    E_z = interface_energy(ops, spec, u, z, pi)
    E_p = interface_energy(ops, spec, u, z_prev, pi)
    worst = np.inf
    scale = max(float(np.abs(pi).max(initial=0.0)), float(np.abs(ops.JT @ u).max(initial=0.0)), 1e-9)

    def zeta_margin(zt):
        return interface_energy(ops, spec, u, zt, pi) + r0_increment(ops, spec, z, zt) - E_z

    def pi_margin(pt):
        return interface_energy(ops, spec, u, z_prev, pt) + r1_increment(ops, spec, pi, pt) - E_p

    for _ in range(n_samples):
        mask = rng.random(len(z)) < rng.random()
        zt = np.where(mask, z * rng.random(len(z)), z)
        worst = min(worst, zeta_margin(zt))
        width = scale * 10.0 ** rng.uniform(-4, 0)
        sel = rng.random(len(pi)) < rng.random()
        pt = pi + np.where(sel, width * rng.standard_normal(len(pi)), 0.0)
        worst = min(worst, pi_margin(pt))
    for kind, fld in competitors or []:
        worst = min(worst, zeta_margin(np.asarray(fld)) if kind == "zeta" else pi_margin(np.asarray(fld)))
    return float(worst)


def energy_scale(reports: list) -> float:
    return max(1.0, max(abs(r.work_cum) for r in reports), max(abs(r.total) for r in reports))
