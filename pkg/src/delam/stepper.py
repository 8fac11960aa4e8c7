"""Semi-implicit fractional-step time integration.

Each step first minimises over ``(u, pi)`` with the damage frozen at its
previous value (a convex QP), then minimises over ``zeta`` with ``(u, pi)``
fixed. The second problem is linear in ``zeta`` element by element and is
solved in closed form.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .assembly import DiscreteOperators, element_gap
from .material import MaterialSpec
from .qp import solve_qp
from .step_qp import Condensation, build_step_qp

log = logging.getLogger(__name__)

FULL_DELAMINATION = 1e-12


@dataclass(frozen=True)
class State:
    """Discrete fields at one time level.

    ``u`` is the transformed nodal displacement (zero on Gamma_D), ``zeta``
    the P0 damage per interface element, ``pi`` the P1 plastic slip per
    interface node.
    """

    t: float
    u: np.ndarray
    zeta: np.ndarray
    pi: np.ndarray
    k: int = 0


@dataclass
class StepInfo:
    qp_iterations: int
    kkt_residual: float
    objective_history: list


@dataclass
class History:
    states: list = field(default_factory=list)
    step_info: list = field(default_factory=list)
    step_reports: list = field(default_factory=list)
    tau: float = float("nan")

    def __len__(self):
        return len(self.states)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def debond_step(self) -> Optional[int]:
        """First step at which the whole interface is debonded."""
        for s in self.states:
            if np.max(s.zeta, initial=0.0) < FULL_DELAMINATION:
                return s.k
        return None


class Stepper:
    """Runs steps on fixed operators, reusing the bulk condensation and warm starts."""

    def __init__(self, ops: DiscreteOperators, spec: MaterialSpec, *, condense: bool = True, tol_kkt: float = 1e-9):
        self.ops = ops
        self.spec = spec
        self.tol_kkt = tol_kkt
        self.condensation = Condensation.build(ops) if condense else None
        self._active = None
        self.last_info: Optional[StepInfo] = None

    def _solve(self, t, zeta_prev, pi_prev, u_guess, *, freeze_slip=False):
        sq = build_step_qp(
            self.ops, self.spec, t, zeta_prev, pi_prev, condensation=self.condensation, freeze_slip=freeze_slip
        )
        x0 = sq.encode(u_guess, pi_prev)
        sol = solve_qp(sq.problem, warm_start=x0, tol_kkt=self.tol_kkt, warm_active=self._active)
        self._active = sol.active_set
        self.last_info = StepInfo(sol.iterations, sol.kkt_residual, sol.objective_history)
        return sq.decode(sol.x)

    def initial_state(self, zeta0=None, pi0=None, t0: float = 0.0) -> State:
        """Equilibrium displacement at ``t0`` for the given internal variables."""
        ops = self.ops
        zeta0 = np.ones(ops.n_interface_elements) if zeta0 is None else np.asarray(zeta0, float)
        pi0 = np.zeros(ops.n_interface_nodes) if pi0 is None else np.asarray(pi0, float)
        u, pi = self._solve(t0, zeta0, pi0, np.zeros(ops.mesh.n_dofs), freeze_slip=True)
        self._active = None
        return State(t0, u, zeta0.copy(), pi0.copy(), 0)

    def step(self, prev: State, tau: float) -> State:
        t = prev.t + tau
        u, pi = self._solve(t, prev.zeta, prev.pi, prev.u)
        zeta = zeta_update(u, pi, prev.zeta, self.ops, self.spec)
        return State(t, u, zeta, pi, prev.k + 1)


def zeta_update(u, pi, zeta_prev, ops: DiscreteOperators, spec: MaterialSpec) -> np.ndarray:
    """Closed-form damage minimiser with ``(u, pi)`` fixed.

    The objective is ``sum_e |e| (g_e - a_I) zeta_e`` over
    ``0 <= zeta_e <= zeta_prev_e``, with ``g_e`` the element gap-energy
    density. Elements with ``g_e > a_I`` debond completely; ties keep the
    previous value.
    """
    g = element_gap(ops, spec, u, pi)
    zeta_prev = np.asarray(zeta_prev, float)
    return np.where(g > spec.a_I, 0.0, zeta_prev)


def step(state_prev: State, tau: float, ops: DiscreteOperators, spec: MaterialSpec) -> State:
    """One fractional step without warm-start bookkeeping."""
    return Stepper(ops, spec).step(state_prev, tau)


def n_steps(T: float, tau: float) -> int:
    if T <= 0:
        return 0
    ratio = T / tau
    k = round(ratio)
    return k if math.isclose(ratio, k, rel_tol=1e-9) else math.floor(ratio)


def simulate(
    ops: DiscreteOperators,
    spec: MaterialSpec,
    tau: float,
    T: float,
    *,
    post_debond_steps: int = 3,
    stop_on_debond: bool = True,
    condense: bool = True,
    tol_kkt: float = 1e-9,
) -> History:
    """Integrate from the pristine state (``zeta = 1``, ``pi = 0``) up to ``T``.

    Stops early ``post_debond_steps`` steps after the interface is fully
    debonded. If a step fails, the exception is re-raised with the partial
    history attached as ``exc.history``.
    """
    stepper = Stepper(ops, spec, condense=condense, tol_kkt=tol_kkt)
    hist = History(tau=tau)
    state = stepper.initial_state()
    hist.states.append(state)
    hist.step_info.append(stepper.last_info)
    extra = None
    for _ in range(n_steps(T, tau)):
        try:
            state = stepper.step(state, tau)
        except Exception as exc:
            exc.history = hist
            raise
        hist.states.append(state)
        hist.step_info.append(stepper.last_info)
        if stop_on_debond:
            if extra is None and np.max(state.zeta, initial=0.0) < FULL_DELAMINATION:
                extra = post_debond_steps
                log.info("interface fully debonded at step %d (t=%.6g)", state.k, state.t)
            elif extra is not None:
                extra -= 1
            if extra is not None and extra <= 0:
                break
    return hist
