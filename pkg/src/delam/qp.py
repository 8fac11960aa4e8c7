"""Convex QP with nonnegativity bounds, solved by a primal active-set method.

Problem::

    minimize   1/2 x.H.x + g.x
    subject to x_i >= 0      for i in nonneg
               x_j = v_j     for j in fixed

The solver works on the free variables after a symmetric diagonal scaling
``x = D y`` with ``D = diag(H)^(-1/2)``; bounds at zero are invariant under
this scaling. Each iteration solves the equality-constrained subproblem on
the current working set by a dense Cholesky factorisation (sparse LU for
large problems) and either takes a step to the first blocking bound or
releases the bound with the most negative multiplier. The objective is
non-increasing along the iterates.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

Matrix = Union[np.ndarray, sp.spmatrix]

FEAS_TOL = 1e-12
DENSE_LIMIT = 2500


class QpError(RuntimeError):
    pass


class IndefiniteHessian(QpError):
    """The reduced Hessian on the free variables is not positive definite."""


class MaxIterations(QpError):
    """Iteration limit hit; ``solution`` holds the best iterate and residuals."""

    def __init__(self, msg: str, solution: "QpSolution"):
        super().__init__(msg)
        self.solution = solution


@dataclass
class QpProblem:
    H: Matrix
    g: np.ndarray
    nonneg: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    fixed: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    fixed_values: Optional[np.ndarray] = None

    def __post_init__(self):
        self.g = np.asarray(self.g, float)
        self.nonneg = np.asarray(self.nonneg, np.int64).ravel()
        self.fixed = np.asarray(self.fixed, np.int64).ravel()
        if self.fixed_values is None:
            self.fixed_values = np.zeros(len(self.fixed))
        self.fixed_values = np.asarray(self.fixed_values, float).ravel()
        n = len(self.g)
        if self.H.shape != (n, n):
            raise ValueError(f"H has shape {self.H.shape}, expected {(n, n)}")
        if len(self.fixed_values) != len(self.fixed):
            raise ValueError("fixed_values must match fixed")

    @property
    def n(self) -> int:
        return len(self.g)

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ (self.H @ x) + self.g @ x)

    # -- debug dump ----------------------------------------------------------
    def to_dict(self) -> dict:
        H = sp.coo_matrix(self.H)
        return {
            "format": "delam-qp",
            "version": 1,
            "objective": "1/2 x.H.x + g.x",
            "constraints": "x[nonneg] >= 0, x[fixed] = fixed_values",
            "n": self.n,
            "H": {"row": H.row.tolist(), "col": H.col.tolist(), "val": H.data.tolist()},
            "g": self.g.tolist(),
            "nonneg": self.nonneg.tolist(),
            "fixed": self.fixed.tolist(),
            "fixed_values": self.fixed_values.tolist(),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "QpProblem":
        n = d["n"]
        Hd = d["H"]
        H = sp.coo_matrix((Hd["val"], (Hd["row"], Hd["col"])), shape=(n, n)).tocsr()
        return cls(H, d["g"], d["nonneg"], d["fixed"], d["fixed_values"])

    @classmethod
    def from_json(cls, s: str) -> "QpProblem":
        return cls.from_dict(json.loads(s))


@dataclass
class QpSolution:
    x: np.ndarray
    multipliers: np.ndarray
    active_set: np.ndarray
    kkt_residual: float
    complementarity_residual: float
    feasibility_residual: float
    iterations: int
    objective: float
    objective_history: list = field(default_factory=list)
    converged: bool = True


def _dense(M: Matrix) -> np.ndarray:
    return M.toarray() if sp.issparse(M) else np.asarray(M, float)


class _Reduced:
    """Hessian restricted to the non-fixed variables, dense or sparse."""

    def __init__(self, H: Matrix, keep: np.ndarray):
        self.sparse = sp.issparse(H) and len(keep) > DENSE_LIMIT
        if self.sparse:
            Hc = sp.csr_matrix(H)
            self.M = Hc[keep][:, keep].tocsc()
        else:
            Hd = _dense(H)
            self.M = Hd[np.ix_(keep, keep)]

    def diag(self) -> np.ndarray:
        return self.M.diagonal().copy() if self.sparse else np.diag(self.M).copy()

    def scale(self, d: np.ndarray) -> None:
        if self.sparse:
            Ds = sp.diags(d)
            self.M = (Ds @ self.M @ Ds).tocsc()
        else:
            self.M = self.M * d[:, None] * d[None, :]

    def matvec(self, y: np.ndarray) -> np.ndarray:
        return self.M @ y

    def solve_free(self, free: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        if self.sparse:
            sub = self.M[free][:, free].tocsc()
            try:
                sol = spla.splu(sub).solve(rhs)
            except RuntimeError as exc:
                raise IndefiniteHessian("singular reduced Hessian") from exc
            if not np.all(np.isfinite(sol)):
                raise IndefiniteHessian("singular reduced Hessian")
            return sol
        sub = self.M[np.ix_(free, free)]
        try:
            c = sla.cho_factor(sub, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise IndefiniteHessian("reduced Hessian is not positive definite") from exc
        if np.min(np.abs(np.diag(c[0]))) ** 2 <= 1e-14 * np.max(np.abs(np.diag(sub))):
            raise IndefiniteHessian("reduced Hessian is numerically singular")
        return sla.cho_solve(c, rhs, check_finite=False)


def solve_qp(
    p: QpProblem,
    warm_start: Optional[np.ndarray] = None,
    tol_kkt: float = 1e-9,
    *,
    warm_active: Optional[np.ndarray] = None,
    max_iter: Optional[int] = None,
) -> QpSolution:
    """Minimise ``p`` by a primal active-set method.

    Parameters
    ----------
    warm_start : array, optional
        Initial primal guess; projected onto the bounds.
    tol_kkt : float
        Stationarity and dual-feasibility tolerance, relative to the largest
        scaled gradient entry.
    warm_active : array of int, optional
        Indices (into ``x``) of bounds to start in the working set. Defaults
        to the bounds at which the projected warm start sits.

    Raises
    ------
    IndefiniteHessian
        If the Hessian restricted to a working set is not positive definite.
    MaxIterations
        If the method fails to terminate; ``exc.solution`` is the last iterate.
    """
    n = p.n
    is_fixed = np.zeros(n, bool)
    is_fixed[p.fixed] = True
    keep = np.flatnonzero(~is_fixed)
    pos = -np.ones(n, np.int64)
    pos[keep] = np.arange(len(keep))

    x_full = np.zeros(n)
    x_full[p.fixed] = p.fixed_values
    g_full = p.g + (p.H @ x_full if np.any(x_full) else 0.0)

    red = _Reduced(p.H, keep)
    diag = red.diag()
    if np.any(diag <= 0) or not np.all(np.isfinite(diag)):
        raise IndefiniteHessian("Hessian has a non-positive diagonal entry on a free variable")
    d = 1.0 / np.sqrt(diag)
    red.scale(d)
    gs = d * g_full[keep]
    m = len(keep)

    bounded = np.zeros(m, bool)
    nb = p.nonneg[~is_fixed[p.nonneg]]
    bounded[pos[nb]] = True

    y = np.zeros(m)
    if warm_start is not None:
        y = np.asarray(warm_start, float)[keep] / d
        y[bounded] = np.maximum(y[bounded], 0.0)
    working = np.zeros(m, bool)
    if warm_active is not None:
        wa = np.asarray(warm_active, np.int64)
        wa = wa[~is_fixed[wa]]
        working[pos[wa]] = True
        working &= bounded
        y[working] = 0.0
    else:
        working = bounded & (y <= FEAS_TOL)
        y[working] = 0.0

    gscale = max(float(np.max(np.abs(gs))) if m else 0.0, np.finfo(float).tiny)
    tol = tol_kkt * gscale
    max_iter = max_iter or (10 * m + 50)

    def obj(v):
        return float(0.5 * v @ red.matvec(v) + gs @ v)

    history = [obj(y)]
    it = 0
    converged = False
    stationary = False
    while it < max_iter:
        if not stationary:
            it += 1
            free = np.flatnonzero(~working)
            target = np.zeros(m)
            if free.size:
                target[free] = red.solve_free(free, -gs[free])
            step = target - y
            cand = bounded & ~working & (step < 0) & (y + step < -FEAS_TOL)
            if np.any(cand):
                idx = np.flatnonzero(cand)
                ratios = -y[idx] / step[idx]
                alpha = float(np.clip(ratios.min(), 0.0, 1.0))
                block = idx[np.argmin(ratios)]
                y = y + alpha * step
                y[block] = 0.0
                working[block] = True
                history.append(obj(y))
                continue
            y = target
            history.append(obj(y))
            stationary = True
        grad = red.matvec(y) + gs
        lam = np.where(working, grad, 0.0)
        if not np.any(working) or lam[working].min() >= -tol:
            converged = True
            break
        release = np.flatnonzero(working)[np.argmin(lam[working])]
        working[release] = False
        stationary = False

    grad = red.matvec(y) + gs
    lam = np.where(working, grad, 0.0)
    x = x_full.copy()
    x[keep] = d * y
    stat = np.abs(grad[~working]).max(initial=0.0)
    dual = np.maximum(-lam[working], 0.0).max(initial=0.0)
    comp = np.abs(y[bounded] * grad[bounded]).max(initial=0.0)
    feas = np.maximum(-y[bounded], 0.0).max(initial=0.0)
    mult = np.zeros(n)
    mult[keep] = np.where(working, grad / d, 0.0)
    sol = QpSolution(
        x=x,
        multipliers=mult,
        active_set=keep[working],
        kkt_residual=max(stat, dual) / gscale,
        complementarity_residual=comp / gscale / max(1.0, float(np.abs(y).max(initial=0.0))),
        feasibility_residual=feas,
        iterations=it,
        objective=p.objective(x),
        objective_history=history,
        converged=converged,
    )
    if not converged:
        raise MaxIterations(f"active-set QP did not converge in {max_iter} iterations", sol)
    return sol
