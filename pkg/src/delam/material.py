"""Bulk and adhesive material parameters.

All quantities are SI: Pa, Pa/m, J/m^2, m. The config loader converts from
the engineering units used in the presets (GPa, GPa/m, MPa).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass(frozen=True)
class MaterialSpec:
    young_modulus: float
    poisson_ratio: float
    kappa_N: float
    kappa_T: float
    kappa_H: float
    a_I: float
    sigma_yield: float
    kappa_G: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ElasticityTensor:
    """Isotropic moduli; ``C[i, j, k, l]`` acts on symmetric 2x2 strains (plane strain)."""

    lam: float
    mu: float

    @property
    def C(self) -> np.ndarray:
        d = np.eye(2)
        return (
            self.lam * np.einsum("ij,kl->ijkl", d, d)
            + self.mu * (np.einsum("ik,jl->ijkl", d, d) + np.einsum("il,jk->ijkl", d, d))
        )

    @property
    def voigt(self) -> np.ndarray:
        """3x3 matrix for strains ``(e_xx, e_yy, 2 e_xy)``."""
        lam, mu = self.lam, self.mu
        return np.array([[lam + 2 * mu, lam, 0.0], [lam, lam + 2 * mu, 0.0], [0.0, 0.0, mu]])

    def contract(self, e: np.ndarray, f: np.ndarray) -> float:
        """``C e : f``."""
        return float(np.einsum("ijkl,kl,ij->", self.C, e, f))


def elasticity_tensor(spec: MaterialSpec) -> ElasticityTensor:
    E, nu = spec.young_modulus, spec.poisson_ratio
    lam = nu * E / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    return ElasticityTensor(lam, mu)


def mode_II_toughness(spec: MaterialSpec) -> float:
    """Energy per unit area dissipated by a complete debond in pure Mode II.

    Includes the hardening energy locked in the plastic slip, which cannot be
    released once the adhesive is gone.
    """
    return spec.a_I + (2.0 * spec.kappa_T * spec.a_I - spec.sigma_yield**2) / (2.0 * spec.kappa_H)


def yield_stress_bounds(spec: MaterialSpec) -> tuple[float, float]:
    """Open lower / closed upper bound on ``sigma_yield``.

    Below the lower bound plastic slip keeps evolving after complete
    debonding; above the upper bound the interface debonds before it can slip.
    """
    return math.sqrt(0.5 * spec.kappa_T * spec.a_I), math.sqrt(2.0 * spec.kappa_T * spec.a_I)


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    info: list[str] = field(default_factory=list)
    yield_bounds: tuple[float, float] = (float("nan"), float("nan"))
    sigma_yield: float = float("nan")
    a_II: float = float("nan")

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "errors": list(self.errors),
            "warnings": list(self.warnings),
            "info": list(self.info),
            "yield_bounds_Pa": list(self.yield_bounds),
            "sigma_yield_Pa": self.sigma_yield,
            "a_II_J_per_m2": self.a_II,
        }


def validate(spec: MaterialSpec) -> ValidationReport:
    rep = ValidationReport(sigma_yield=spec.sigma_yield)
    checks = [
        (spec.young_modulus > 0, "young_modulus must be > 0"),
        (0.0 < spec.poisson_ratio < 0.5, "poisson_ratio must lie in (0, 0.5)"),
        (spec.kappa_N >= 0, "kappa_N must be >= 0"),
        (spec.kappa_T >= 0, "kappa_T must be >= 0"),
        (spec.kappa_H > 0, "kappa_H must be > 0"),
        (spec.kappa_G >= 0, "kappa_G must be >= 0"),
        (spec.a_I > 0, "a_I must be > 0"),
        (spec.sigma_yield > 0, "sigma_yield must be > 0"),
    ]
    rep.errors.extend(msg for good, msg in checks if not good)
    if spec.kappa_T > 0 and spec.a_I > 0:
        lo, hi = yield_stress_bounds(spec)
        rep.yield_bounds = (lo, hi)
        s = spec.sigma_yield
        if s <= lo:
            rep.warnings.append(
                f"sigma_yield={s:.4g} Pa <= {lo:.4g} Pa: plastic slip may evolve after complete debonding"
            )
        if s > hi:
            rep.warnings.append(f"sigma_yield={s:.4g} Pa > {hi:.4g} Pa: no plastic slip before debonding")
    if spec.kappa_H > 0:
        rep.a_II = mode_II_toughness(spec)
    if spec.kappa_T > 0 and spec.kappa_N / spec.kappa_T < 2.0:
        rep.info.append(f"kappa_N/kappa_T = {spec.kappa_N / spec.kappa_T:.3g} < 2 (atypical for isotropic adhesives)")
    return rep


def from_config(cfg: dict) -> MaterialSpec:
    """Build a spec from engineering-unit config keys.

    ``sigma_yield_factor`` gives ``sigma_yield = factor * sqrt(2 kappa_N a_I)``;
    ``sigma_yield_MPa`` sets it directly. Exactly one must be present.
    """
    kN = float(cfg["kappaN_GPa_per_m"]) * 1e9
    kT = kN * float(cfg.get("kappaT_over_kappaN", 0.5))
    kH = kT * float(cfg.get("kappaH_over_kappaT", 1.0 / 9.0))
    aI = float(cfg["aI_J_per_m2"])
    has_mpa, has_factor = "sigma_yield_MPa" in cfg, "sigma_yield_factor" in cfg
    if has_mpa == has_factor:
        raise ValueError("give exactly one of sigma_yield_MPa, sigma_yield_factor")
    if has_mpa:
        sy = float(cfg["sigma_yield_MPa"]) * 1e6
    else:
        sy = float(cfg["sigma_yield_factor"]) * math.sqrt(2.0 * kN * aI)
    return MaterialSpec(
        young_modulus=float(cfg["E_GPa"]) * 1e9,
        poisson_ratio=float(cfg["nu"]),
        kappa_N=kN,
        kappa_T=kT,
        kappa_H=kH,
        a_I=aI,
        sigma_yield=sy,
        kappa_G=float(cfg.get("kappaG", 0.0)),
    )


PULL_PUSH_MATERIAL = {
    "E_GPa": 70.0,
    "nu": 0.35,
    "kappaN_GPa_per_m": 150.0,
    "kappaT_over_kappaN": 0.5,
    "kappaH_over_kappaT": 1.0 / 9.0,
    "kappaG": 0.0,
    "aI_J_per_m2": 187.5,
    "sigma_yield_factor": 0.56,
}


def pull_push_material() -> MaterialSpec:
    """Aluminium bar on an adhesive layer, as in the pull-push shear benchmark."""
    return from_config(PULL_PUSH_MATERIAL)
