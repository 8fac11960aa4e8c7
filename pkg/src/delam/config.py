"""Run configuration in engineering units, with the pull-push benchmark preset.

Lengths are given in mm, velocities in mm/s, moduli in GPa and GPa/m,
stresses in MPa and toughness in J/m^2; everything is converted to SI on
use.
"""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .assembly import LoadProgram
from .material import PULL_PUSH_MATERIAL, MaterialSpec, from_config
from .mesh import Mesh2D, build_rectangle_mesh

MM = 1e-3


@dataclass
class Geometry:
    length_mm: float = 250.0
    height_mm: float = 12.5
    glued_fraction: float = 0.9


@dataclass
class Loading:
    direction: tuple = (1.0, 0.6)
    velocity_mm_per_s: float = 1.0


@dataclass
class Discretisation:
    tau_s: float = 0.012
    h_mm: float = 4.6
    refine: int = 0


@dataclass
class RunConfig:
    geometry: Geometry = field(default_factory=Geometry)
    material: dict = field(default_factory=lambda: dict(PULL_PUSH_MATERIAL))
    loading: Loading = field(default_factory=Loading)
    discretisation: Discretisation = field(default_factory=Discretisation)
    T_s: float = 3.6
    out_dir: Optional[str] = None
    snapshots: Optional[list] = None  # None: evenly spaced plus the debond step
    seed: int = 0
    audit_samples: int = 100
    audit_steps: int = 10
    post_debond_steps: int = 3
    stop_on_debond: bool = True

    def __post_init__(self):
        for name, cls in (("geometry", Geometry), ("loading", Loading), ("discretisation", Discretisation)):
            v = getattr(self, name)
            if isinstance(v, dict):
                setattr(self, name, cls(**v))
        self.loading.direction = tuple(float(c) for c in self.loading.direction)
        if self.snapshots is not None:
            self.snapshots = [int(k) for k in self.snapshots]
        self.check()

    def check(self) -> None:
        d = self.discretisation
        if not (d.tau_s > 0 and d.h_mm > 0):
            raise ValueError("tau_s and h_mm must be positive")
        if self.T_s < 0:
            raise ValueError("T_s must be non-negative")
        if d.refine < 0:
            raise ValueError("refine must be non-negative")
        if len(self.loading.direction) != 2 or not np.any(self.loading.direction):
            raise ValueError("loading direction must be a nonzero 2-vector")

    # -- conversion ------------------------------------------------------------
    def material_spec(self) -> MaterialSpec:
        return from_config(self.material)

    def mesh(self) -> Mesh2D:
        g, d = self.geometry, self.discretisation
        return build_rectangle_mesh(
            g.length_mm * MM, g.height_mm * MM, g.glued_fraction, d.h_mm * MM, refine=d.refine
        )

    def load_program(self) -> LoadProgram:
        return LoadProgram(direction=self.loading.direction, velocity=self.loading.velocity_mm_per_s * MM)

    @property
    def tau(self) -> float:
        return self.discretisation.tau_s / 2**self.discretisation.refine

    def refined(self, level: int) -> "RunConfig":
        """Same problem with ``tau`` and ``h`` both halved ``level`` more times."""
        c = copy.deepcopy(self)
        c.discretisation.refine += level
        return c

    # -- serialisation -----------------------------------------------------------
    def to_dict(self) -> dict:
        d = asdict(self)
        d["loading"]["direction"] = list(self.loading.direction)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**copy.deepcopy(d))

    @classmethod
    def from_json(cls, s: str) -> "RunConfig":
        return cls.from_dict(json.loads(s))

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_json(Path(path).read_text())


def pull_push() -> RunConfig:
    """Aluminium bar glued on 90 % of its bottom, pulled at the right end along (1, 0.6)."""
    return RunConfig()


PRESETS = {"paper_pull_push": pull_push}
