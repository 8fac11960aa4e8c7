"""Rate-independent mixed-mode delamination with a plastic-slip interface."""

from .assembly import LoadProgram, assemble
from .material import MaterialSpec, pull_push_material, validate
from .mesh import Mesh2D, build_bilayer_mesh, build_rectangle_mesh
from .stepper import History, State, Stepper, simulate

__all__ = [
    "History",
    "LoadProgram",
    "MaterialSpec",
    "Mesh2D",
    "State",
    "Stepper",
    "assemble",
    "build_bilayer_mesh",
    "build_rectangle_mesh",
    "pull_push_material",
    "simulate",
    "validate",
]
