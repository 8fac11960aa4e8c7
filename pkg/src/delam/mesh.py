"""Structured triangulations of rectangular bodies with a tagged contact interface.

The interface Gamma_C is stored as an ordered polyline. Every interface edge
carries a unit tangent ``t`` (the polyline direction) and a unit normal ``nu``
pointing from the obstacle / second body into the primary body, with
``(t, nu)`` right-handed. The non-penetration constraint then reads
``jump_N >= 0`` everywhere.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp


class BoundaryTag(str, enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"
    CONTACT = "contact"
    FREE = "free"


class InterfaceMode(str, enum.Enum):
    RIGID_OBSTACLE = "rigid_obstacle"
    TWO_BODY_MATCHED = "two_body_matched"


@dataclass(frozen=True)
class InterfaceLayout:
    """How the displacement jump across Gamma_C is formed.

    For ``RIGID_OBSTACLE`` the jump is the trace of ``u`` itself. For
    ``TWO_BODY_MATCHED`` ``pairs[i] = (plus, minus)`` lists coincident
    vertices of the primary (plus) and the second (minus) body, ordered like
    the interface nodes.
    """

    mode: InterfaceMode = InterfaceMode.RIGID_OBSTACLE
    pairs: Optional[np.ndarray] = None


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _rot90(v: np.ndarray) -> np.ndarray:
    # rotate by +90 degrees: t -> nu with (t, nu) right-handed
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


@dataclass(frozen=True)
class Mesh2D:
    """Immutable P1 triangulation with boundary tags and an ordered interface.

    Attributes
    ----------
    vertices : (n_vertices, 2) array
    triangles : (n_triangles, 3) int array, counter-clockwise
    boundary_edges : (n_boundary, 2) int array
    boundary_tags : tuple of BoundaryTag, one per boundary edge
    interface_nodes : (n_interface_nodes,) ordered vertex indices on Gamma_C
        (primary-body side).
    layout : InterfaceLayout
    body : (n_vertices,) int array, 0 for the primary body and 1 for the
        second body (two-body meshes only).
    spacing : float
        Largest grid-cell side length; this is the discretisation size the
        refinement ladder controls.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: tuple
    interface_nodes: np.ndarray
    layout: InterfaceLayout = field(default_factory=InterfaceLayout)
    body: Optional[np.ndarray] = None
    spacing: float = float("nan")

    def __post_init__(self):
        object.__setattr__(self, "vertices", _readonly(np.asarray(self.vertices, float)))
        object.__setattr__(self, "triangles", _readonly(np.asarray(self.triangles, np.int64)))
        object.__setattr__(
            self, "boundary_edges", _readonly(np.asarray(self.boundary_edges, np.int64).reshape(-1, 2))
        )
        object.__setattr__(self, "boundary_tags", tuple(BoundaryTag(t) for t in self.boundary_tags))
        object.__setattr__(self, "interface_nodes", _readonly(np.asarray(self.interface_nodes, np.int64)))
        body = np.zeros(len(self.vertices), np.int64) if self.body is None else self.body
        object.__setattr__(self, "body", _readonly(np.asarray(body, np.int64)))
        self._check()

    # -- invariants --------------------------------------------------------
    def _check(self):
        if len(self.boundary_tags) != len(self.boundary_edges):
            raise ValueError("one tag per boundary edge required")
        if np.any(self.signed_areas() <= 0.0):
            raise ValueError("triangles must have positive signed area")
        if BoundaryTag.DIRICHLET not in self.boundary_tags:
            raise ValueError("Dirichlet part of the boundary must be nonempty")
        if len(self.interface_nodes) == 1:
            raise ValueError("interface needs at least one edge")
        if self.layout.mode is InterfaceMode.TWO_BODY_MATCHED:
            pairs = np.asarray(self.layout.pairs)
            if pairs.shape != (len(self.interface_nodes), 2):
                raise ValueError("two-body layout needs one (plus, minus) pair per interface node")
            if not np.array_equal(pairs[:, 0], self.interface_nodes):
                raise ValueError("pair plus-nodes must coincide with interface_nodes")
            if not np.allclose(self.vertices[pairs[:, 0]], self.vertices[pairs[:, 1]], rtol=0, atol=1e-14):
                raise ValueError("paired interface nodes must have identical coordinates")

    # -- geometry ------------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_dofs(self) -> int:
        return 2 * len(self.vertices)

    @property
    def n_interface_nodes(self) -> int:
        return len(self.interface_nodes)

    @property
    def n_interface_edges(self) -> int:
        return max(len(self.interface_nodes) - 1, 0)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def h(self) -> float:
        """Mesh parameter: largest triangle diameter."""
        p = self.vertices[self.triangles]
        lengths = [np.linalg.norm(p[:, i] - p[:, (i + 1) % 3], axis=1) for i in range(3)]
        return float(np.max(lengths))

    @property
    def interface_edges(self) -> np.ndarray:
        n = self.interface_nodes
        return np.stack([n[:-1], n[1:]], axis=1)

    @property
    def interface_edge_lengths(self) -> np.ndarray:
        e = self.interface_edges
        return np.linalg.norm(self.vertices[e[:, 1]] - self.vertices[e[:, 0]], axis=1)

    @property
    def interface_tangents(self) -> np.ndarray:
        e = self.interface_edges
        d = self.vertices[e[:, 1]] - self.vertices[e[:, 0]]
        return d / np.linalg.norm(d, axis=1)[:, None]

    @property
    def interface_normals(self) -> np.ndarray:
        return _rot90(self.interface_tangents)

    def node_frames(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-interface-node (tangent, normal), averaging adjacent edges."""
        t_edge = self.interface_tangents
        t = np.zeros((self.n_interface_nodes, 2))
        t[:-1] += t_edge
        t[1:] += t_edge
        t /= np.linalg.norm(t, axis=1)[:, None]
        return t, _rot90(t)

    def interface_arclength(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.interface_edge_lengths)])

    def nodes_with_tag(self, tag: BoundaryTag) -> np.ndarray:
        mask = np.array([t is tag for t in self.boundary_tags], bool)
        return np.unique(self.boundary_edges[mask].ravel())

    def edges_with_tag(self, tag: BoundaryTag) -> np.ndarray:
        mask = np.array([t is tag for t in self.boundary_tags], bool)
        return self.boundary_edges[mask]

    # -- export ----------------------------------------------------------------
    def to_dict(self) -> dict:
        out = {
            "vertices": self.vertices.tolist(),
            "triangles": self.triangles.tolist(),
            "boundary_edges": [
                [int(a), int(b), tag.value] for (a, b), tag in zip(self.boundary_edges, self.boundary_tags)
            ],
            "interface_nodes": self.interface_nodes.tolist(),
            "interface_mode": self.layout.mode.value,
            "body": self.body.tolist(),
            "spacing": self.spacing,
        }
        if self.layout.pairs is not None:
            out["interface_pairs"] = np.asarray(self.layout.pairs).tolist()
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "Mesh2D":
        mode = InterfaceMode(d.get("interface_mode", InterfaceMode.RIGID_OBSTACLE.value))
        pairs = d.get("interface_pairs")
        layout = InterfaceLayout(mode, None if pairs is None else np.asarray(pairs, np.int64))
        edges = [(e[0], e[1]) for e in d["boundary_edges"]]
        tags = [e[2] for e in d["boundary_edges"]]
        return cls(
            d["vertices"],
            d["triangles"],
            edges,
            tags,
            d["interface_nodes"],
            layout,
            body=d.get("body"),
            spacing=float(d.get("spacing", float("nan"))),
        )


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def _n_cells(extent: float, h: float) -> int:
    return max(1, math.ceil(extent / h - 1e-9))


def _grid(xs: np.ndarray, ys: np.ndarray, offset: int = 0):
    nx, ny = len(xs), len(ys)
    X, Y = np.meshgrid(xs, ys)  # row j = y index
    verts = np.stack([X.ravel(), Y.ravel()], axis=1)

    def vid(i, j):
        return offset + j * nx + i

    tris = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            tris.append((a, b, c))
            tris.append((a, c, d))
    return verts, np.array(tris, np.int64), vid


def _x_breakpoints(length, glued_fraction, h_target, refine):
    x_glue = glued_fraction * length
    n1 = _n_cells(x_glue, h_target) * 2**refine
    xs = np.linspace(0.0, x_glue, n1 + 1)
    if glued_fraction < 1.0:
        n2 = _n_cells(length - x_glue, h_target) * 2**refine
        xs = np.concatenate([xs, np.linspace(x_glue, length, n2 + 1)[1:]])
    return xs, n1


def _check_dims(length, height, glued_fraction, h_target):
    if not (length > 0 and height > 0 and h_target > 0):
        raise ValueError("length, height and h_target must be positive")
    if not (0.0 < glued_fraction <= 1.0):
        raise ValueError("glued_fraction must lie in (0, 1]")
    if h_target > min(length, height):
        raise ValueError("h_target exceeds the smallest body dimension")


def build_rectangle_mesh(
    length: float,
    height: float,
    glued_fraction: float,
    h_target: float,
    *,
    refine: int = 0,
    dirichlet_side: str = "right",
) -> Mesh2D:
    """Structured mesh of ``[0, length] x [0, height]`` on a rigid obstacle.

    The bottom edge on ``0 <= x <= glued_fraction * length`` is the contact
    interface, the rest of the bottom is traction-free, ``dirichlet_side``
    carries the prescribed displacement and the remaining sides are Neumann.
    The glued and unglued parts of the bottom are gridded separately so that
    the end of the glued zone is always a grid line. ``refine`` halves all
    cell sizes that many times (nested refinement).
    """
    _check_dims(length, height, glued_fraction, h_target)
    xs, n_glued = _x_breakpoints(length, glued_fraction, h_target, refine)
    ny = _n_cells(height, h_target) * 2**refine
    ys = np.linspace(0.0, height, ny + 1)
    verts, tris, vid = _grid(xs, ys)
    nx = len(xs) - 1

    sides = {
        "bottom": [(vid(i, 0), vid(i + 1, 0)) for i in range(nx)],
        "right": [(vid(nx, j), vid(nx, j + 1)) for j in range(ny)],
        "top": [(vid(i + 1, ny), vid(i, ny)) for i in reversed(range(nx))],
        "left": [(vid(0, j + 1), vid(0, j)) for j in reversed(range(ny))],
    }
    if dirichlet_side not in ("right", "top", "left"):
        raise ValueError(f"unsupported dirichlet_side {dirichlet_side!r}")
    edges, tags = [], []
    for name, side in sides.items():
        for k, e in enumerate(side):
            if name == "bottom":
                tag = BoundaryTag.CONTACT if k < n_glued else BoundaryTag.FREE
            elif name == dirichlet_side:
                tag = BoundaryTag.DIRICHLET
            else:
                tag = BoundaryTag.NEUMANN
            edges.append(e)
            tags.append(tag)
    interface = [vid(i, 0) for i in range(n_glued + 1)]
    spacing = float(max(np.max(np.diff(xs)), np.max(np.diff(ys))))
    return Mesh2D(verts, tris, edges, tags, interface, spacing=spacing)


def build_bilayer_mesh(
    length: float,
    height_top: float,
    height_bottom: float,
    glued_fraction: float,
    h_target: float,
    *,
    refine: int = 0,
) -> Mesh2D:
    """Two stacked rectangles with duplicated nodes along ``y = 0``.

    The top body (primary, body 0) is loaded on its right side; the bottom
    body (body 1) is clamped along its bottom side. Matched vertex pairs on
    ``0 <= x <= glued_fraction * length`` form the contact interface.
    """
    _check_dims(length, min(height_top, height_bottom), glued_fraction, h_target)
    xs, n_glued = _x_breakpoints(length, glued_fraction, h_target, refine)
    nx = len(xs) - 1
    ny_t = _n_cells(height_top, h_target) * 2**refine
    ny_b = _n_cells(height_bottom, h_target) * 2**refine
    v_top, t_top, vid_t = _grid(xs, np.linspace(0.0, height_top, ny_t + 1))
    v_bot, t_bot, vid_b = _grid(xs, np.linspace(-height_bottom, 0.0, ny_b + 1), offset=len(v_top))
    verts = np.vstack([v_top, v_bot])
    tris = np.vstack([t_top, t_bot])
    body = np.concatenate([np.zeros(len(v_top), np.int64), np.ones(len(v_bot), np.int64)])

    edges, tags = [], []

    def add(seq, tag):
        for e in seq:
            edges.append(e)
            tags.append(tag)

    for i in range(nx):
        tag = BoundaryTag.CONTACT if i < n_glued else BoundaryTag.FREE
        add([(vid_t(i, 0), vid_t(i + 1, 0))], tag)
        add([(vid_b(i + 1, ny_b), vid_b(i, ny_b))], tag)
    add([(vid_t(nx, j), vid_t(nx, j + 1)) for j in range(ny_t)], BoundaryTag.DIRICHLET)
    add([(vid_t(i + 1, ny_t), vid_t(i, ny_t)) for i in range(nx)], BoundaryTag.NEUMANN)
    add([(vid_t(0, j + 1), vid_t(0, j)) for j in range(ny_t)], BoundaryTag.NEUMANN)
    add([(vid_b(i, 0), vid_b(i + 1, 0)) for i in range(nx)], BoundaryTag.DIRICHLET)
    add([(vid_b(nx, j), vid_b(nx, j + 1)) for j in range(ny_b)], BoundaryTag.NEUMANN)
    add([(vid_b(0, j + 1), vid_b(0, j)) for j in range(ny_b)], BoundaryTag.NEUMANN)

    plus = np.array([vid_t(i, 0) for i in range(n_glued + 1)])
    minus = np.array([vid_b(i, ny_b) for i in range(n_glued + 1)])
    layout = InterfaceLayout(InterfaceMode.TWO_BODY_MATCHED, np.stack([plus, minus], axis=1))
    spacing = float(max(np.max(np.diff(xs)), height_top / ny_t, height_bottom / ny_b))
    return Mesh2D(verts, tris, edges, tags, plus, layout, body=body, spacing=spacing)


def jump_operator(mesh: Mesh2D, layout: Optional[InterfaceLayout] = None) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Sparse maps from nodal displacements to nodal ``(jump_N, jump_T)``.

    Displacements are interleaved, ``u[2*v] = u_x(v)``, ``u[2*v+1] = u_y(v)``.
    Returns ``(JN, JT)``, each of shape ``(n_interface_nodes, 2*n_vertices)``.
    """
    layout = mesh.layout if layout is None else layout
    if mesh.n_interface_nodes == 0:
        raise ValueError("mesh has no interface")
    t, nu = mesh.node_frames()
    n_i = mesh.n_interface_nodes
    rows = np.repeat(np.arange(n_i), 2)

    def build(vec, nodes, sign):
        cols = np.stack([2 * nodes, 2 * nodes + 1], axis=1).ravel()
        return sp.csr_matrix((sign * vec.ravel(), (rows, cols)), shape=(n_i, mesh.n_dofs))

    if layout.mode is InterfaceMode.RIGID_OBSTACLE:
        nodes = mesh.interface_nodes
        return build(nu, nodes, 1.0), build(t, nodes, 1.0)
    pairs = np.asarray(layout.pairs)
    JN = build(nu, pairs[:, 0], 1.0) + build(nu, pairs[:, 1], -1.0)
    JT = build(t, pairs[:, 0], 1.0) + build(t, pairs[:, 1], -1.0)
    return JN.tocsr(), JT.tocsr()


def polyline_length(mesh: Mesh2D) -> float:
    return float(np.sum(mesh.interface_edge_lengths))


def interface_dofs(mesh: Mesh2D) -> np.ndarray:
    """Vertex indices whose displacements enter the interface energy."""
    if mesh.layout.mode is InterfaceMode.RIGID_OBSTACLE:
        return np.asarray(mesh.interface_nodes)
    return np.asarray(mesh.layout.pairs).ravel()


__all__: Sequence[str] = [
    "BoundaryTag",
    "InterfaceMode",
    "InterfaceLayout",
    "Mesh2D",
    "build_rectangle_mesh",
    "build_bilayer_mesh",
    "jump_operator",
    "polyline_length",
]
