"""Structured P1 triangulations of the design box ]-1,1[ x ]-1,1[.

The whole library works on a fixed square box; geometry variations are
carried by a level-set field, never by remeshing.  The mesh is therefore
deliberately simple: a uniform grid of vertices, every cell split into two
triangles along the same diagonal, so that runs are bit-reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BOX_MIN = -1.0
BOX_MAX = 1.0
BOX_AREA = (BOX_MAX - BOX_MIN) ** 2


@dataclass(frozen=True)
class TriMesh:
    """Conforming triangulation of the closed box.

    Attributes
    ----------
    vertices : (n_vertices, 2) float array
        Vertex coordinates.
    triangles : (n_triangles, 3) int array
        Vertex indices per triangle, counterclockwise.
    boundary_mask : (n_vertices,) bool array
        True exactly for vertices on the box boundary.
    element_area : (n_triangles,) float array
        Signed area per triangle (positive by construction).
    basis_gradients : (n_triangles, 3, 2) float array
        Gradients of the three linear barycentric basis functions,
        constant per triangle.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_mask: np.ndarray = field(init=False)
    element_area: np.ndarray = field(init=False)
    basis_gradients: np.ndarray = field(init=False)

    def __post_init__(self):
        verts = np.ascontiguousarray(np.asarray(self.vertices, dtype=float))
        tris = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise ValueError("vertices must be an (n, 2) array")
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise ValueError("triangles must be an (m, 3) array")
        if tris.min(initial=0) < 0 or tris.max(initial=-1) >= len(verts):
            raise ValueError("triangle vertex index out of range")

        p0 = verts[tris[:, 0]]
        e1 = verts[tris[:, 1]] - p0
        e2 = verts[tris[:, 2]] - p0
        area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        if np.any(area <= 0.0):
            raise ValueError("all triangles must have positive signed area")

        # grad of barycentric basis i is the inward normal of the opposite
        # edge scaled by 1/(2A); edges taken in cyclic order.
        edges = np.stack(
            [
                verts[tris[:, 2]] - verts[tris[:, 1]],
                verts[tris[:, 0]] - verts[tris[:, 2]],
                verts[tris[:, 1]] - verts[tris[:, 0]],
            ],
            axis=1,
        )
        grads = np.empty_like(edges)
        grads[:, :, 0] = -edges[:, :, 1]
        grads[:, :, 1] = edges[:, :, 0]
        grads /= (2.0 * area)[:, None, None]

        on_boundary = (
            (np.abs(np.abs(verts[:, 0]) - BOX_MAX) <= 1e-14)
            | (np.abs(np.abs(verts[:, 1]) - BOX_MAX) <= 1e-14)
        )

        for name, value in (
            ("vertices", verts),
            ("triangles", tris),
            ("boundary_mask", on_boundary),
            ("element_area", area),
            ("basis_gradients", grads),
        ):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def edge_lengths(self) -> np.ndarray:
        """Lengths of the three edges of every triangle, shape (m, 3)."""
        verts, tris = self.vertices, self.triangles
        out = np.empty((self.n_triangles, 3))
        for k, (a, b) in enumerate(((1, 2), (2, 0), (0, 1))):
            out[:, k] = np.linalg.norm(verts[tris[:, a]] - verts[tris[:, b]], axis=1)
        return out


@dataclass(frozen=True)
class MeshStatistics:
    min_area: float
    max_area: float
    h_max: float


def build_structured(n_per_side: int) -> TriMesh:
    """Uniform grid of n_per_side**2 vertices on the box, each cell split
    into two triangles along the bottom-left/top-right diagonal.

    Parameters
    ----------
    n_per_side : int
        Vertices per side, at least 2.

    Returns
    -------
    TriMesh
        2*(n_per_side-1)**2 triangles, all counterclockwise.
    """
    if n_per_side < 2:
        raise ValueError(f"n_per_side must be >= 2, got {n_per_side}")
    ticks = np.linspace(BOX_MIN, BOX_MAX, n_per_side)
    xx, yy = np.meshgrid(ticks, ticks, indexing="xy")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    n = n_per_side
    cells_i, cells_j = np.meshgrid(np.arange(n - 1), np.arange(n - 1), indexing="xy")
    v00 = (cells_j * n + cells_i).ravel()
    v10 = v00 + 1
    v01 = v00 + n
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * len(v00), 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper
    return TriMesh(vertices, triangles)


def mesh_statistics(mesh: TriMesh) -> MeshStatistics:
    """Smallest/largest element area and the longest edge length."""
    lengths = mesh.edge_lengths()
    return MeshStatistics(
        min_area=float(mesh.element_area.min()),
        max_area=float(mesh.element_area.max()),
        h_max=float(lengths.max()),
    )
