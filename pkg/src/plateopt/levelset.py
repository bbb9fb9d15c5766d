"""Level-set representation of the unknown domain inside the box.

The geometry is the interior of {g >= 0} for a P1 function g, but the
solvers never need that set explicitly: they only see the smoothed
indicator evaluated at quadrature points.  Contours of the zero level set
are extracted for reporting and figures only.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .fem import NodalField, at_quadrature
from .heaviside import SmoothedHeaviside
from .mesh import TriMesh

RegionPredicate = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class LevelSet:
    """Geometry parametrization g plus an optional constraint region.

    When a constraint region is present, admissible level sets satisfy
    g >= 0 at every vertex inside it (the region must stay inside the
    domain); :func:`project_constraint` restores that property.
    """

    field: NodalField
    region: Optional[RegionPredicate] = None

    @property
    def mesh(self) -> TriMesh:
        return self.field.mesh

    def with_field(self, field: NodalField) -> "LevelSet":
        return LevelSet(field, self.region)


def two_holes_expression(x1, x2):
    """Initial shape: unit disk pierced by two circular holes."""
    return np.minimum.reduce([
        x1**2 + x2**2 - 1.0 / 16.0,
        (x1 - 0.5) ** 2 + x2**2 - 1.0 / 64.0,
        1.0 - x1**2 - x2**2,
    ])


def disk_expression(x1, x2):
    """Initial shape: simply connected disk of radius sqrt(3)/2."""
    return -x1**2 - x2**2 + 0.75


PRESET_SHAPES = {
    "two_holes": two_holes_expression,
    "disk": disk_expression,
}


def initial_level_set(
    mesh: TriMesh,
    preset: str,
    expression: Optional[Callable] = None,
    region: Optional[RegionPredicate] = None,
) -> LevelSet:
    """Nodal interpolation of a named initial shape or a custom callable."""
    if preset == "custom":
        if expression is None:
            raise ValueError("custom preset requires an expression callable")
        shape = expression
    else:
        try:
            shape = PRESET_SHAPES[preset]
        except KeyError:
            raise ValueError(
                f"unknown level-set preset {preset!r}; "
                f"expected one of {sorted(PRESET_SHAPES)} or 'custom'"
            ) from None
    return LevelSet(NodalField.from_callable(mesh, shape), region)


def indicator_at_quadrature(level_set: LevelSet, profile: SmoothedHeaviside):
    """Smoothed indicator and its derivative at the quadrature points.

    Returns a pair of (n_triangles, 3) arrays: the profile applied to the
    P1-interpolated level-set values, and the profile derivative at the
    same points.
    """
    g_q = at_quadrature(level_set.mesh, level_set.field)
    return profile.value(g_q), profile.derivative(g_q)


def project_constraint(level_set: LevelSet) -> LevelSet:
    """Clamp g to be nonnegative at the vertices inside the constraint region.

    Idempotent and never decreases g; vertices outside the region are left
    untouched.
    """
    if level_set.region is None:
        raise ValueError("level set has no constraint region to project onto")
    x = level_set.mesh.vertices
    inside = np.asarray(level_set.region(x[:, 0], x[:, 1]), dtype=bool)
    values = level_set.field.values.copy()
    values[inside] = np.maximum(values[inside], 0.0)
    return level_set.with_field(level_set.field.with_values(values))


# ---------------------------------------------------------------------------
# zero-contour extraction (marching triangles)


def extract_contour(level_set: LevelSet) -> list:
    """Polylines of the zero level set, chained from per-triangle segments.

    Each returned polyline is an (k, 2) array of points lying on mesh edges
    where the interpolated level set vanishes; closed polylines repeat
    their first point at the end.
    """
    mesh = level_set.mesh
    g = level_set.field.values
    tris = mesh.triangles
    inside = g >= 0.0

    segments = []  # (key_a, key_b)
    points: dict = {}  # key -> coordinates

    def crossing_key(a: int, b: int):
        ga, gb = g[a], g[b]
        t = ga / (ga - gb)
        if t <= 0.0:
            key = ("v", a)
            pt = mesh.vertices[a]
        elif t >= 1.0:
            key = ("v", b)
            pt = mesh.vertices[b]
        else:
            key = ("e", min(a, b), max(a, b))
            pt = mesh.vertices[a] + t * (mesh.vertices[b] - mesh.vertices[a])
        points.setdefault(key, np.asarray(pt, dtype=float))
        return key

    ins = inside[tris]
    mixed = np.flatnonzero((ins.any(axis=1)) & (~ins.all(axis=1)))
    edge_pairs = ((0, 1), (1, 2), (2, 0))
    for t_idx in mixed:
        i0, i1, i2 = tris[t_idx]
        verts = (i0, i1, i2)
        keys = []
        for a_local, b_local in edge_pairs:
            a, b = verts[a_local], verts[b_local]
            if inside[a] != inside[b]:
                keys.append(crossing_key(a, b))
        if len(keys) == 2 and keys[0] != keys[1]:
            segments.append((keys[0], keys[1]))

    return _chain_segments(segments, points)


def _chain_segments(segments, points) -> list:
    adjacency: dict = {}
    for idx, (a, b) in enumerate(segments):
        adjacency.setdefault(a, []).append((idx, b))
        adjacency.setdefault(b, []).append((idx, a))

    used = [False] * len(segments)

    def extend(chain):
        # grow the chain at its tail until it closes or dead-ends
        while True:
            current = chain[-1]
            step = next(
                ((idx, other) for idx, other in adjacency.get(current, [])
                 if not used[idx]),
                None,
            )
            if step is None:
                return
            idx, other = step
            used[idx] = True
            chain.append(other)
            if other == chain[0]:
                return

    polylines = []
    for seed, (a, b) in enumerate(segments):
        if used[seed]:
            continue
        used[seed] = True
        chain = [a, b]
        extend(chain)
        if chain[0] != chain[-1]:
            # open so far: grow the other end too
            chain.reverse()
            extend(chain)
        polylines.append(np.array([points[k] for k in chain]))
    return polylines


def is_closed(polyline: np.ndarray) -> bool:
    return len(polyline) > 2 and np.array_equal(polyline[0], polyline[-1])


def enclosed_area(polylines) -> float:
    """Total unsigned shoelace area of the closed polylines."""
    total = 0.0
    for poly in polylines:
        if not is_closed(poly):
            continue
        x, y = poly[:-1, 0], poly[:-1, 1]
        total += 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    return total


def disk_region(radius: float, center=(0.0, 0.0)) -> RegionPredicate:
    """Membership test for a disk, usable as constraint or tracking region."""
    cx, cy = center

    def predicate(x1, x2):
        return (x1 - cx) ** 2 + (x2 - cy) ** 2 <= radius**2

    return predicate
