"""P1 finite elements on the box: fields, quadrature, assembly, solve.

Everything integrates with the 3-point edge-midpoint rule, which is exact
for quadratic integrands; nonlinear integrands are evaluated at the
quadrature points from P1-interpolated arguments.  The homogeneous
Dirichlet condition on the box boundary is imposed by row/column
elimination, so assembled operators act on the free vertices only.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import TriMesh

# PHI[q, i] = value of basis i at the midpoint of the edge opposite vertex q
PHI = 0.5 * (np.ones((3, 3)) - np.eye(3))


class MeshMismatchError(ValueError):
    """Two fields or operators built on different meshes were combined."""


class SolverConvergenceError(RuntimeError):
    """Iterative solve stopped above tolerance."""

    def __init__(self, residual: float, tolerance: float, iterations: int):
        self.residual = residual
        self.tolerance = tolerance
        self.iterations = iterations
        super().__init__(
            f"linear solve did not converge: residual {residual:.3e} "
            f"> tolerance {tolerance:.3e} after {iterations} iterations"
        )


@dataclass(frozen=True)
class NodalField:
    """Piecewise-linear scalar field given by one value per mesh vertex."""

    mesh: TriMesh
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.mesh.n_vertices,):
            raise ValueError(
                f"expected {self.mesh.n_vertices} nodal values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("nodal values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, mesh: TriMesh, fn: Callable) -> "NodalField":
        """Interpolate ``fn(x1, x2)`` at the vertices."""
        x = mesh.vertices
        return cls(mesh, np.broadcast_to(np.asarray(fn(x[:, 0], x[:, 1]), dtype=float),
                                         (mesh.n_vertices,)).copy())

    @classmethod
    def constant(cls, mesh: TriMesh, value: float) -> "NodalField":
        return cls(mesh, np.full(mesh.n_vertices, float(value)))

    @classmethod
    def zeros(cls, mesh: TriMesh) -> "NodalField":
        return cls(mesh, np.zeros(mesh.n_vertices))

    def with_values(self, values: np.ndarray) -> "NodalField":
        return NodalField(self.mesh, values)

    def __add__(self, other: "NodalField") -> "NodalField":
        require_same_mesh(self, other)
        return NodalField(self.mesh, self.values + other.values)

    def __sub__(self, other: "NodalField") -> "NodalField":
        require_same_mesh(self, other)
        return NodalField(self.mesh, self.values - other.values)

    def __mul__(self, scalar: float) -> "NodalField":
        return NodalField(self.mesh, self.values * float(scalar))

    __rmul__ = __mul__


def require_same_mesh(*objects) -> TriMesh:
    mesh = objects[0].mesh
    for obj in objects[1:]:
        if obj.mesh is not mesh:
            raise MeshMismatchError("fields live on different meshes")
    return mesh


# ---------------------------------------------------------------------------
# quadrature


def quadrature_points(mesh: TriMesh) -> np.ndarray:
    """Edge midpoints per triangle, shape (n_triangles, 3, 2)."""
    corners = mesh.vertices[mesh.triangles]  # (m, 3, 2)
    return np.einsum("qi,mid->mqd", PHI, corners)


def at_quadrature(mesh: TriMesh, field: Union[NodalField, np.ndarray]) -> np.ndarray:
    """P1 interpolation of a nodal field at the quadrature points, (m, 3)."""
    values = field.values if isinstance(field, NodalField) else np.asarray(field)
    return values[mesh.triangles] @ PHI.T


def integrate_quadrature(mesh: TriMesh, point_values: np.ndarray) -> float:
    """Sum the 3-point rule over all triangles for given point values (m, 3)."""
    return float(np.dot(mesh.element_area / 3.0, point_values.sum(axis=1)))


def integrate(fields: Iterable[NodalField], region_weight=1.0) -> float:
    """Integral over the box of the product of the given fields.

    The product is formed pointwise at the quadrature points from the
    P1-interpolated factors.  ``region_weight`` may be a constant, another
    NodalField, or a raw (m, 3) array of quadrature-point values (used for
    sharp region indicators).
    """
    fields = list(fields)
    if fields:
        mesh = require_same_mesh(*fields)
    elif isinstance(region_weight, NodalField):
        mesh = region_weight.mesh
    else:
        raise ValueError("integrate needs at least one field or a NodalField weight")

    if isinstance(region_weight, NodalField):
        require_same_mesh(fields[0] if fields else region_weight, region_weight)
        product = at_quadrature(mesh, region_weight)
    elif np.ndim(region_weight) == 0:
        product = np.full((mesh.n_triangles, 3), float(region_weight))
    else:
        product = np.array(region_weight, dtype=float)
        if product.shape != (mesh.n_triangles, 3):
            raise ValueError("quadrature weight array must have shape (n_triangles, 3)")
    for f in fields:
        product = product * at_quadrature(mesh, f)
    return integrate_quadrature(mesh, product)


def norm_l2(field: NodalField) -> float:
    """L2 norm over the box."""
    return np.sqrt(max(integrate([field, field]), 0.0))


# ---------------------------------------------------------------------------
# assembly

_mesh_cache: dict = {}


def _cached(mesh: TriMesh, key: str, build: Callable):
    store = _mesh_cache.setdefault(id(mesh), {"ref": mesh})
    if key not in store:
        store[key] = build()
    return store[key]


def stiffness_matrix(mesh: TriMesh) -> sp.csr_matrix:
    """Exact P1 Laplacian stiffness matrix over all vertices."""

    def build():
        grads = mesh.basis_gradients
        local = np.einsum("m,mik,mjk->mij", mesh.element_area, grads, grads)
        return _scatter(mesh, local)

    return _cached(mesh, "stiffness", build)


def mass_matrix(mesh: TriMesh) -> sp.csr_matrix:
    """Consistent P1 mass matrix (the 3-point rule reproduces it exactly)."""

    def build():
        ones = np.ones((mesh.n_triangles, 3))
        return weighted_mass_matrix(mesh, ones)

    return _cached(mesh, "mass", build)


def weighted_mass_matrix(mesh: TriMesh, weight_at_quadrature: np.ndarray) -> sp.csr_matrix:
    """Mass matrix with a coefficient given at the quadrature points, (m, 3)."""
    w = np.asarray(weight_at_quadrature, dtype=float)
    scaled = (mesh.element_area / 3.0)[:, None] * w
    local = np.einsum("mq,qi,qj->mij", scaled, PHI, PHI)
    return _scatter(mesh, local)


def _scatter(mesh: TriMesh, local: np.ndarray) -> sp.csr_matrix:
    tris = mesh.triangles
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    n = mesh.n_vertices
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n))
    return mat.tocsr()


def load_from_quadrature(mesh: TriMesh, point_values: np.ndarray) -> np.ndarray:
    """Load vector ``b_i = integral(v * basis_i)`` from quadrature values (m, 3)."""
    scaled = (mesh.element_area / 3.0)[:, None] * np.asarray(point_values, dtype=float)
    contributions = scaled @ PHI  # (m, 3) per-vertex contributions
    b = np.zeros(mesh.n_vertices)
    np.add.at(b, mesh.triangles.ravel(), contributions.ravel())
    return b


def project_to_nodal(mesh: TriMesh, point_values: np.ndarray) -> NodalField:
    """L2 projection of quadrature-point data onto the P1 space."""
    rhs = load_from_quadrature(mesh, point_values)
    factor = _cached(
        mesh, "mass_factor", lambda: spla.splu(sp.csc_matrix(mass_matrix(mesh)))
    )
    return NodalField(mesh, factor.solve(rhs))


class SparseOperator:
    """Stiffness plus weighted mass, restricted to the free vertices.

    Symmetric positive definite whenever the weight is nonnegative; the
    Dirichlet rows and columns are eliminated rather than penalized so the
    conditioning carries no extra parameter.
    """

    def __init__(self, mesh: TriMesh, matrix_full: sp.csr_matrix):
        self.mesh = mesh
        self.dirichlet_mask = mesh.boundary_mask
        self.free = np.flatnonzero(~mesh.boundary_mask)
        self.matrix = matrix_full[self.free][:, self.free].tocsr()
        self._diagonal = self.matrix.diagonal()
        self._factor = None

    def factorize(self):
        if self._factor is None:
            self._factor = spla.splu(sp.csc_matrix(self.matrix))
        return self._factor

    def apply(self, field: NodalField) -> np.ndarray:
        """Matrix action on a full nodal vector, zero rows on the boundary."""
        out = np.zeros(self.mesh.n_vertices)
        out[self.free] = self.matrix @ field.values[self.free]
        return out

    def solve_load(
        self,
        load: np.ndarray,
        method: str = "direct",
        rtol: float = 1e-10,
        max_iterations: int = 50_000,
    ) -> NodalField:
        """Solve for a pre-assembled load vector over all vertices."""
        b = load[self.free]
        if method == "direct":
            x = self.factorize().solve(b)
        elif method == "cg":
            x = self._solve_cg(b, rtol, max_iterations)
        else:
            raise ValueError(f"unknown solve method {method!r}")
        full = np.zeros(self.mesh.n_vertices)
        full[self.free] = x
        return NodalField(self.mesh, full)

    def solve(self, rhs: NodalField, method: str = "direct", **kwargs) -> NodalField:
        """Solve with right-hand side given as a P1 field."""
        if rhs.mesh is not self.mesh:
            raise MeshMismatchError("operator and right-hand side use different meshes")
        return self.solve_load(mass_matrix(self.mesh) @ rhs.values, method=method, **kwargs)

    def _solve_cg(self, b: np.ndarray, rtol: float, max_iterations: int) -> np.ndarray:
        precond = spla.LinearOperator(
            self.matrix.shape, matvec=lambda v: v / self._diagonal
        )
        x, info = spla.cg(self.matrix, b, rtol=rtol, atol=0.0,
                          maxiter=max_iterations, M=precond)
        residual = np.linalg.norm(self.matrix @ x - b)
        b_norm = np.linalg.norm(b)
        if info != 0 and residual > rtol * max(b_norm, 1e-300):
            raise SolverConvergenceError(residual, rtol * b_norm, max_iterations)
        return x

    def residual_norm(self, solution: NodalField, load: np.ndarray) -> float:
        return float(
            np.linalg.norm(self.matrix @ solution.values[self.free] - load[self.free])
        )


def assemble(mesh: TriMesh, weight) -> SparseOperator:
    """Assemble ``-Laplace + weight * Id`` with eliminated boundary rows.

    Parameters
    ----------
    weight : NodalField or (m, 3) array or scalar
        Nonnegative reaction coefficient; nodal fields are interpolated at
        the quadrature points, arrays are taken as quadrature-point values.
    """
    if isinstance(weight, NodalField):
        if weight.mesh is not mesh:
            raise MeshMismatchError("weight lives on a different mesh")
        if np.any(weight.values < 0.0):
            raise ValueError("reaction weight must be nonnegative (coercivity)")
        w_q = at_quadrature(mesh, weight)
    elif np.ndim(weight) == 0:
        if float(weight) < 0.0:
            raise ValueError("reaction weight must be nonnegative (coercivity)")
        w_q = np.full((mesh.n_triangles, 3), float(weight))
    else:
        w_q = np.asarray(weight, dtype=float)
        if w_q.shape != (mesh.n_triangles, 3):
            raise ValueError("weight array must have shape (n_triangles, 3)")
        if np.any(w_q < 0.0):
            raise ValueError("reaction weight must be nonnegative (coercivity)")

    full = stiffness_matrix(mesh)
    if np.any(w_q != 0.0):
        full = full + weighted_mass_matrix(mesh, w_q)
    return SparseOperator(mesh, full.tocsr())
