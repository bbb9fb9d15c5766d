"""Independent oracles for the solvers and gradients.

Nothing in here shares assembly or solve code with the finite-element
path: the disk oracle is a closed-form radial solution (cross-checkable by
1D quadrature and finite differences), and the gradient/variation checks
compare adjoint formulas against plain difference quotients of rerun
solves.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from . import fem
from .fem import NodalField, norm_l2
from .functional import CostSpec, evaluate_cost, gradient_field
from .heaviside import EXPONENTIAL, SmoothedHeaviside
from .levelset import LevelSet
from .mesh import TriMesh
from .plate import exterior_energy, solve_adjoint, solve_state, solve_variation


@dataclass(frozen=True)
class RadialDiskOracle:
    """Exact solution of the plate cascade on a centered disk.

    For a constant load on a disk of the given radius with zero deflection
    and zero moment on the rim, the moment is f(a^2 - r^2)/4 and the
    deflection f(r^4 - 4 a^2 r^2 + 3 a^4)/64.
    """

    radius: float
    load: float

    def moment(self, r):
        r = np.asarray(r, dtype=float)
        return self.load * (self.radius**2 - r**2) / 4.0

    def deflection(self, r):
        r = np.asarray(r, dtype=float)
        a2 = self.radius**2
        return self.load * (r**4 - 4.0 * a2 * r**2 + 3.0 * a2 * a2) / 64.0

    # -- independent numeric paths ------------------------------------

    def moment_by_quadrature(self, r: float, n: int = 8192) -> float:
        """Nested 1D quadrature of the radial balance, no closed form used."""

        def inner(t_grid):
            s = np.linspace(0.0, 1.0, n)[None, :] * t_grid[:, None]
            return np.trapezoid(s * self.load, s, axis=1)

        t = np.linspace(r, self.radius, n)
        integrand = np.where(t > 0.0, inner(t) / np.where(t > 0.0, t, 1.0), 0.0)
        return float(np.trapezoid(integrand, t))

    def deflection_by_quadrature(self, r: float, n: int = 2048) -> float:
        """Same nested quadrature applied twice (source = numeric moment)."""
        a = self.radius

        def z_vals(s_grid):
            return np.array([self.moment_by_quadrature(s, n) for s in s_grid])

        def inner(t):
            s = np.linspace(0.0, t, n)
            return np.trapezoid(s * z_vals(s), s)

        t_grid = np.linspace(max(r, 1e-12), a, n // 4)
        integrand = np.array([inner(t) / t for t in t_grid])
        return float(np.trapezoid(integrand, t_grid))

    def biharmonic_residual(self, radii: Sequence[float], step: float = 0.01) -> np.ndarray:
        """|bilaplacian(deflection) - load| at sampled radii, via radial
        finite differences with fourth-order stencils."""
        out = []
        for r in radii:
            offsets = np.array([-2.0, -1.0, 0.0, 1.0, 2.0]) * step
            y = self.deflection(r + offsets)
            d1 = (y[0] - 8 * y[1] + 8 * y[3] - y[4]) / (12 * step)
            d2 = (-y[0] + 16 * y[1] - 30 * y[2] + 16 * y[3] - y[4]) / (12 * step**2)
            d3 = (-y[0] + 2 * y[1] - 2 * y[3] + y[4]) / (-2 * step**3)
            d4 = (y[0] - 4 * y[1] + 6 * y[2] - 4 * y[3] + y[4]) / step**4
            bilap = d4 + 2.0 * d3 / r - d2 / r**2 + d1 / r**3
            out.append(abs(bilap - self.load))
        return np.asarray(out)


def disk_level_set(mesh: TriMesh, radius: float) -> LevelSet:
    """Level set whose zero contour is the centered circle of that radius."""
    return LevelSet(
        NodalField.from_callable(mesh, lambda x1, x2: radius**2 - x1**2 - x2**2)
    )


# ---------------------------------------------------------------------------
# studies


@dataclass(frozen=True)
class ConvergenceRow:
    epsilon: float
    interior_l2_error: float
    exterior_energy: float


CONVERGENCE_HEADER = ("epsilon", "interior_l2_error", "exterior_energy")


def convergence_study_epsilon(
    level_set: LevelSet,
    load: NodalField,
    radius: float,
    epsilons: Sequence[float],
    profile_kind: str = EXPONENTIAL,
    method: str = "direct",
) -> List[ConvergenceRow]:
    """Interior accuracy and exterior leakage across penalization levels.

    The geometry must be the centered disk of the given radius with a
    constant load, so the radial oracle applies.
    """
    mesh = level_set.mesh
    load_value = float(load.values[0])
    if not np.allclose(load.values, load_value):
        raise ValueError("the radial oracle needs a constant load")
    oracle = RadialDiskOracle(radius=radius, load=load_value)

    pts = fem.quadrature_points(mesh)
    r_q = np.hypot(pts[:, :, 0], pts[:, :, 1])
    interior = (r_q < radius).astype(float)
    exact_q = oracle.deflection(r_q)
    exact_norm = np.sqrt(fem.integrate_quadrature(mesh, interior * exact_q**2))

    rows = []
    for eps in epsilons:
        profile = SmoothedHeaviside(kind=profile_kind, epsilon=eps)
        state = solve_state(level_set, profile, load, method=method)
        y_q = fem.at_quadrature(mesh, state.deflection)
        err = np.sqrt(
            fem.integrate_quadrature(mesh, interior * (y_q - exact_q) ** 2)
        )
        rows.append(
            ConvergenceRow(
                epsilon=float(eps),
                interior_l2_error=float(err / exact_norm),
                exterior_energy=exterior_energy(state),
            )
        )
    return rows


@dataclass(frozen=True)
class GradientCheckRow:
    lam: float
    fd_derivative: float
    adjoint_derivative: float
    relative_gap: float


GRADIENT_CHECK_HEADER = ("lambda", "fd_derivative", "adjoint_derivative", "relative_gap")


def gradient_fd_check(
    level_set: LevelSet,
    profile: SmoothedHeaviside,
    spec: CostSpec,
    load: NodalField,
    direction: NodalField,
    lambdas: Sequence[float],
    method: str = "direct",
) -> List[GradientCheckRow]:
    """Adjoint directional derivative against central cost differences."""
    state = solve_state(level_set, profile, load, method=method)
    adjoint = solve_adjoint(state, spec)
    report = gradient_field(state, adjoint, spec)
    adj_value = report.directional_derivative(direction)

    def cost_at(shift: float) -> float:
        moved = level_set.with_field(
            level_set.field.with_values(level_set.field.values + shift * direction.values)
        )
        return evaluate_cost(solve_state(moved, profile, load, method=method), spec)

    rows = []
    for lam in lambdas:
        fd = (cost_at(lam) - cost_at(-lam)) / (2.0 * lam)
        gap = abs(fd - adj_value) / max(abs(adj_value), 1e-300)
        rows.append(
            GradientCheckRow(
                lam=float(lam),
                fd_derivative=float(fd),
                adjoint_derivative=float(adj_value),
                relative_gap=float(gap),
            )
        )
    return rows


@dataclass(frozen=True)
class VariationCheckRow:
    lam: float
    deflection_gap: float
    moment_gap: float


VARIATION_CHECK_HEADER = ("lambda", "deflection_gap", "moment_gap")


def variation_fd_check(
    level_set: LevelSet,
    profile: SmoothedHeaviside,
    load: NodalField,
    direction: NodalField,
    lambdas: Sequence[float],
    method: str = "direct",
) -> List[VariationCheckRow]:
    """Linearized cascade against forward differences of rerun solves."""
    state = solve_state(level_set, profile, load, method=method)
    moment_var, deflection_var = solve_variation(state, direction)
    w_norm = norm_l2(deflection_var)
    u_norm = norm_l2(moment_var)

    rows = []
    for lam in lambdas:
        moved = level_set.with_field(
            level_set.field.with_values(level_set.field.values + lam * direction.values)
        )
        perturbed = solve_state(moved, profile, load, method=method)
        dy = (perturbed.deflection - state.deflection) * (1.0 / lam)
        dz = (perturbed.moment - state.moment) * (1.0 / lam)
        gap_w = norm_l2(dy - deflection_var) / max(w_norm, 1e-300)
        gap_u = norm_l2(dz - moment_var) / max(u_norm, 1e-300)
        rows.append(
            VariationCheckRow(
                lam=float(lam),
                deflection_gap=float(gap_w),
                moment_gap=float(gap_u),
            )
        )
    return rows
