"""Cost functionals, their gradients with respect to the level set, and
the descent directions built from the adjoint pair.

Every cost considered here has a directional derivative of the form

    integral over the box of  indicator'(g) * bracket * v,

where the bracket collects the cost integrand and the costate products.
The bracket is assembled at quadrature points and lifted to a P1 field by
L2 projection, because level-set updates must stay in the P1 space.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from typing import Optional, Sequence

import numpy as np

from . import fem
from .fem import NodalField, at_quadrature, integrate_quadrature, project_to_nodal
from .heaviside import saturate
from .levelset import RegionPredicate
from .plate import AdjointSolution, StateSolution

TRACKING = "tracking_E"
QUADRATIC = "quadratic_omega"
LINEAR = "linear_omega"
COST_KINDS = (TRACKING, QUADRATIC, LINEAR)

BRACKET = "bracket"
SATURATED = "saturated"
STEEPEST = "steepest"
DIRECTION_VARIANTS = (BRACKET, SATURATED, STEEPEST)


@dataclass(frozen=True)
class CostSpec:
    """Which functional to minimize and against which target.

    ``tracking_E`` integrates half the squared mismatch over a fixed
    region; the two ``*_omega`` kinds integrate over the unknown domain,
    i.e. against the smoothed indicator: quadratic uses half the squared
    mismatch, linear the plain mismatch.
    """

    kind: str
    target: NodalField
    region: Optional[RegionPredicate] = None

    def __post_init__(self):
        if self.kind not in COST_KINDS:
            raise ValueError(f"unknown cost kind {self.kind!r}; expected {COST_KINDS}")
        if self.kind == TRACKING and self.region is None:
            raise ValueError("tracking_E cost requires a region predicate")

    def region_at_quadrature(self, mesh) -> np.ndarray:
        pts = fem.quadrature_points(mesh)
        return np.asarray(
            self.region(pts[:, :, 0], pts[:, :, 1]), dtype=float
        )

    def integrand_quadrature(self, state: StateSolution) -> np.ndarray:
        """Cost integrand at the quadrature points."""
        mesh = state.mesh
        mismatch = at_quadrature(mesh, state.deflection) - at_quadrature(mesh, self.target)
        if self.kind == TRACKING:
            return 0.5 * self.region_at_quadrature(mesh) * mismatch**2
        if self.kind == QUADRATIC:
            return state.indicator_q * 0.5 * mismatch**2
        return state.indicator_q * mismatch

    def adjoint_source_quadrature(self, state: StateSolution, y_q: np.ndarray) -> np.ndarray:
        """Right-hand side of the first costate solve, at quadrature points."""
        mismatch = y_q - at_quadrature(state.mesh, self.target)
        if self.kind == TRACKING:
            return self.region_at_quadrature(state.mesh) * mismatch
        if self.kind == QUADRATIC:
            return state.indicator_q * mismatch
        return state.indicator_q.copy()

    def pointwise_cost(self, state: StateSolution) -> np.ndarray:
        """The density J(x, y) at quadrature points (omega kinds only)."""
        mismatch = at_quadrature(state.mesh, state.deflection) - at_quadrature(
            state.mesh, self.target
        )
        if self.kind == QUADRATIC:
            return 0.5 * mismatch**2
        if self.kind == LINEAR:
            return mismatch
        raise ValueError("tracking_E has no interior cost density")


def evaluate_cost(state: StateSolution, spec: CostSpec) -> float:
    """Quadrature evaluation of the cost for a solved state."""
    fem.require_same_mesh(state.deflection, spec.target)
    return integrate_quadrature(state.mesh, spec.integrand_quadrature(state))


@dataclass(frozen=True)
class GradientReport:
    """Gradient density of the cost with respect to the level set.

    ``density_q`` is indicator'(g) * bracket at quadrature points; pairing
    it with any P1 direction gives the directional derivative.  ``field``
    is its L2 projection onto the P1 space.
    """

    field: NodalField
    density_q: np.ndarray = dataclass_field(repr=False, default=None)
    bracket_q: np.ndarray = dataclass_field(repr=False, default=None)

    @property
    def mesh(self):
        return self.field.mesh

    def directional_derivative(self, direction: NodalField) -> float:
        fem.require_same_mesh(self.field, direction)
        v_q = at_quadrature(self.mesh, direction)
        return integrate_quadrature(self.mesh, self.density_q * v_q)

    def density_norm_l2(self) -> float:
        return float(np.sqrt(max(
            integrate_quadrature(self.mesh, self.density_q**2), 0.0)))


def _bracket_quadrature(
    state: StateSolution, adjoint: AdjointSolution, spec: CostSpec
) -> np.ndarray:
    mesh = state.mesh
    y_q = at_quadrature(mesh, state.deflection)
    z_q = at_quadrature(mesh, state.moment)
    p_q = at_quadrature(mesh, adjoint.costate_deflection)
    q_q = at_quadrature(mesh, adjoint.costate_moment)
    costate_term = (y_q * p_q + z_q * q_q) / state.epsilon
    if spec.kind == TRACKING:
        return costate_term
    return spec.pointwise_cost(state) + costate_term


def gradient_field(
    state: StateSolution, adjoint: AdjointSolution, spec: CostSpec
) -> GradientReport:
    """Assemble the gradient density and project it to a nodal field."""
    if adjoint.cost_kind != spec.kind:
        raise ValueError(
            f"adjoint was solved for cost {adjoint.cost_kind!r}, not {spec.kind!r}"
        )
    bracket_q = _bracket_quadrature(state, adjoint, spec)
    density_q = state.indicator_deriv_q * bracket_q
    projected = project_to_nodal(state.mesh, density_q)
    return GradientReport(field=projected, density_q=density_q, bracket_q=bracket_q)


def descent_direction(
    state: StateSolution,
    adjoint: AdjointSolution,
    spec: CostSpec,
    variant: str = BRACKET,
) -> NodalField:
    """Descent direction for the level-set update.

    ``bracket``   minus the bracket, projected to P1;
    ``saturated`` the bracket direction squashed through the bounded odd
                  map, applied pointwise at the vertices (keeps sign,
                  bounds magnitude below 1);
    ``steepest``  minus the full gradient density.
    """
    if variant not in DIRECTION_VARIANTS:
        raise ValueError(
            f"unknown direction variant {variant!r}; expected {DIRECTION_VARIANTS}"
        )
    bracket_q = _bracket_quadrature(state, adjoint, spec)
    if variant == STEEPEST:
        return project_to_nodal(state.mesh, -state.indicator_deriv_q * bracket_q)
    raw = project_to_nodal(state.mesh, -bracket_q)
    if variant == BRACKET:
        return raw
    return raw.with_values(saturate(raw.values / state.epsilon))


@dataclass(frozen=True)
class StationarityReport:
    max_pairing: float
    density_norm: float


def stationarity_check(
    report: GradientReport, directions: Sequence[NodalField]
) -> StationarityReport:
    """First-order optimality diagnostic.

    At a minimizer no admissible direction may have a negative derivative,
    equivalently the maximum pairing over the sampled directions is <= 0;
    the L2 norm of the gradient density measures how far from stationary
    the iterate is.
    """
    pairings = [report.directional_derivative(v) for v in directions]
    max_pairing = max(pairings, default=0.0)
    return StationarityReport(
        max_pairing=float(max_pairing),
        density_norm=report.density_norm_l2(),
    )
