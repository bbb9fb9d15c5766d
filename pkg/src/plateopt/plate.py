"""Penalized cascade solves for the simply supported plate on the box.

The fourth-order plate problem is replaced by two second-order solves
sharing one operator: -Laplace + (1/eps)(1 - indicator).  The moment field
is solved first from the load, then the deflection from the moment.  The
adjoint pair and the directional variations reuse the very same assembled
operator, so one factorization per geometry serves every solve.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fem
from .fem import NodalField, SparseOperator, at_quadrature, load_from_quadrature, mass_matrix
from .heaviside import SmoothedHeaviside
from .levelset import LevelSet, indicator_at_quadrature


@dataclass(frozen=True)
class StateSolution:
    """Deflection/moment pair for one geometry.

    Carries the assembled operator and the quadrature-point indicator so
    that adjoint and variation solves, and cost evaluation, can reuse them.
    """

    deflection: NodalField   # second solve of the cascade
    moment: NodalField       # first solve of the cascade
    epsilon: float
    level_set: LevelSet
    profile: SmoothedHeaviside
    operator: SparseOperator
    indicator_q: np.ndarray        # smoothed indicator at quadrature points
    indicator_deriv_q: np.ndarray  # its derivative at quadrature points
    load: NodalField
    solve_method: str = "direct"

    @property
    def mesh(self):
        return self.level_set.mesh


@dataclass(frozen=True)
class AdjointSolution:
    """Multipliers for the two cascade equations.

    ``costate_deflection`` pairs with the deflection equation (it is driven
    by the cost), ``costate_moment`` with the moment equation.
    """

    costate_deflection: NodalField
    costate_moment: NodalField
    cost_kind: str


def solve_state(
    level_set: LevelSet,
    profile: SmoothedHeaviside,
    load: NodalField,
    method: str = "direct",
) -> StateSolution:
    """Solve the penalized cascade for a given geometry and load.

    The reaction weight (1/eps)(1 - indicator) is evaluated at the
    quadrature points, never mass-lumped: the stiff 1/eps coefficient would
    otherwise distort the interface layer.
    """
    mesh = fem.require_same_mesh(level_set.field, load)
    eps = profile.epsilon
    h_q, dh_q = indicator_at_quadrature(level_set, profile)
    weight_q = (1.0 - h_q) / eps
    operator = fem.assemble(mesh, weight_q)

    moment = operator.solve(load, method=method)
    deflection = operator.solve(moment, method=method)
    return StateSolution(
        deflection=deflection,
        moment=moment,
        epsilon=eps,
        level_set=level_set,
        profile=profile,
        operator=operator,
        indicator_q=h_q,
        indicator_deriv_q=dh_q,
        load=load,
        solve_method=method,
    )


def solve_adjoint(state: StateSolution, cost_spec) -> AdjointSolution:
    """Solve the adjoint cascade for the given cost.

    The first costate is driven by the cost derivative with respect to the
    deflection; the second is driven by the first.  Both reuse the state
    operator (the left-hand sides coincide).
    """
    mesh = state.mesh
    y_q = at_quadrature(mesh, state.deflection)
    rhs_q = cost_spec.adjoint_source_quadrature(state, y_q)
    p = state.operator.solve_load(
        load_from_quadrature(mesh, rhs_q), method=state.solve_method
    )
    q = state.operator.solve_load(
        mass_matrix(mesh) @ p.values, method=state.solve_method
    )
    return AdjointSolution(costate_deflection=p, costate_moment=q,
                           cost_kind=cost_spec.kind)


def solve_variation(state: StateSolution, direction: NodalField):
    """Directional derivatives of the moment and deflection maps.

    Returns ``(moment_variation, deflection_variation)``: the linearized
    responses of the cascade to a perturbation of the level set along
    ``direction``.
    """
    mesh = fem.require_same_mesh(state.level_set.field, direction)
    eps = state.epsilon
    v_q = at_quadrature(mesh, direction)
    z_q = at_quadrature(mesh, state.moment)
    y_q = at_quadrature(mesh, state.deflection)
    dh_q = state.indicator_deriv_q

    u = state.operator.solve_load(
        load_from_quadrature(mesh, dh_q * z_q * v_q / eps),
        method=state.solve_method,
    )
    w_load = mass_matrix(mesh) @ u.values + load_from_quadrature(
        mesh, dh_q * y_q * v_q / eps
    )
    w = state.operator.solve_load(w_load, method=state.solve_method)
    return u, w


def energy_identity_gap(state: StateSolution) -> float:
    """Relative gap in the discrete energy balance of the moment solve.

    The moment field tested against itself must balance the load pairing:
    grad-energy plus penalized exterior mass equals the load inner product.
    """
    mesh = state.mesh
    z = state.moment
    stiffness = fem.stiffness_matrix(mesh)
    grad_energy = float(z.values @ (stiffness @ z.values))
    z_q = at_quadrature(mesh, z)
    exterior = fem.integrate_quadrature(
        mesh, (1.0 - state.indicator_q) / state.epsilon * z_q**2
    )
    load_pairing = float(z.values @ (mass_matrix(mesh) @ state.load.values))
    lhs = grad_energy + exterior
    return abs(lhs - load_pairing) / max(abs(load_pairing), 1e-300)


def exterior_energy(state: StateSolution) -> float:
    """Penalization leakage: integral of (1 - indicator) * deflection**2."""
    y_q = at_quadrature(state.mesh, state.deflection)
    return fem.integrate_quadrature(state.mesh, (1.0 - state.indicator_q) * y_q**2)
