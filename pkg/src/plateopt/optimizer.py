"""Projected gradient descent on the level set with a trial-schedule
line search.

One outer iteration: solve the cascade, solve the adjoint pair, build the
descent direction, try a geometric schedule of step lengths and keep the
best strictly improving one, project onto the constraint if one is
active.  The accepted cost sequence is strictly decreasing by
construction; the run records every trial so intermediate domains can be
reproduced.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, List, Optional

import numpy as np

from .fem import NodalField
from .functional import (
    BRACKET,
    CostSpec,
    DIRECTION_VARIANTS,
    descent_direction,
    evaluate_cost,
    gradient_field,
)
from .heaviside import SmoothedHeaviside
from .levelset import LevelSet, project_constraint
from .plate import solve_adjoint, solve_state

ABS_COST = "abs_cost"
REL_DECREASE = "rel_decrease"
GRAD_NORM = "grad_norm"
STOP_KINDS = (ABS_COST, REL_DECREASE, GRAD_NORM)


@dataclass(frozen=True)
class LineSearchConfig:
    initial_step: float
    shrink: float = 0.5
    expand: float = 2.0
    max_trials: int = 25

    def __post_init__(self):
        if not self.initial_step > 0.0:
            raise ValueError("initial_step must be positive")
        if not (0.0 < self.shrink < 1.0 < self.expand):
            raise ValueError("need 0 < shrink < 1 < expand")
        if self.max_trials < 1:
            raise ValueError("max_trials must be at least 1")

    def schedule(self) -> List[float]:
        """Geometric trial steps: expansions first, then shrinks."""
        n_up = (self.max_trials + 1) // 2
        n_down = self.max_trials - n_up
        ups = [self.initial_step * self.expand**k for k in range(n_up)]
        downs = [self.initial_step * self.shrink**k for k in range(1, n_down + 1)]
        return ups + downs


@dataclass(frozen=True)
class StopRule:
    kind: str
    tol: float
    max_iters: int = 50

    def __post_init__(self):
        if self.kind not in STOP_KINDS:
            raise ValueError(f"unknown stop kind {self.kind!r}; expected {STOP_KINDS}")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")


@dataclass(frozen=True)
class OptimizerConfig:
    profile: SmoothedHeaviside
    cost: CostSpec
    direction_variant: str
    line_search: LineSearchConfig
    stop: StopRule
    constraint_active: bool = False
    solver_method: str = "direct"
    threads: int = 1

    def __post_init__(self):
        if self.direction_variant not in DIRECTION_VARIANTS:
            raise ValueError(f"unknown direction variant {self.direction_variant!r}")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")

    @property
    def epsilon(self) -> float:
        return self.profile.epsilon


@dataclass(frozen=True)
class Trial:
    step: float
    cost: float


@dataclass(frozen=True)
class LineSearchResult:
    success: bool
    step: Optional[float]
    cost: Optional[float]
    trials: List[Trial]


NO_DESCENT_STEP = "no_descent_step"
STATIONARY = "stationary"
MAX_ITERS = "max_iters"


def line_search(
    evaluate: Callable[[float], float],
    current_cost: float,
    config: LineSearchConfig,
    threads: int = 1,
) -> LineSearchResult:
    """Try the geometric schedule and keep the best strictly improving step.

    All trials are evaluated (not first-improvement): large early steps
    matter here because a good step can cut the cost by orders of
    magnitude.  Every trial is logged.  Fails when no step improves.
    """
    steps = config.schedule()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            costs = list(pool.map(evaluate, steps))
    else:
        costs = [evaluate(step) for step in steps]
    trials = [Trial(step=s, cost=c) for s, c in zip(steps, costs)]

    best = None
    for trial in trials:
        if trial.cost < current_cost and (best is None or trial.cost < best.cost):
            best = trial
    if best is None:
        return LineSearchResult(success=False, step=None, cost=None, trials=trials)
    return LineSearchResult(success=True, step=best.step, cost=best.cost, trials=trials)


@dataclass
class IterateRecord:
    index: int
    level_set: LevelSet
    cost: float
    direction_norm: Optional[float] = None
    step: Optional[float] = None
    trials: List[Trial] = dataclass_field(default_factory=list)


@dataclass(frozen=True)
class OptRun:
    iterates: List[IterateRecord]
    stop_reason: str
    config: OptimizerConfig

    @property
    def costs(self) -> List[float]:
        return [record.cost for record in self.iterates]

    @property
    def final_cost(self) -> float:
        return self.iterates[-1].cost

    @property
    def final_level_set(self) -> LevelSet:
        return self.iterates[-1].level_set


def run(config: OptimizerConfig, initial: LevelSet, load: NodalField) -> OptRun:
    """Drive the descent loop until a stop test fires.

    Stop tests: ``abs_cost`` fires when |cost| drops below tol,
    ``grad_norm`` when the gradient-density norm does, ``rel_decrease``
    when the line search cannot improve the cost by at least tol (the
    candidate is then discarded).  ``max_iters`` always bounds the number
    of accepted steps; a failed line search under the other stop kinds
    ends the run with reason ``no_descent_step``.
    """
    if config.constraint_active:
        if initial.region is None:
            raise ValueError("constraint_active requires a level set with a region")
        x = initial.mesh.vertices
        inside = np.asarray(initial.region(x[:, 0], x[:, 1]), dtype=bool)
        if np.any(initial.field.values[inside] < 0.0):
            raise ValueError("initial level set violates the constraint region")

    current = initial
    records: List[IterateRecord] = []
    stop = config.stop

    for n in range(stop.max_iters + 1):
        state = solve_state(current, config.profile, load, method=config.solver_method)
        cost = evaluate_cost(state, config.cost)
        record = IterateRecord(index=n, level_set=current, cost=cost)
        records.append(record)

        if stop.kind == ABS_COST and abs(cost) < stop.tol:
            return OptRun(records, ABS_COST, config)
        if n == stop.max_iters:
            return OptRun(records, MAX_ITERS, config)

        adjoint = solve_adjoint(state, config.cost)
        report = gradient_field(state, adjoint, config.cost)
        if stop.kind == GRAD_NORM and report.density_norm_l2() < stop.tol:
            return OptRun(records, GRAD_NORM, config)

        direction = descent_direction(state, adjoint, config.cost, config.direction_variant)
        direction_norm = float(np.max(np.abs(direction.values)))
        record.direction_norm = direction_norm
        if direction_norm == 0.0:
            return OptRun(records, STATIONARY, config)

        def candidate(step: float) -> LevelSet:
            moved = current.field.with_values(
                current.field.values + step * direction.values
            )
            trial_ls = current.with_field(moved)
            if config.constraint_active:
                trial_ls = project_constraint(trial_ls)
            return trial_ls

        def trial_cost(step: float) -> float:
            trial_state = solve_state(
                candidate(step), config.profile, load, method=config.solver_method
            )
            return evaluate_cost(trial_state, config.cost)

        result = line_search(trial_cost, cost, config.line_search, threads=config.threads)
        record.trials = result.trials

        if stop.kind == REL_DECREASE:
            if not result.success or result.cost > cost - stop.tol:
                return OptRun(records, REL_DECREASE, config)
        elif not result.success:
            return OptRun(records, NO_DESCENT_STEP, config)

        record.step = result.step
        current = candidate(result.step)

    raise AssertionError("unreachable: loop always returns")
