"""The (gamma+1) Re-Optimization EA and the (1+1) EA baseline.

The REA keeps, next to the best-so-far point ``best``, one slot per Hamming
distance ``0..gamma`` from the anchor ``x_old`` plus a catch-all slot
``gamma+1`` for everything farther away.  Slot 0 holds ``x_old`` forever.
"""

from __future__ import annotations

import enum
import operator
import random
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Optional

from .bitstring import (
    ContractViolation,
    Genome,
    MutationConfig,
    flip_mask,
    make_rng,
    standard_bit_mutation,
)
from .problems import Direction, FitnessValue

__all__ = [
    "ReaConfig",
    "ReaState",
    "RunBudget",
    "RunRecord",
    "Slot",
    "Termination",
    "check_state_invariants",
    "oea_run",
    "rea_init",
    "rea_run",
    "rea_select_parent",
    "rea_step",
]


class Slot(NamedTuple):
    genome: Genome
    fitness: FitnessValue


class Termination(enum.Enum):
    TARGET_HIT = "TargetHit"
    BUDGET_EXHAUSTED = "BudgetExhausted"


@dataclass(frozen=True)
class ReaConfig:
    gamma: int
    mutation: MutationConfig = field(default_factory=MutationConfig)
    direction: Direction = Direction.MAXIMIZE

    def __post_init__(self):
        if self.gamma < 0:
            raise ContractViolation(f"gamma must be non-negative, got {self.gamma}")


@dataclass(frozen=True)
class RunBudget:
    max_evaluations: int
    target: Optional[FitnessValue] = None

    def __post_init__(self):
        if self.max_evaluations < 1:
            raise ContractViolation("max_evaluations must be >= 1")


@dataclass
class ReaState:
    x_old: Genome
    slots: list  # gamma + 2 entries, Slot or None
    best: Slot
    evaluations: int
    gamma: int
    direction: Direction

    @property
    def defined(self) -> list:
        return [i for i, s in enumerate(self.slots) if s is not None]


@dataclass
class RunRecord:
    seed: int
    evaluations_used: int
    termination: Termination
    milestones: dict
    final_best: Slot


def _better_eq(direction: Direction):
    return operator.ge if direction is Direction.MAXIMIZE else operator.le


def rea_init(x_old: Genome, problem, cfg: ReaConfig) -> ReaState:
    if x_old.n != problem.n:
        raise ContractViolation(f"x_old has length {x_old.n}, problem expects {problem.n}")
    if cfg.gamma > x_old.n:
        raise ContractViolation(f"gamma {cfg.gamma} exceeds genome length {x_old.n}")
    if cfg.direction is not problem.direction:
        raise ContractViolation("configured direction does not match the problem")
    anchor = Slot(x_old, problem.evaluate(x_old))
    slots = [None] * (cfg.gamma + 2)
    slots[0] = anchor
    return ReaState(x_old, slots, anchor, 1, cfg.gamma, cfg.direction)


def rea_select_parent(state: ReaState, rng: random.Random) -> Genome:
    """``best`` with probability 1/2, otherwise a uniform defined slot that differs from it."""
    best = state.best.genome
    if rng.random() < 0.5:
        return best
    others = [s.genome for s in state.slots if s is not None and s.genome.bits != best.bits]
    if not others:
        return best
    return others[rng.randrange(len(others))]


def rea_step(state: ReaState, problem, cfg: ReaConfig, rng: random.Random) -> ReaState:
    better_eq = operator.ge if state.direction is Direction.MAXIMIZE else operator.le
    y = standard_bit_mutation(rea_select_parent(state, rng), cfg.mutation, rng)
    fy = problem.evaluate(y)
    state.evaluations += 1
    if better_eq(fy, state.best.fitness):
        state.best = Slot(y, fy)
    i = (y.bits ^ state.x_old.bits).bit_count()
    if i == 0:
        return state
    if i > state.gamma:
        i = state.gamma + 1
    current = state.slots[i]
    if current is None or better_eq(fy, current.fitness):
        state.slots[i] = Slot(y, fy)
    return state


def check_state_invariants(state: ReaState) -> None:
    """Raise AssertionError if the slot layout or elitism bookkeeping is broken."""
    g = state.gamma
    assert len(state.slots) == g + 2, "slot count"
    assert state.slots[0] is not None and state.slots[0].genome == state.x_old, "slot 0 must hold x_old"
    better_eq = _better_eq(state.direction)
    for i, slot in enumerate(state.slots):
        if slot is None:
            continue
        d = (slot.genome.bits ^ state.x_old.bits).bit_count()
        if i <= g:
            assert d == i, f"slot {i} holds a genome at distance {d}"
        else:
            assert d > g, f"overflow slot holds a genome at distance {d} <= gamma"
        assert better_eq(state.best.fitness, slot.fitness), f"slot {i} beats best"


class _MilestoneTracker:
    """First evaluation count at which the best fitness reaches each radius target."""

    def __init__(self, targets: Optional[Mapping[int, FitnessValue]], better_eq):
        self.pending = sorted((targets or {}).items())
        self.hits = {i: None for i, _ in self.pending}
        self.better_eq = better_eq

    def update(self, fitness, evaluations: int) -> None:
        still = []
        for i, t in self.pending:
            if self.better_eq(fitness, t):
                self.hits[i] = evaluations
            else:
                still.append((i, t))
        self.pending = still


def rea_run(
    x_old: Genome,
    problem,
    cfg: ReaConfig,
    budget: RunBudget,
    seed: int,
    milestones: Optional[Mapping[int, FitnessValue]] = None,
    debug: bool = False,
) -> RunRecord:
    """Run until ``budget.target`` is reached or the evaluation budget is spent.

    ``milestones`` maps a radius ``i`` to the fitness target of the radius-``i``
    ball; the record reports the evaluation count at which each was first met.
    """
    rng = make_rng(seed)
    state = rea_init(x_old, problem, cfg)
    better_eq = _better_eq(cfg.direction)
    tracker = _MilestoneTracker(milestones, better_eq)
    tracker.update(state.best.fitness, state.evaluations)
    target = budget.target
    limit = budget.max_evaluations
    last_best = state.best
    termination = Termination.BUDGET_EXHAUSTED
    if target is not None and better_eq(state.best.fitness, target):
        termination = Termination.TARGET_HIT
    else:
        while state.evaluations < limit:
            rea_step(state, problem, cfg, rng)
            if debug:
                check_state_invariants(state)
            if state.best is not last_best:
                last_best = state.best
                if tracker.pending:
                    tracker.update(last_best.fitness, state.evaluations)
                if target is not None and better_eq(last_best.fitness, target):
                    termination = Termination.TARGET_HIT
                    break
    return RunRecord(seed, state.evaluations, termination, tracker.hits, state.best)


def oea_run(
    x_start: Genome,
    problem,
    mutation: MutationConfig,
    budget: RunBudget,
    seed: int,
    milestones: Optional[Mapping[int, FitnessValue]] = None,
) -> RunRecord:
    """Classic (1+1) EA with the same budget and milestone contract as :func:`rea_run`."""
    if x_start.n != problem.n:
        raise ContractViolation(f"start has length {x_start.n}, problem expects {problem.n}")
    rng = make_rng(seed)
    better_eq = _better_eq(problem.direction)
    n = x_start.n
    rate = mutation.rate_for(n)
    x, fx = x_start, problem.evaluate(x_start)
    evaluations = 1
    tracker = _MilestoneTracker(milestones, better_eq)
    tracker.update(fx, evaluations)
    target = budget.target
    termination = Termination.BUDGET_EXHAUSTED
    if target is not None and better_eq(fx, target):
        termination = Termination.TARGET_HIT
    else:
        evaluate = problem.evaluate
        while evaluations < budget.max_evaluations:
            mask = flip_mask(n, rate, rng)
            y = Genome._make(n, x.bits ^ mask)
            fy = evaluate(y)
            evaluations += 1
            if better_eq(fy, fx):
                improved = fy != fx
                x, fx = y, fy
                if improved:
                    if tracker.pending:
                        tracker.update(fx, evaluations)
                    if target is not None and better_eq(fx, target):
                        termination = Termination.TARGET_HIT
                        break
    return RunRecord(seed, evaluations, termination, tracker.hits, Slot(x, fx))
