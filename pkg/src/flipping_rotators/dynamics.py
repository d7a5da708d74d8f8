"""Forward and time-reversed motion of the particle (pure Python).

This is the readable reference path.  Long runs and ensembles go through
:mod:`flipping_rotators.engine`, which implements the same update in numba
and is checked against this module step for step.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .lattice import ORIGIN, SiteCoord, neighbor, norm_sq, opposite, rotate
from .medium import Medium

PERIODIC = "periodic"
CAP_REACHED = "cap-reached"
HALTED = "halted"

DEFAULT_STEP_CAP = int(os.environ.get("FLIPROT_STEP_CAP", 100_000_000))


@dataclass(frozen=True)
class SimState:
    site: SiteCoord = ORIGIN
    dir: int = 0
    time: int = 0

    def __post_init__(self):
        if (self.dir & 1) != self.site.sub:
            raise ValueError(f"direction {self.dir} is not legal at {self.site}")


@dataclass
class RunOutcome:
    kind: str
    steps: int
    period: Optional[int] = None
    origin_returns: list[int] = field(default_factory=list)
    max_displacement_sq: float = 0.0

    @property
    def periodic(self) -> bool:
        return self.kind == PERIODIC


def step(state: SimState, medium: Medium) -> SimState:
    """Move one bond, scatter on the (pre-flip) rotator there, flip it."""
    site = neighbor(state.site, state.dir)
    new_dir = rotate(state.dir, medium.current(site))
    medium.record_visit(site)
    return SimState(site, new_dir, state.time + 1)


def reverse_step(state: SimState, medium: Medium) -> SimState:
    """Exact inverse of :func:`step`, including the medium."""
    prev_dir = rotate(state.dir, medium.current(state.site))
    medium.record_visit(state.site, -1)
    return SimState(neighbor(state.site, opposite(prev_dir)), prev_dir, state.time - 1)


def displacement_sq(state: SimState) -> float:
    return norm_sq(state.site)


Observer = Callable[[SiteCoord, int], Optional[bool]]


def run(
    medium: Medium,
    step_cap: int = DEFAULT_STEP_CAP,
    observers: Iterable[Observer] = (),
    state: SimState | None = None,
) -> RunOutcome:
    """Step until the full initial state recurs or ``step_cap`` steps elapse.

    Each observer is called as ``observer(site, time)`` for every position,
    starting with ``time = 0``; a truthy return value halts the run.
    Recurrence is exact: the particle is back at the origin moving along
    direction 0 and no scatterer differs from its initial orientation.
    """
    if step_cap < 1:
        raise ValueError("step_cap must be >= 1")
    observers = list(observers)
    state = state or SimState()
    start = state
    start_dirty = medium.dirty_count
    returns: list[int] = []
    max_sq = norm_sq(state.site)
    halted = False
    for obs in observers:
        halted = bool(obs(state.site, state.time)) or halted
    if halted:
        return RunOutcome(HALTED, 0, None, returns, max_sq)
    for _ in range(step_cap):
        state = step(state, medium)
        d = norm_sq(state.site)
        if d > max_sq:
            max_sq = d
        if state.site == start.site:
            returns.append(state.time)
        for obs in observers:
            halted = bool(obs(state.site, state.time)) or halted
        if (state.site == start.site and state.dir == start.dir
                and medium.dirty_count == start_dirty == 0):
            return RunOutcome(PERIODIC, state.time, state.time, returns, max_sq)
        if halted:
            return RunOutcome(HALTED, state.time, None, returns, max_sq)
    return RunOutcome(CAP_REACHED, state.time, None, returns, max_sq)


class TrajectoryLog:
    """Observer that keeps every position."""

    def __init__(self):
        self.sites: list[SiteCoord] = []

    def __call__(self, site: SiteCoord, time: int) -> None:
        self.sites.append(site)
