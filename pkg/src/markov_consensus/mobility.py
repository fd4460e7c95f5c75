"""Random-walk sampling and occupancy-distribution evolution."""

from __future__ import annotations

import numpy as np

from markov_consensus.errors import ConfigError
from markov_consensus.grid import SpatialGrid, TransitionMatrix


def sample_initial_positions(grid: SpatialGrid, n_agents: int, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. uniform node indices (1-based), one per agent."""
    if n_agents < 1:
        raise ConfigError(f"need at least one agent, got {n_agents}")
    return rng.integers(1, grid.node_count + 1, size=n_agents)


def step_from_uniform(tm: TransitionMatrix, current: int, u: float) -> int:
    """Inverse-CDF lookup: first ``j`` (column order) with ``u < cdf[current, j]``."""
    S = tm.state_count
    if not 1 <= current <= S:
        raise ConfigError(f"node {current} outside 1..{S}")
    row = tm.cumulative[current - 1]
    j = int(np.searchsorted(row, u, side="right"))
    if j >= S:
        # u landed above a row total of 1 - ulp; take the last reachable state
        j = int(np.flatnonzero(tm.probs[current - 1])[-1])
    return j + 1


def sample_step(tm: TransitionMatrix, current: int, rng: np.random.Generator) -> int:
    return step_from_uniform(tm, current, rng.random())


def move_agents(tm: TransitionMatrix, positions: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Synchronous move of every agent; one uniform per agent, drawn in agent order."""
    u = rng.random(len(positions))
    return np.array([step_from_uniform(tm, int(p), ui) for p, ui in zip(positions, u)], dtype=np.int64)


def evolve_distribution(tm: TransitionMatrix, pmf: np.ndarray) -> np.ndarray:
    pmf = np.asarray(pmf, dtype=float)
    if pmf.shape != (tm.state_count,):
        raise ConfigError(f"pmf has shape {pmf.shape}, expected ({tm.state_count},)")
    return pmf @ tm.probs


def point_mass(state_count: int, node: int) -> np.ndarray:
    pmf = np.zeros(state_count)
    pmf[node - 1] = 1.0
    return pmf


def empirical_occupancy(tm: TransitionMatrix, start: int, steps: int, rng: np.random.Generator) -> np.ndarray:
    """Fraction of ``steps`` spent at each node by a single walker."""
    counts = np.zeros(tm.state_count)
    node = start
    for u in rng.random(steps):
        counts[node - 1] += 1
        node = step_from_uniform(tm, node, u)
    return counts / steps


def mean_return_time(tm: TransitionMatrix, node: int, steps: int, rng: np.random.Generator) -> float:
    """Average gap between successive visits to ``node`` along one walk started there."""
    visits = []
    cur = node
    for k, u in enumerate(rng.random(steps), start=1):
        cur = step_from_uniform(tm, cur, u)
        if cur == node:
            visits.append(k)
    if not visits:
        return float("inf")
    return visits[-1] / len(visits)
