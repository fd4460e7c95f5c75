"""Time-varying communication graph between agents."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from markov_consensus.errors import ConfigError
from markov_consensus.grid import SpatialGrid


@dataclass(frozen=True, eq=False)
class CommGraph:
    """Undirected 0/1 adjacency between agents, zero diagonal."""

    adjacency: np.ndarray

    def __post_init__(self):
        m = np.array(self.adjacency, dtype=np.int64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"adjacency must be square, got {m.shape}")
        if not np.array_equal(m, m.T) or np.any(np.diag(m)) or not np.isin(m, (0, 1)).all():
            raise ValueError("adjacency must be symmetric 0/1 with zero diagonal")
        m.setflags(write=False)
        object.__setattr__(self, "adjacency", m)

    @property
    def n_agents(self) -> int:
        return self.adjacency.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def neighbors(self, agent: int) -> np.ndarray:
        """0-based neighbour indices of 0-based ``agent``, ascending."""
        return np.flatnonzero(self.adjacency[agent])

    def edge_list(self) -> list[tuple[int, int]]:
        a, b = np.nonzero(np.triu(self.adjacency))
        return [(int(i), int(j)) for i, j in zip(a, b)]

    @classmethod
    def from_edges(cls, n_agents: int, edges: Iterable[tuple[int, int]]) -> "CommGraph":
        m = np.zeros((n_agents, n_agents), dtype=np.int64)
        for a, b in edges:
            m[a, b] = m[b, a] = 1
        return cls(m)

    def is_complete(self) -> bool:
        n = self.n_agents
        return int(self.adjacency.sum()) == n * (n - 1)

    def __eq__(self, other):
        return isinstance(other, CommGraph) and np.array_equal(self.adjacency, other.adjacency)


def node_adjacency(grid: SpatialGrid, r_comm: float = 0.0) -> np.ndarray:
    """(S, S) bool table: can agents on nodes i and j talk (radius ``r_comm``)."""
    if r_comm < 0:
        raise ConfigError(f"communication radius must be >= 0, got {r_comm}")
    xy = grid.coords
    diff = xy[:, None, :] - xy[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    return dist <= r_comm


def comm_graph(positions, grid: SpatialGrid, r_comm: float = 0.0) -> CommGraph:
    """Agents within ``r_comm`` of each other are linked; ``r_comm=0`` means co-located."""
    if r_comm < 0:
        raise ConfigError(f"communication radius must be >= 0, got {r_comm}")
    pos = np.asarray(positions, dtype=np.int64)
    if pos.size and (pos.min() < 1 or pos.max() > grid.node_count):
        raise ConfigError("agent position outside the grid")
    xy = grid.coords[pos - 1]
    diff = xy[:, None, :] - xy[None, :, :]
    m = np.hypot(diff[..., 0], diff[..., 1]) <= r_comm
    np.fill_diagonal(m, False)
    return CommGraph(m)


def laplacian(g: CommGraph) -> np.ndarray:
    m = g.adjacency
    return np.diag(m.sum(axis=1)) - m


def union_graph(graphs: Iterable[CommGraph]) -> CommGraph:
    graphs = list(graphs)
    if not graphs:
        raise ValueError("union of no graphs")
    n = graphs[0].n_agents
    acc = np.zeros((n, n), dtype=np.int64)
    for g in graphs:
        if g.n_agents != n:
            raise ValueError(f"agent count mismatch: {g.n_agents} != {n}")
        acc |= g.adjacency
    return CommGraph(acc)
