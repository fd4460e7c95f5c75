"""Square lattice environment and its uniform random-walk transition matrix.

Nodes are numbered 1..c**2 in row-major order starting from the bottom-left
corner, so node ``i`` sits at row ``ceil(i / c)`` and column
``i - (row - 1) * c``. Every node carries a self-edge; staying put is a legal
move.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from markov_consensus.errors import ConfigError


@dataclass(frozen=True)
class SpatialGrid:
    side: int
    spacing: float = 1.0

    def __post_init__(self):
        if isinstance(self.side, bool) or int(self.side) != self.side or self.side < 1:
            raise ConfigError(f"grid side must be a positive integer, got {self.side!r}")
        if not self.spacing > 0:
            raise ConfigError(f"grid spacing must be positive, got {self.spacing!r}")

    @property
    def node_count(self) -> int:
        return self.side * self.side

    def row_col(self, node: int) -> tuple[int, int]:
        """1-based (row, col) of a 1-based node index."""
        self.check_node(node)
        row = (node - 1) // self.side + 1
        return row, node - (row - 1) * self.side

    def node_at(self, row: int, col: int) -> int:
        return (row - 1) * self.side + col

    def check_node(self, node: int) -> None:
        if not 1 <= node <= self.node_count:
            raise ConfigError(f"node {node} outside 1..{self.node_count}")

    @cached_property
    def coords(self) -> np.ndarray:
        """(S, 2) array of planar node coordinates; row ``i - 1`` is node ``i``."""
        idx = np.arange(self.node_count)
        col = idx % self.side
        row = idx // self.side
        return np.column_stack([col * self.spacing, row * self.spacing]).astype(float)

    def neighbors(self, node: int) -> list[int]:
        """4-neighbours of ``node`` (self excluded), in increasing index order."""
        row, col = self.row_col(node)
        out = []
        if row > 1:
            out.append(self.node_at(row - 1, col))
        if col > 1:
            out.append(self.node_at(row, col - 1))
        if col < self.side:
            out.append(self.node_at(row, col + 1))
        if row < self.side:
            out.append(self.node_at(row + 1, col))
        return out

    @cached_property
    def degrees(self) -> np.ndarray:
        """Lattice degree of each node, excluding the self-edge."""
        return np.array([len(self.neighbors(i)) for i in range(1, self.node_count + 1)], dtype=int)

    @cached_property
    def edges(self) -> frozenset[tuple[int, int]]:
        """Edge set including ``(i, i)`` for every node; symmetric."""
        out = set()
        for i in range(1, self.node_count + 1):
            out.add((i, i))
            for j in self.neighbors(i):
                out.add((i, j))
        return frozenset(out)

    def diagonal_length(self) -> float:
        return float(np.hypot(*(2 * [(self.side - 1) * self.spacing])))


def build_grid(c: int, d: float = 1.0) -> SpatialGrid:
    return SpatialGrid(side=c, spacing=d)


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic matrix over a finite state set (dense storage).

    ``probs[i - 1, j - 1]`` is the probability of moving from state ``i`` to
    state ``j``. The cumulative table used for inverse-CDF sampling is
    computed once and shared with the compiled episode kernel.
    """

    probs: np.ndarray
    grid: SpatialGrid | None = field(default=None, compare=False)

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ConfigError(f"transition matrix must be square, got shape {p.shape}")
        if np.any(p < 0):
            raise ConfigError("transition matrix has negative entries")
        if np.any(np.abs(p.sum(axis=1) - 1.0) >= 1e-12):
            raise ConfigError("transition matrix rows must sum to 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def state_count(self) -> int:
        return self.probs.shape[0]

    @cached_property
    def cumulative(self) -> np.ndarray:
        cdf = np.cumsum(self.probs, axis=1)
        cdf.setflags(write=False)
        return cdf

    def row_sums(self) -> np.ndarray:
        return self.probs.sum(axis=1)


def transition_matrix(grid: SpatialGrid) -> TransitionMatrix:
    """Uniform choice among the current node and its lattice neighbours."""
    S = grid.node_count
    p = np.zeros((S, S))
    for i in range(1, S + 1):
        targets = [i, *grid.neighbors(i)]
        p[i - 1, [t - 1 for t in targets]] = 1.0 / len(targets)
    return TransitionMatrix(p, grid=grid)
