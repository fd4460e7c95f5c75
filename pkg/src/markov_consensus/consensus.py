"""Gated consensus update on agents' information states.

Each agent pulls toward its current neighbours with gain ``alpha`` and, when
it sits on a feature node (gate on), is reset toward the reference value:

    xi_a' = xi_a - alpha * sum_{b ~ a} (xi_a - xi_b) - g_a * (xi_a - xi_ref)

All agents read the pre-update vector. In matrix form, with the reference
appended as a fixed extra state,

    H = [[I - alpha * L - diag(g), g],
         [0,                       1]]

whose rows always sum to 1. Without gates the agent block is non-negative
whenever ``alpha <= 1 / d_max``; a gated agent with neighbours gets a
negative diagonal entry and may overshoot the reference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from markov_consensus.errors import ConfigError
from markov_consensus.network import CommGraph, laplacian


def alpha_bound(n_agents: int) -> float:
    """Upper bound ``1 / d_max`` on the gain, ``d_max = N - 1``.

    The bound is inclusive: the published runs use ``alpha = 1/13`` with
    ``N = 14``. At equality ``I - alpha * L`` still has a non-negative
    diagonal, so ungated updates stay inside the convex hull.
    """
    return np.inf if n_agents <= 1 else 1.0 / (n_agents - 1)


def check_alpha(alpha, n_agents: int) -> None:
    if not (alpha > 0 and (n_agents <= 1 or alpha * (n_agents - 1) <= 1)):
        raise ConfigError(f"alpha={alpha} must lie in (0, 1/(N-1)] for N={n_agents}")


@dataclass
class InfoState:
    xi: np.ndarray
    alpha: float
    gates: np.ndarray
    xi_ref: float = 1.0

    def __post_init__(self):
        self.xi = np.asarray(self.xi)
        self.gates = np.asarray(self.gates, dtype=np.int64)
        if self.gates.shape != self.xi.shape:
            raise ValueError("gate vector and information state differ in length")
        check_alpha(self.alpha, len(self.xi))


def gates(positions, feature_nodes) -> np.ndarray:
    """1 where the agent occupies a feature node, else 0."""
    feats = np.fromiter(feature_nodes, dtype=np.int64)
    return np.isin(np.asarray(positions, dtype=np.int64), feats).astype(np.int64)


def consensus_step(state: InfoState, graph: CommGraph, xi_r_sample):
    """Per-agent synchronous update.

    Works on float arrays and on object arrays of ``fractions.Fraction``
    (exact arithmetic, used to check conservation). ``xi_r_sample`` is either
    a scalar or one value per agent.
    """
    xi = state.xi
    n = len(xi)
    if graph.n_agents != n:
        raise ValueError(f"graph has {graph.n_agents} agents, state has {n}")
    ref = np.broadcast_to(np.asarray(xi_r_sample, dtype=xi.dtype if xi.dtype == object else float), (n,))
    out = xi.copy()
    for a in range(n):
        pull = 0 * xi[a]
        for b in graph.neighbors(a):
            pull = pull + (xi[a] - xi[b])
        out[a] = xi[a] - state.alpha * pull - int(state.gates[a]) * (xi[a] - ref[a])
    return out


def update_matrix(graph: CommGraph, g, alpha) -> np.ndarray:
    n = graph.n_agents
    g = np.asarray(g, dtype=float)
    if g.shape != (n,):
        raise ValueError(f"gate vector has shape {g.shape}, expected ({n},)")
    check_alpha(alpha, n)
    H = np.zeros((n + 1, n + 1))
    H[:n, :n] = np.eye(n) - alpha * laplacian(graph) - np.diag(g)
    H[:n, n] = g
    H[n, n] = 1.0
    return H


def apply_update_matrix(H: np.ndarray, xi, xi_ref) -> np.ndarray:
    """``H @ [xi; xi_ref]`` with the reference row dropped."""
    aug = np.append(np.asarray(xi, dtype=float), float(xi_ref))
    return (H @ aug)[:-1]


def consensus_reached(xi, xi_r_nominal: float, epsilon: float) -> bool:
    if not epsilon > 0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}")
    return bool(np.max(np.abs(np.asarray(xi, dtype=float) - xi_r_nominal)) < epsilon)
