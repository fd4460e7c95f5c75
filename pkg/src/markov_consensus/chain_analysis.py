"""Numerical checks of the mobility chain: stationarity, irreducibility, product chain."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from markov_consensus.errors import ConfigError
from markov_consensus.grid import SpatialGrid, TransitionMatrix, build_grid, transition_matrix

COMPOSITE_CAP = 10_000


class ConvergenceError(RuntimeError):
    pass


def stationary_distribution(tm: TransitionMatrix, tol: float = 1e-12, max_iter: int = 1_000_000) -> np.ndarray:
    """Left Perron vector by power iteration, started from the uniform vector.

    Iterates ``pi <- pi P`` (renormalised) until ``||pi P - pi||_inf < tol``.
    Raises ``ConvergenceError`` if that does not happen within ``max_iter``,
    which flags reducible or periodic chains.
    """
    P = tm.probs
    pi = np.full(tm.state_count, 1.0 / tm.state_count)
    for _ in range(max_iter):
        nxt = pi @ P
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) < tol:
            return nxt
        pi = nxt
    raise ConvergenceError(f"power iteration did not reach tol={tol} in {max_iter} iterations")


def detailed_balance_stationary(grid: SpatialGrid) -> np.ndarray:
    """Closed form for the grid walk: ``pi_i`` proportional to ``d_i + 1``."""
    w = grid.degrees + 1.0
    return w / w.sum()


def _reachable(adj: np.ndarray, start: int) -> np.ndarray:
    seen = np.zeros(adj.shape[0], dtype=bool)
    seen[start] = True
    queue = deque([start])
    while queue:
        i = queue.popleft()
        for j in np.flatnonzero(adj[i]):
            if not seen[j]:
                seen[j] = True
                queue.append(j)
    return seen


def is_irreducible(tm: TransitionMatrix) -> bool:
    """Support graph strongly connected: node 0 reaches all and is reached by all."""
    adj = tm.probs > 0
    return bool(_reachable(adj, 0).all() and _reachable(adj.T, 0).all())


def composite_flat_index(nodes, S: int) -> int:
    """1-based flat index of agent positions; agent 1 varies fastest."""
    return 1 + sum((int(i) - 1) * S**a for a, i in enumerate(nodes))


def composite_nodes(flat: int, S: int, n_agents: int) -> tuple[int, ...]:
    if not 1 <= flat <= S**n_agents:
        raise ValueError(f"flat index {flat} outside 1..{S ** n_agents}")
    rem = flat - 1
    out = []
    for _ in range(n_agents):
        rem, digit = divmod(rem, S)
        out.append(digit + 1)
    return tuple(out)


def composite_chain(tm: TransitionMatrix, n_agents: int, cap: int = COMPOSITE_CAP) -> TransitionMatrix:
    """Joint chain of ``n_agents`` independent walkers, ``q = prod_a p[i_a, j_a]``."""
    if n_agents < 1:
        raise ConfigError("need at least one agent")
    if n_agents == 1:
        return tm
    S = tm.state_count
    M = S**n_agents
    if M > cap:
        raise ConfigError(f"composite chain has {M} states, above the cap of {cap}")
    flat = np.arange(M)
    digits = [(flat // S**a) % S for a in range(n_agents)]
    Q = np.ones((M, M))
    for d in digits:
        Q *= tm.probs[d[:, None], d[None, :]]
    return TransitionMatrix(Q)


def has_rooted_spanning_tree(union_adjacency: np.ndarray, gated_ever) -> bool:
    """Does the union graph with the feature as extra root reach every agent?

    The feature links one way into each agent that was ever gated; agents
    link both ways along the union of communication graphs.
    """
    n = union_adjacency.shape[0]
    adj = np.zeros((n + 1, n + 1), dtype=bool)
    adj[:n, :n] = union_adjacency.astype(bool)
    adj[n, :n] = np.asarray(gated_ever, dtype=bool)
    return bool(_reachable(adj, n).all())


@dataclass
class VerifyReport:
    c: int
    n_agents: int
    checks: dict[str, Any] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v for k, v in self.checks.items() if isinstance(v, bool))

    def to_dict(self) -> dict[str, Any]:
        return {"c": self.c, "N": self.n_agents, "checks": self.checks, "notes": self.notes, "passed": self.passed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        lines = [f"verification: c={self.c} N={self.n_agents}"]
        for key, val in self.checks.items():
            if isinstance(val, bool):
                lines.append(f"  [{'PASS' if val else 'FAIL'}] {key}")
            else:
                lines.append(f"  {key}: {val}")
        lines += [f"  note: {n}" for n in self.notes]
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def verify_report(
    c: int,
    n_agents: int,
    cap: int = COMPOSITE_CAP,
    seed: int = 0,
    sample_steps: int = 100_000,
) -> VerifyReport:
    """Run the bundled chain checks; failures are entries, never exceptions."""
    from markov_consensus.engine import EpisodeConfig, run_episode_reference, walk_until_complete_union

    grid = build_grid(c)
    tm = transition_matrix(grid)
    rep = VerifyReport(c, n_agents)
    ck = rep.checks
    ck["P row-stochastic"] = bool(np.all(np.abs(tm.row_sums() - 1) < 1e-12))
    ck["P irreducible"] = is_irreducible(tm)
    pi = stationary_distribution(tm)
    residual = float(np.max(np.abs(pi @ tm.probs - pi)))
    ck["stationary residual"] = residual
    ck["stationary residual < 1e-12"] = residual < 1e-12
    ck["stationary matches (d_i+1) closed form"] = bool(
        np.max(np.abs(pi - detailed_balance_stationary(grid))) < 1e-10
    )

    M = grid.node_count**n_agents
    if M > cap:
        rep.notes.append(f"composite checks skipped: cap exceeded ({grid.node_count}^{n_agents} = {M} > {cap})")
    else:
        Q = composite_chain(tm, n_agents, cap)
        ck["Q row-stochastic"] = bool(np.all(np.abs(Q.row_sums() - 1) < 1e-12))
        ck["Q irreducible"] = is_irreducible(Q)

    if n_agents >= 2:
        # the feature-node default {4,5,6} may not fit a tiny grid; it is irrelevant to the walk
        cfg = EpisodeConfig(c=c, N=n_agents, seed=seed, feature_nodes=(), alpha=min(1 / 13, 0.5 / max(n_agents - 1, 1)))
        steps = walk_until_complete_union(cfg, sample_steps)
        ck["comm-graph union complete"] = steps is not None
        ck["steps until complete union"] = steps if steps is not None else f"> {sample_steps}"
    else:
        rep.notes.append("single agent: communication union is trivially complete")

    if grid.node_count >= 6:
        ep = run_episode_reference(EpisodeConfig(c=c, N=n_agents, seed=seed, record_history=True, alpha=min(1 / 13, 0.5 / max(n_agents - 1, 1))))
        gated = np.zeros(n_agents, dtype=bool)
        union = np.zeros((n_agents, n_agents), dtype=bool)
        for rec in ep.history[:-1]:
            gated |= np.asarray(rec["gates"], dtype=bool)
            for a, b in rec["edges"]:
                union[a - 1, b - 1] = union[b - 1, a - 1] = True
        ck["sample episode consensus steps"] = ep.consensus_steps if ep.reached else "not reached"
        ck["sample episode feature-rooted spanning tree"] = (
            "present" if has_rooted_spanning_tree(union, gated) else "absent"
        )
    return rep
