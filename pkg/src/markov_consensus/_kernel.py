"""Compiled inner loop for episodes that do not record history.

Mirrors ``engine._run_reference`` operation for operation (same neighbour
summation order, same inverse-CDF scan) so both paths produce bit-identical
results for a given seed. Random numbers are pre-drawn by the caller in
blocks; the kernel returns control whenever a block runs dry.
"""

import numpy as np
from numba import njit

DONE = 0
NEED_MOVES = 1
NEED_NORMALS = 2
CAPPED = 3


def successor_tables(tm):
    """Per-node successor lists (column order) with their cumulative probabilities."""
    S = tm.state_count
    width = int((tm.probs > 0).sum(axis=1).max())
    succ = np.zeros((S, width), dtype=np.int64)
    cdf = np.ones((S, width))
    count = np.zeros(S, dtype=np.int64)
    for i in range(S):
        cols = np.flatnonzero(tm.probs[i])
        succ[i, : len(cols)] = cols
        cdf[i, : len(cols)] = tm.cumulative[i, cols]
        count[i] = len(cols)
    return succ, cdf, count


@njit(cache=True)
def advance(
    pos, xi, move_u, row, normals, ncur,
    succ, succ_cdf, succ_count, node_adj, feature_mask,
    alpha, nominal, scale, per_agent, eps, k, max_steps,
    union, gate_events,
):
    """Run steps until consensus, cap, or an exhausted random block.

    ``pos`` holds 0-based node indices and is updated in place, as are ``xi``,
    ``union`` and ``gate_events[0]``. ``row`` and ``ncur`` are read offsets
    into the move and noise blocks. Returns ``(status, k, row, ncur)`` where
    ``k`` is the number of completed updates; on any status other than DONE
    the state is exactly the pre-update state of step ``k``.
    """
    n = pos.shape[0]
    g = np.zeros(n)
    ref = np.empty(n)
    new = np.empty(n)
    while True:
        if k >= max_steps:
            return CAPPED, k, row, ncur
        if row >= move_u.shape[0]:
            return NEED_MOVES, k, row, ncur
        any_gate = False
        for a in range(n):
            if feature_mask[pos[a]]:
                g[a] = 1.0
                any_gate = True
            else:
                g[a] = 0.0
        if any_gate and scale > 0.0:
            need = n if per_agent else 1
            if ncur + need > normals.shape[0]:
                return NEED_NORMALS, k, row, ncur
            for a in range(n):
                ref[a] = nominal + scale * normals[ncur + (a if per_agent else 0)]
            ncur += need
        else:
            for a in range(n):
                ref[a] = nominal
        for a in range(n):
            pull = 0.0
            for b in range(n):
                if b != a and node_adj[pos[a], pos[b]]:
                    pull = pull + (xi[a] - xi[b])
                    union[a, b] = True
            new[a] = xi[a] - alpha * pull - g[a] * (xi[a] - ref[a])
            if g[a] > 0.0:
                gate_events[0] += 1
        done = True
        for a in range(n):
            xi[a] = new[a]
            if not abs(new[a] - nominal) < eps:
                done = False
        k += 1
        if done:
            return DONE, k, row, ncur
        for a in range(n):
            i = pos[a]
            u = move_u[row, a]
            m = succ_count[i]
            j = succ[i, m - 1]
            for t in range(m):
                if u < succ_cdf[i, t]:
                    j = succ[i, t]
                    break
            pos[a] = j
        row += 1


@njit(cache=True)
def move_only(pos, move_u, succ, succ_cdf, succ_count, node_adj, union):
    """Advance the walk by ``len(move_u)`` steps, accumulating met pairs.

    Checks contact at the current positions before each move. Returns the
    number of steps taken before the union became complete, or -1.
    """
    n = pos.shape[0]
    for row in range(move_u.shape[0]):
        full = True
        for a in range(n):
            for b in range(n):
                if b != a:
                    if node_adj[pos[a], pos[b]]:
                        union[a, b] = True
                    if not union[a, b]:
                        full = False
        if full:
            return row
        for a in range(n):
            i = pos[a]
            u = move_u[row, a]
            m = succ_count[i]
            j = succ[i, m - 1]
            for t in range(m):
                if u < succ_cdf[i, t]:
                    j = succ[i, t]
                    break
            pos[a] = j
    return -1
