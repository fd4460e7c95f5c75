"""Episode orchestration: move, sense, communicate, update until consensus.

Per step ``k``: build the communication graph from the current positions,
compute gates, draw the reference sample, apply the consensus update, test
``max |xi - xi_ref| < eps`` against the nominal reference (``T_c = k + 1`` on
success), then move every agent.

Two execution paths share this contract. ``run_episode_reference`` composes
the public module operations and can record full history; the default path
runs the same arithmetic in a compiled kernel and is what the Monte Carlo
sweeps use. Both consume identical random streams and agree bit-for-bit.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from typing import Any

import numpy as np

from markov_consensus import _kernel
from markov_consensus.consensus import InfoState, check_alpha, consensus_reached, consensus_step, gates
from markov_consensus.errors import ConfigError
from markov_consensus.grid import SpatialGrid, TransitionMatrix, transition_matrix
from markov_consensus.mobility import move_agents, sample_initial_positions
from markov_consensus.network import CommGraph, comm_graph, laplacian, node_adjacency
from markov_consensus.rng import episode_streams

NOISE_PARAMETERS = ("variance", "std")


@dataclass(frozen=True)
class EpisodeConfig:
    """Scenario parameters. Defaults follow the published experiment constants."""

    c: int
    N: int
    seed: int = 0
    d: float = 1.0
    alpha: float = 1.0 / 13.0
    epsilon: float = 0.01
    feature_nodes: tuple[int, ...] = (4, 5, 6)
    xi_ref: float = 1.0
    noise_var: float = 0.0
    # how ``noise_var`` is read: "variance" (default) or "std"
    noise_parameter: str = "variance"
    noise_per_agent: bool = False
    r_comm: float = 0.0
    max_comm_radius: float | None = None
    max_steps: int = 100_000
    record_history: bool = False
    step_seconds: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "feature_nodes", tuple(int(f) for f in self.feature_nodes))
        grid = self.grid  # validates c, d
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise ConfigError(f"N must be a positive integer, got {self.N!r}")
        check_alpha(self.alpha, self.N)
        if not 0 < self.epsilon < 1:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        for f in self.feature_nodes:
            if not 1 <= f <= grid.node_count:
                raise ConfigError(f"feature node {f} outside 1..{grid.node_count}")
        if self.noise_var < 0:
            raise ConfigError(f"noise_var must be >= 0, got {self.noise_var}")
        if self.noise_parameter not in NOISE_PARAMETERS:
            raise ConfigError(f"noise_parameter must be one of {NOISE_PARAMETERS}")
        if self.r_comm < 0:
            raise ConfigError(f"r_comm must be >= 0, got {self.r_comm}")
        if self.r_comm > self.comm_radius_bound:
            raise ConfigError(f"r_comm={self.r_comm} exceeds the maximum radius {self.comm_radius_bound}")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise ConfigError(f"max_steps must be a positive integer, got {self.max_steps}")
        if not self.step_seconds > 0:
            raise ConfigError(f"step_seconds must be positive, got {self.step_seconds}")

    @property
    def grid(self) -> SpatialGrid:
        return SpatialGrid(self.c, self.d)

    @property
    def comm_radius_bound(self) -> float:
        if self.max_comm_radius is not None:
            return self.max_comm_radius
        return self.grid.diagonal_length()

    @property
    def noise_scale(self) -> float:
        """Standard deviation of the reference draw."""
        return math.sqrt(self.noise_var) if self.noise_parameter == "variance" else float(self.noise_var)

    def replace(self, **changes) -> "EpisodeConfig":
        data = self.to_dict()
        data.update(changes)
        return EpisodeConfig.from_dict(data)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["feature_nodes"] = list(self.feature_nodes)
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EpisodeConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown episode field(s): {', '.join(sorted(unknown))}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


@dataclass
class EpisodeResult:
    seed: int
    consensus_steps: int | None
    consensus_time_s: float | None
    steps_run: int
    final_xi: list[float]
    detection_events: int
    met_pairs: list[tuple[int, int]]
    history: list[dict[str, Any]] | None = field(default=None, repr=False)

    @property
    def reached(self) -> bool:
        return self.consensus_steps is not None

    def to_dict(self, include_history: bool = False) -> dict[str, Any]:
        out = {
            "seed": self.seed,
            "reached": self.reached,
            "consensus_steps": self.consensus_steps,
            "consensus_time_s": self.consensus_time_s,
            "steps_run": self.steps_run,
            "final_xi": [float(x) for x in self.final_xi],
            "detection_events": self.detection_events,
            "met_pairs": [list(p) for p in self.met_pairs],
        }
        if include_history and self.history is not None:
            out["history"] = self.history
        return out

    def to_json(self, include_history: bool = False) -> str:
        return json.dumps(self.to_dict(include_history), indent=2)

    def write_history_csv(self, path) -> None:
        if self.history is None:
            raise ValueError("episode was run without record_history")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "agent_id", "node", "xi", "gate"])
            for rec in self.history:
                for a, (node, xi, g) in enumerate(zip(rec["positions"], rec["xi"], rec["gates"])):
                    w.writerow([rec["step"], a + 1, node, repr(float(xi)), g])


def sample_reference(nominal: float, variance: float, rng: np.random.Generator, size: int | None = None):
    """Reference measurement; ``nominal`` exactly when ``variance`` is 0."""
    if variance < 0:
        raise ConfigError(f"variance must be >= 0, got {variance}")
    return _draw_reference(nominal, math.sqrt(variance), rng, size)


def _draw_reference(nominal, scale, rng, size=None):
    if scale == 0:
        return nominal if size is None else np.full(size, float(nominal))
    z = rng.standard_normal(size)
    return nominal + scale * z


@lru_cache(maxsize=64)
def _chain_tables(c: int, d: float, r_comm: float):
    grid = SpatialGrid(c, d)
    tm = transition_matrix(grid)
    succ, cdf, count = _kernel.successor_tables(tm)
    return grid, tm, succ, cdf, count, node_adjacency(grid, r_comm)


def _initial_state(config: EpisodeConfig, streams):
    pos = sample_initial_positions(config.grid, config.N, streams.init)
    xi = streams.init.random(config.N)
    return pos.astype(np.int64), xi


def _pairs(union: np.ndarray) -> list[tuple[int, int]]:
    a, b = np.nonzero(np.triu(union, 1))
    return [(int(i) + 1, int(j) + 1) for i, j in zip(a, b)]


def _finish(config, k, reached, xi, events, union, history=None) -> EpisodeResult:
    return EpisodeResult(
        seed=config.seed,
        consensus_steps=k if reached else None,
        consensus_time_s=k * config.step_seconds if reached else None,
        steps_run=k,
        final_xi=[float(x) for x in xi],
        detection_events=int(events),
        met_pairs=_pairs(union),
        history=history,
    )


def run_episode_reference(config: EpisodeConfig) -> EpisodeResult:
    """Step-by-step episode built from the public module operations."""
    grid, tm, *_ = _chain_tables(config.c, config.d, config.r_comm)
    streams = episode_streams(config.seed)
    pos, xi = _initial_state(config, streams)
    scale = config.noise_scale
    union = np.zeros((config.N, config.N), dtype=bool)
    events = 0
    history = [] if config.record_history else None
    k = 0
    reached = False
    while k < config.max_steps:
        graph = comm_graph(pos, grid, config.r_comm)
        g = gates(pos, config.feature_nodes)
        if g.any():
            ref = _draw_reference(config.xi_ref, scale, streams.noise, config.N if config.noise_per_agent else None)
        else:
            ref = config.xi_ref
        if history is not None:
            history.append(_history_record(k, pos, xi, g, graph, ref))
        xi = consensus_step(InfoState(xi, config.alpha, g, config.xi_ref), graph, ref)
        union |= graph.adjacency.astype(bool)
        events += int(g.sum())
        k += 1
        if consensus_reached(xi, config.xi_ref, config.epsilon):
            reached = True
            break
        pos = move_agents(tm, pos, streams.move)
    if history is not None:
        g = gates(pos, config.feature_nodes)
        history.append(_history_record(k, pos, xi, g, comm_graph(pos, grid, config.r_comm), None))
    return _finish(config, k, reached, xi, events, union, history)


def _history_record(k, pos, xi, g, graph: CommGraph, ref) -> dict[str, Any]:
    rec = {
        "step": k,
        "positions": [int(p) for p in pos],
        "xi": [float(x) for x in xi],
        "gates": [int(x) for x in g],
        "edges": [[a + 1, b + 1] for a, b in graph.edge_list()],
    }
    if ref is not None:
        rec["reference"] = np.asarray(ref, dtype=float).tolist()
    return rec


def laplacian_from_record(rec: dict[str, Any]) -> np.ndarray:
    """Rebuild the step's Laplacian from a history record's edge list."""
    n = len(rec["positions"])
    return laplacian(CommGraph.from_edges(n, [(a - 1, b - 1) for a, b in rec["edges"]]))


_FIRST_BLOCK = 256
_MAX_BLOCK = 1 << 16


def run_episode_fast(config: EpisodeConfig) -> EpisodeResult:
    grid, tm, succ, cdf, count, node_adj = _chain_tables(config.c, config.d, config.r_comm)
    streams = episode_streams(config.seed)
    pos, xi = _initial_state(config, streams)
    pos = pos - 1
    feature_mask = np.zeros(grid.node_count, dtype=np.bool_)
    feature_mask[np.array(config.feature_nodes, dtype=np.int64) - 1] = True
    union = np.zeros((config.N, config.N), dtype=np.bool_)
    events = np.zeros(1, dtype=np.int64)
    scale = float(config.noise_scale)

    block = _FIRST_BLOCK
    moves = streams.move.random((block, config.N))
    normals = np.empty(0)
    row = ncur = 0
    k = 0
    while True:
        status, k, row, ncur = _kernel.advance(
            pos, xi, moves, row, normals, ncur,
            succ, cdf, count, node_adj, feature_mask,
            float(config.alpha), float(config.xi_ref), scale, bool(config.noise_per_agent),
            float(config.epsilon), k, int(config.max_steps), union, events,
        )
        if status == _kernel.DONE or status == _kernel.CAPPED:
            break
        if status == _kernel.NEED_MOVES:
            block = min(2 * block, _MAX_BLOCK)
            moves = streams.move.random((block, config.N))
            row = 0
        else:
            normals = np.concatenate([normals[ncur:], streams.noise.standard_normal(max(block, config.N))])
            ncur = 0
    return _finish(config, k, status == _kernel.DONE, xi, events[0], union)


def run_episode(config: EpisodeConfig) -> EpisodeResult:
    """Run one episode; history recording uses the step-by-step path."""
    if config.record_history:
        return run_episode_reference(config)
    return run_episode_fast(config)


def walk_until_complete_union(config: EpisodeConfig, horizon: int) -> int | None:
    """Steps until every pair of agents has shared a node (or been in range).

    Replays the episode's own seeded walk, which does not depend on the
    information states, and keeps walking past consensus up to ``horizon``
    steps. Returns ``None`` if the union is still incomplete at the horizon.
    """
    _, _, succ, cdf, count, node_adj = _chain_tables(config.c, config.d, config.r_comm)
    streams = episode_streams(config.seed)
    pos, _ = _initial_state(config, streams)
    pos = pos - 1
    union = np.zeros((config.N, config.N), dtype=np.bool_)
    done = 0
    block = _FIRST_BLOCK
    while done < horizon:
        take = min(block, horizon - done)
        r = _kernel.move_only(pos, streams.move.random((take, config.N)), succ, cdf, count, node_adj, union)
        if r >= 0:
            return done + r
        done += take
        block = min(2 * block, _MAX_BLOCK)
    return None
