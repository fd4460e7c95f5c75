"""Markov-chain random-walk search with gated consensus on a feature's presence."""

from markov_consensus.errors import ConfigError
from markov_consensus.grid import SpatialGrid, TransitionMatrix, build_grid, transition_matrix
from markov_consensus.engine import EpisodeConfig, EpisodeResult, run_episode
from markov_consensus.ensemble import ScenarioSweep, run_ensemble, fit_exponential, summarize

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "SpatialGrid",
    "TransitionMatrix",
    "build_grid",
    "transition_matrix",
    "EpisodeConfig",
    "EpisodeResult",
    "run_episode",
    "ScenarioSweep",
    "run_ensemble",
    "fit_exponential",
    "summarize",
]
