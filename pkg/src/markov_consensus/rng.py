"""Seeded random streams for episodes and seed derivation for sweeps.

Each episode owns three independent PCG64 streams spawned from one
``numpy.random.SeedSequence``: initial conditions, agent moves and
reference-measurement noise. Keeping moves on their own stream means the
agents' walk depends only on the seed, not on the noise settings, and lets the
compiled kernel pre-draw move uniforms in blocks without changing the values
each agent receives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass
class EpisodeStreams:
    init: np.random.Generator
    move: np.random.Generator
    noise: np.random.Generator


def episode_streams(seed: int) -> EpisodeStreams:
    init, move, noise = np.random.SeedSequence(int(seed) & _MASK64).spawn(3)
    return EpisodeStreams(
        init=np.random.Generator(np.random.PCG64(init)),
        move=np.random.Generator(np.random.PCG64(move)),
        noise=np.random.Generator(np.random.PCG64(noise)),
    )


def mix64(x: int) -> int:
    """SplitMix64 finalizer; a bijection on 64-bit integers."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(base_seed: int, n_agents: int, side: int, run_index: int) -> int:
    """Per-run seed ``base_seed XOR mix64(pack(N, c, run))``.

    The packing is injective for N, c < 2**16 and run < 2**32, and ``mix64``
    is a bijection, so distinct runs of one sweep never share a seed.
    """
    if not (0 <= n_agents < 1 << 16 and 0 <= side < 1 << 16 and 0 <= run_index < 1 << 32):
        raise ValueError("sweep coordinates out of range for seed packing")
    packed = (n_agents << 48) | (side << 32) | run_index
    return (int(base_seed) & _MASK64) ^ mix64(packed)
