"""Counter-addressed random streams.

Every random quantity is drawn from numpy's Philox4x64 generator keyed by
``(seed, purpose)``. Each simulation step owns exactly one Philox counter
block (four doubles) in the pair and mu streams, so the draw for step ``t``
is ``Philox(key=(seed, purpose), counter=t)`` and can be produced without
replaying earlier steps. Per-step random graphs own ``ceil(M / 4)`` blocks
per step, ``M = n(n-1)/2``.
"""

import numpy as np

PAIRS = 1
MU = 2
GRAPH = 3
INITIAL = 4
GRAPH_STATIC = 5

DOUBLES_PER_BLOCK = 4
MASK64 = (1 << 64) - 1


def key_for(seed: int, purpose: int) -> np.ndarray:
    return np.array([int(seed) & MASK64, purpose], dtype=np.uint64)


def generator(seed: int, purpose: int, counter: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=key_for(seed, purpose), counter=counter))


def step_uniforms(seed: int, purpose: int, t0: int, t1: int) -> np.ndarray:
    """Uniforms in [0, 1) for steps ``t0 <= t < t1``, shape ``(t1 - t0, 4)``."""
    return generator(seed, purpose, t0).random((t1 - t0, DOUBLES_PER_BLOCK))
