"""Seed handling.

Every random quantity is keyed by ``(seed, stream)`` through a counter-based
Philox generator, so results do not depend on how work is split across
workers.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def philox(seed: int, stream: int = 0) -> np.random.Generator:
    """Generator for the stream ``stream`` of the master ``seed``."""
    key = np.array([int(seed) & _MASK64, int(stream) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def replica_seed(seed: int, replica: int) -> int:
    """Integer seed of replica ``replica`` derived from ``seed``."""
    state = np.random.SeedSequence([int(seed) & _MASK64, int(replica)]).generate_state(2, np.uint64)
    return int(state[0]) >> 1


def brownian_increments(gen: np.random.Generator, steps: int, m: int, h: float) -> np.ndarray:
    """``(steps, m)`` independent N(0, h) increments."""
    return gen.standard_normal((steps, m)) * np.sqrt(h)


def refine_increments(dW: np.ndarray, h: float, gen: np.random.Generator, axis: int = 0) -> np.ndarray:
    """Split each increment over a step ``h`` into two over ``h/2`` (Brownian bridge).

    ``axis`` is the time axis. The sum of every refined pair equals the
    original increment exactly, so the coarse path is reused.
    """
    dW = np.moveaxis(np.asarray(dW, dtype=np.float64), axis, 0)
    first = 0.5 * dW + 0.5 * np.sqrt(h) * gen.standard_normal(dW.shape)
    out = np.empty((2 * dW.shape[0],) + dW.shape[1:])
    out[0::2] = first
    out[1::2] = dW - first
    return np.moveaxis(out, 0, axis)
