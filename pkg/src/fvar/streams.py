"""Reproducible random streams.

All randomness in the package flows through Philox, a counter-based
generator, keyed by (seed, stream) so that parallel replications draw from
provably independent, individually reproducible streams.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


def rng_stream(seed: int, stream: int = 0) -> np.random.Generator:
    if seed < 0 or stream < 0:
        raise ConfigError("seed and stream must be nonnegative")
    key = np.array([seed, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
