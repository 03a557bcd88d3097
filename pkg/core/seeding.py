import zlib

import numpy as np

from .exceptions import ConfigError

MAX_SEED = 2**64 - 1


def check_seed(seed):
    """Validate a run seed: an unsigned 64-bit integer."""
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ConfigError(f"Seed must be an integer, got {seed!r}")
    if seed < 0 or seed > MAX_SEED:
        raise ConfigError(f"Seed must be in [0, 2**64 - 1], got {seed}")
    return int(seed)


def make_rng(seed, stream=None):
    """Build a numpy Generator for `seed`, optionally on a named sub-stream.

    Named streams let independent consumers (coefficients, treatment draws,
    noise) share one run seed without sharing a sequence of draws.
    """
    seed = check_seed(seed)
    if stream is None:
        return np.random.default_rng(np.random.SeedSequence(seed))
    key = zlib.crc32(str(stream).encode('utf-8'))
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(key,)))

