import math

import numpy as np

from core.exceptions import ConfigError, ShapeMismatch


def rank_order(scores):
    """Row indices by descending score; ties keep the lower index first."""
    scores = np.asarray(scores, dtype=float)
    return np.lexsort((np.arange(scores.size), -scores))


def top_count(n, q):
    if not 0.0 < q <= 1.0:
        raise ConfigError(f"Fraction q must be in (0, 1], got {q}")
    # 0.3 * 10 must select 3 users, not 4
    return min(n, math.ceil(q * n - 1e-9))


def top_fraction(scores, q):
    order = rank_order(scores)
    return order[:top_count(order.size, q)]


def check_scores(scores, ds):
    scores = np.asarray(scores, dtype=float)
    if scores.shape != (ds.n,):
        raise ShapeMismatch(f"Expected {ds.n} scores, got shape {scores.shape}")
    return scores
