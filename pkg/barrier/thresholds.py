"""Threshold d* on the pooled effectiveness probabilities.

Users with p > d* pass the constraint. d* sits halfway between the last
selected and the first rejected probability; -1 selects everyone and 2
selects no one, since probabilities lie in (0, 1).
"""

import numpy as np

from core.exceptions import ConfigError, InvalidCost, ShapeMismatch
from .constraints import BudgetOrder, ConstraintKind

SELECT_ALL = -1.0
SELECT_NONE = 2.0
TIE_OFFSET = 1e-12


def top_k_threshold(p, k):
    p = np.asarray(p, dtype=float)
    n = p.size
    if k >= n:
        return SELECT_ALL
    if k <= 0:
        return SELECT_NONE
    ranked = np.sort(p)[::-1]
    above, below = ranked[k - 1], ranked[k]
    if above == below:
        # the whole tie group passes
        return above - TIE_OFFSET
    return 0.5 * (above + below)


def select_threshold_percentage(p, P):
    if not 0.0 < P <= 1.0:
        raise ConfigError(f"Percentage P must be in (0, 1], got {P}")
    k = int(np.floor(P * np.size(p) + 0.5))
    return top_k_threshold(p, k)


def select_threshold_budget(p, costs, B, order=BudgetOrder.PROBABILITY):
    """Largest prefix by descending p whose cumulative cost stays within B.

    Ties at the cut fall on the rejected side so the budget is never
    exceeded. With order="cost" the count k comes from the cheapest users
    first and the top k by p are selected.
    """
    p = np.asarray(p, dtype=float)
    costs = np.asarray(costs, dtype=float)
    if costs.shape != p.shape:
        raise ShapeMismatch(f"costs has shape {costs.shape}, expected {p.shape}")
    if (costs < 0).any():
        negative = int((costs < 0).sum())
        raise InvalidCost(f"Budget constraints need non-negative costs; {negative} are negative")
    if B <= 0:
        raise ConfigError(f"Budget B must be positive, got {B}")

    if order == BudgetOrder.COST:
        k = int(np.searchsorted(np.cumsum(np.sort(costs, kind="stable")), B, side="right"))
        return top_k_threshold(p, k)

    ranking = np.argsort(-p, kind="stable")
    k = int(np.searchsorted(np.cumsum(costs[ranking]), B, side="right"))
    if k >= p.size:
        return SELECT_ALL
    if k == 0:
        return SELECT_NONE
    above, below = p[ranking[k - 1]], p[ranking[k]]
    if above == below:
        return above
    return 0.5 * (above + below)


def budget_costs(y_c):
    """Observed costs as spend against a budget: negative costs count as zero."""
    return np.maximum(np.asarray(y_c, dtype=float), 0.0)


def select_threshold(constraint, p, costs=None):
    if constraint.kind == ConstraintKind.PERCENTAGE:
        return select_threshold_percentage(p, constraint.P)
    return select_threshold_budget(p, costs, constraint.B, constraint.budget_order)
