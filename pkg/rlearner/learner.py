"""R-learner: residualize the outcome, then regress the effect on residualized treatment.

    y - m(x) = (t - e(x)) * tau(x) + noise
"""

import logging

import numpy as np

from core.cohorts import cohort_indices
from core.exceptions import ConfigError
from .ridge import fit_ridge

logger = logging.getLogger(__name__)


class Outcome:
    VALUE = "value"
    COST = "cost"
    COMBINED = "combined"

    VALUES = (VALUE, COST, COMBINED)


def outcome_target(ds, outcome, lam=0.0):
    if outcome == Outcome.VALUE:
        return ds.y_r
    if outcome == Outcome.COST:
        return ds.y_c
    if outcome == Outcome.COMBINED:
        return ds.y_r - lam * ds.y_c
    raise ConfigError(f"Unknown outcome '{outcome}'; choose from {list(Outcome.VALUES)}")


def rlearner_fit(ds, outcome, prop, lam=0.0, reg=0.0, X=None):
    """Fit the effect model for `outcome` ("value", "cost" or "combined" with y_r - lam * y_c).

    Step one regresses y on x for m(x); step two is a ridge fit of
    (y - m) / (t - e) weighted by (t - e)^2.
    """
    cohort_indices(ds.t)
    X = ds.X if X is None else X
    y = outcome_target(ds, outcome, lam)
    m_hat = fit_ridge(X, y, reg).predict(X)
    residual_t = ds.t - prop.predict(X)
    target = (y - m_hat) / residual_t
    model = fit_ridge(X, target, reg, sample_weight=residual_t ** 2)
    logger.debug(f"R-learner ({outcome}) fitted on {ds.n} rows, mean effect {np.mean(model.predict(X)):.4g}")
    return model
