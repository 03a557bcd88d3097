import logging

import numpy as np
import pandas as pd

from core.exceptions import ConfigError, EmptyCohort
from drm.objectives import ObjectiveForm, PropensityWeights, combine, tau_hat_propensity
from drm.probabilities import effectiveness_probs
from uplift_rank.conf import get_defaults
from .ranking import check_scores, top_fraction

logger = logging.getLogger(__name__)


def generalization_score(scores, ds, q, w=None, mode="ratio", alpha=None, rectifier_eps=None):
    """Propensity-weighted ranking objective on the top-q users by score.

    Scores of the subset go through a per-cohort softmax, so any uplift model
    can be scored this way. `w` holds propensities aligned with `ds`; the
    treated fraction is recomputed on the subset. Without `w` the subset's
    treated fraction is used as a constant propensity.
    """
    defaults = get_defaults()
    alpha = defaults['ALPHA_DRM'] if alpha is None else alpha
    rectifier_eps = defaults['RECTIFIER_EPS'] if rectifier_eps is None else rectifier_eps
    forms = {'ratio': ObjectiveForm.RATIO, 'linear': ObjectiveForm.LINEAR}
    if mode not in forms:
        raise ConfigError(f"Generalization mode must be 'ratio' or 'linear', got '{mode}'")

    scores = check_scores(scores, ds)
    rows = top_fraction(scores, q)
    t = ds.t[rows]
    if w is None:
        weights = PropensityWeights.constant(t)
    else:
        weights = PropensityWeights.from_propensity(t, w.e_x[rows])
    probs = effectiveness_probs(scores[rows], t)
    tau_r = tau_hat_propensity(probs, ds.y_r[rows], t, weights)
    tau_c = tau_hat_propensity(probs, ds.y_c[rows], t, weights)
    value, _, _ = combine(tau_r, tau_c, forms[mode], alpha, rectifier_eps)
    return float(value)


def generalization_table(scores, ds, w=None, qs=None, mode="ratio", alpha=None):
    """One row per top-q percentage, in the layout of the generalization report.

    A q whose subset lacks a cohort gets a NaN score and a warning.
    """
    qs = get_defaults()['GENERALIZATION_Q'] if qs is None else qs
    rows = []
    for q in qs:
        try:
            score = generalization_score(scores, ds, q / 100.0, w=w, mode=mode, alpha=alpha)
        except EmptyCohort as exc:
            logger.warning(f"Generalization score at q={q}% skipped: {exc}")
            score = np.nan
        rows.append({'q': int(q), 'score': score})
    return pd.DataFrame(rows, columns=['q', 'score'])


def mean_generalization(table):
    return float(np.nanmean(table['score']))
