"""Offline evaluation of a fitted model on a held-out split."""

import logging
from dataclasses import dataclass

import pandas as pd

from core.exceptions import Undefined
from drm.objectives import PropensityWeights
from evaluation.curves import CostCurve, aucc, cost_curve, value_at_cost
from evaluation.generalization import generalization_table, mean_generalization
from rlearner.propensity import PropensityKind, fit_propensity

logger = logging.getLogger(__name__)

COST_FRACTION = 0.2


@dataclass(frozen=True, eq=False)
class ModelReport:
    curve: CostCurve
    generalization: pd.DataFrame
    summary: dict


def holdout_propensity_weights(test):
    """Logistic propensities fitted on the evaluation split itself."""
    prop = fit_propensity(test.X, test.t, kind=PropensityKind.LOGISTIC)
    return PropensityWeights.from_propensity(test.t, prop.predict(test.X), prop.clip)


def evaluate_model(fitted, test, weights=None):
    """Cost curve, AUCC, value at 20% of cost and the generalization grid of `fitted` on `test`."""
    scores = fitted.score(test.X)
    curve = cost_curve(scores, test)
    area = aucc(curve)
    try:
        at_fraction = value_at_cost(curve, COST_FRACTION)
    except Undefined as exc:
        logger.warning(f"value_at_20pct undefined for '{fitted.kind}': {exc}")
        at_fraction = None
    weights = weights or holdout_propensity_weights(test)
    table = generalization_table(scores, test, w=weights)
    summary = {
        'model': fitted.kind,
        'n_test': test.n,
        'aucc': area,
        'grid': curve.grid,
        'value_at_20pct': at_fraction,
        'generalization': {str(q): score for q, score in zip(table['q'], table['score'])},
        'generalization_mean': mean_generalization(table),
    }
    logger.info(f"'{fitted.kind}' on {test.n} test rows: AUCC {area:.4f}")
    return ModelReport(curve=curve, generalization=table, summary=summary)


def improvement_pct(value, baseline):
    if baseline is None or baseline == 0:
        return None
    return 100.0 * (value - baseline) / baseline
