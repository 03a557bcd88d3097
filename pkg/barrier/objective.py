from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit, softmax

from core.cohorts import cohort_indices
from core.exceptions import ConfigError
from drm.objectives import DirectRankingObjective, ObjectiveForm
from drm.probabilities import cohort_softmax
from nn.objectives import check_finite
from uplift_rank.conf import get_defaults
from .thresholds import budget_costs, select_threshold


@dataclass(frozen=True, eq=False)
class BarrierOutput:
    d_star: float
    weights: np.ndarray
    p_hat: np.ndarray
    passed: np.ndarray

    @property
    def pass_fraction(self):
        return float(np.mean(self.passed))


def barrier_weights(p, d_star, temperature):
    """logistic(T * (p - d*)): close to 1 above the threshold and to 0 below."""
    if temperature <= 0:
        raise ConfigError(f"Barrier temperature must be positive, got {temperature}")
    return expit(temperature * (np.asarray(p, dtype=float) - d_star))


def barrier_logits(p, d_star, temperature):
    """log p + log logistic(T * (p - d*)); finite where the gate itself underflows."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        log_p = np.log(p)
    return log_p + log_expit(temperature * (p - d_star))


def apply_barrier(p, t, d_star, temperature):
    """Weight p by the barrier and renormalize each cohort to sum to 1.

    Renormalization is a per-cohort softmax of the barrier logits, so a
    cohort lying entirely below d* still sums to 1 at any temperature.
    """
    p = np.asarray(p, dtype=float)
    weights = barrier_weights(p, d_star, temperature)
    logits = barrier_logits(p, d_star, temperature)
    p_hat = np.empty_like(p)
    for rows in cohort_indices(t):
        p_hat[rows] = softmax(logits[rows])
    return BarrierOutput(d_star=float(d_star), weights=weights, p_hat=p_hat, passed=p > d_star)


class ConstrainedObjective(DirectRankingObjective):
    """DRM objective evaluated on barrier-pooled, renormalized probabilities.

    d* is recomputed on every evaluation, unless pinned with `d_star`, and is
    treated as a constant for the gradient.
    """

    def __init__(self, X, t, y_r, y_c, constraint, temperature, costs=None, d_star=None, **kwargs):
        super().__init__(X, t, y_r, y_c, **kwargs)
        if temperature <= 0:
            raise ConfigError(f"Barrier temperature must be positive, got {temperature}")
        self.constraint = constraint
        self.temperature = float(temperature)
        self.costs = budget_costs(y_c) if costs is None else np.asarray(costs, dtype=float)
        self.fixed_d_star = d_star

    def barrier(self, scores):
        p = cohort_softmax(scores, self.t)
        d_star = self.fixed_d_star
        if d_star is None:
            d_star = select_threshold(self.constraint, p, self.costs)
        return p, apply_barrier(p, self.t, d_star, self.temperature)

    def transform(self, scores):
        p, out = self.barrier(scores)
        p_hat, T = out.p_hat, self.temperature
        # p * d(logits)/dp; 1 - w is taken as expit(-x) to keep precision near w = 1
        slope = 1.0 + T * p * expit(-T * (p - out.d_star))

        def pullback(grad_p_hat):
            grad_scores = np.empty_like(grad_p_hat)
            for rows in cohort_indices(self.t):
                grad_logits = p_hat[rows] * (grad_p_hat[rows] - p_hat[rows] @ grad_p_hat[rows])
                u = grad_logits * slope[rows]
                grad_scores[rows] = u - p[rows] * u.sum()
            return grad_scores

        info = {
            'temperature': self.temperature,
            'd_star': out.d_star,
            'pass_fraction': out.pass_fraction,
        }
        return p_hat, pullback, info


def constrained_objective(params, ds, c, temperature, reg=0.0, form=ObjectiveForm.RATIO, rectifier_eps=None):
    if rectifier_eps is None:
        rectifier_eps = get_defaults()['RECTIFIER_EPS']
    objective = ConstrainedObjective(
        ds.X, ds.t, ds.y_r, ds.y_c, c, temperature, form=form, rectifier_eps=rectifier_eps, reg=reg
    )
    return check_finite(objective.evaluate(params)).value
