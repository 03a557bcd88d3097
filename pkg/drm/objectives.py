"""Direct Ranking Model objectives.

The model's per-cohort probabilities p turn the treated/control outcome
differences into score-weighted effect estimates

    tau = sum_i c_i * p_i * y_i

with c_i = +1 for treated and -1 for control rows, or the inverse-propensity
coefficients when PropensityWeights are supplied. The objective combines
tau_r and tau_c and is maximized.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from core.cohorts import TREATED, cohort_indices
from core.exceptions import ConfigError, NonFinite, ShapeMismatch
from nn.objectives import ScoreObjective, check_finite
from uplift_rank.conf import get_defaults
from .probabilities import cohort_softmax, softmax_vjp


class ObjectiveForm:
    RATIO = "softplus_denominator"
    DOUBLE_RECTIFIED = "double_rectified"
    LINEAR = "linear"

    CHOICES = [
        (RATIO, "tau_r / softplus(tau_c)"),
        (DOUBLE_RECTIFIED, "softplus(tau_r) / softplus(tau_c)"),
        (LINEAR, "tau_r - alpha * tau_c"),
    ]

    VALUES = (RATIO, DOUBLE_RECTIFIED, LINEAR)


@dataclass(frozen=True)
class TauEstimate:
    tau_r: float
    tau_c: float
    objective: float
    rectifier_eps: float = 1e-6


@dataclass(frozen=True, eq=False)
class PropensityWeights:
    """Treated fraction e_hat and clipped per-sample propensities e_x."""

    e_hat: float
    e_x: np.ndarray

    @classmethod
    def from_propensity(cls, t, e_x, clip=(0.01, 0.99)):
        t = np.asarray(t)
        e_x = np.asarray(e_x, dtype=float)
        if e_x.shape != t.shape:
            raise ShapeMismatch(f"Propensity has shape {e_x.shape}, expected {t.shape}")
        cohort_indices(t)
        return cls(e_hat=float(np.mean(t == TREATED)), e_x=np.clip(e_x, *clip))

    @classmethod
    def constant(cls, t):
        e_hat = float(np.mean(np.asarray(t) == TREATED))
        return cls(e_hat=e_hat, e_x=np.full(len(t), e_hat))

    def subset(self, rows, t):
        """Weights for a mini-batch; e_hat is recomputed on the batch."""
        return PropensityWeights(e_hat=float(np.mean(np.asarray(t) == TREATED)), e_x=self.e_x[rows])


def treatment_coefficients(t, weights=None):
    treated = np.asarray(t) == TREATED
    if weights is None:
        return np.where(treated, 1.0, -1.0)
    return np.where(
        treated,
        weights.e_hat / weights.e_x,
        -(1.0 - weights.e_hat) / (1.0 - weights.e_x),
    )


def tau_hat(probs, y, t):
    """sum over treated of p*y minus sum over control of p*y."""
    return float(treatment_coefficients(t) @ (probs.p * np.asarray(y, dtype=float)))


def tau_hat_propensity(probs, y, t, w):
    return float(treatment_coefficients(t, w) @ (probs.p * np.asarray(y, dtype=float)))


def softplus(z):
    return np.logaddexp(0.0, z)


def combine(tau_r, tau_c, form, alpha, rectifier_eps):
    """Objective value and its partial derivatives in tau_r and tau_c."""
    if form == ObjectiveForm.LINEAR:
        return tau_r - alpha * tau_c, 1.0, -alpha
    denominator = softplus(tau_c) + rectifier_eps
    d_denominator = expit(tau_c)
    if form == ObjectiveForm.RATIO:
        numerator, d_numerator = tau_r, 1.0
    elif form == ObjectiveForm.DOUBLE_RECTIFIED:
        numerator, d_numerator = softplus(tau_r), expit(tau_r)
    else:
        raise ConfigError(f"Unknown objective form '{form}'")
    value = numerator / denominator
    return value, d_numerator / denominator, -numerator * d_denominator / denominator ** 2


class DirectRankingObjective(ScoreObjective):
    """DRM objective over one batch of users."""

    def __init__(
        self,
        X,
        t,
        y_r,
        y_c,
        form=ObjectiveForm.RATIO,
        alpha=1.5,
        rectifier_eps=1e-6,
        weights=None,
        reg=0.0,
    ):
        super().__init__(X, reg)
        if form not in ObjectiveForm.VALUES:
            raise ConfigError(f"Unknown objective form '{form}'")
        self.t = np.asarray(t)
        cohort_indices(self.t)
        coef = treatment_coefficients(self.t, weights)
        self.a_r = coef * np.asarray(y_r, dtype=float)
        self.a_c = coef * np.asarray(y_c, dtype=float)
        self.form = form
        self.alpha = float(alpha)
        self.rectifier_eps = float(rectifier_eps)

    @classmethod
    def for_dataset(cls, ds, X=None, **kwargs):
        return cls(ds.X if X is None else X, ds.t, ds.y_r, ds.y_c, **kwargs)

    def transform(self, scores):
        """Probabilities entering the tau sums, a pullback onto the scores, and diagnostics."""
        p = cohort_softmax(scores, self.t)
        return p, (lambda grad_p: softmax_vjp(p, self.t, grad_p)), {}

    def tau(self, p):
        return float(self.a_r @ p), float(self.a_c @ p)

    def evaluate_scores(self, scores):
        p, pullback, info = self.transform(scores)
        tau_r, tau_c = self.tau(p)
        value, d_r, d_c = combine(tau_r, tau_c, self.form, self.alpha, self.rectifier_eps)
        if not np.isfinite(value):
            raise NonFinite(f"Objective is {value} at tau_r={tau_r}, tau_c={tau_c}")
        dscores = pullback(d_r * self.a_r + d_c * self.a_c)
        return float(value), dscores, {'tau_r': tau_r, 'tau_c': tau_c, **info}


def drm_objective(params, ds, reg=0.0, rectifier_eps=None, form=ObjectiveForm.RATIO):
    """tau_r / (softplus(tau_c) + eps) - reg * ||theta||^2 on the raw features of `ds`."""
    if rectifier_eps is None:
        rectifier_eps = get_defaults()['RECTIFIER_EPS']
    objective = DirectRankingObjective.for_dataset(ds, form=form, rectifier_eps=rectifier_eps, reg=reg)
    return check_finite(objective.evaluate(params)).value


def drm_propensity_objective(params, ds, w, mode="linear", alpha=None, reg=0.0, rectifier_eps=None):
    """Propensity-weighted DRM objective; `mode` is "linear" or "ratio"."""
    defaults = get_defaults()
    alpha = defaults['ALPHA_DRM'] if alpha is None else alpha
    rectifier_eps = defaults['RECTIFIER_EPS'] if rectifier_eps is None else rectifier_eps
    modes = {'linear': ObjectiveForm.LINEAR, 'ratio': ObjectiveForm.RATIO}
    if mode not in modes:
        raise ConfigError(f"Propensity objective mode must be 'linear' or 'ratio', got '{mode}'")
    objective = DirectRankingObjective.for_dataset(
        ds, form=modes[mode], alpha=alpha, rectifier_eps=rectifier_eps, weights=w, reg=reg
    )
    return check_finite(objective.evaluate(params)).value
