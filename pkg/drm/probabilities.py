from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

from core.cohorts import CONTROL, TREATED, cohort_indices


@dataclass(frozen=True, eq=False)
class EffectivenessProbs:
    """Per-cohort softmax of the scores; each cohort's probabilities sum to 1."""

    p: np.ndarray
    t: np.ndarray

    def cohort_total(self, cohort):
        return float(self.p[self.t == cohort].sum())


def cohort_softmax(scores, t):
    scores = np.asarray(scores, dtype=float)
    p = np.empty_like(scores)
    for rows in cohort_indices(t):
        p[rows] = softmax(scores[rows])
    return p


def effectiveness_probs(scores, t):
    t = np.asarray(t)
    return EffectivenessProbs(p=cohort_softmax(scores, t), t=t)


def softmax_vjp(p, t, grad_p):
    """Pull a gradient with respect to p back onto the scores, cohort by cohort."""
    out = np.empty_like(p)
    for cohort in (TREATED, CONTROL):
        rows = t == cohort
        out[rows] = p[rows] * (grad_p[rows] - p[rows] @ grad_p[rows])
    return out
