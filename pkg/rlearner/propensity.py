import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from core.cohorts import TREATED, cohort_indices
from core.exceptions import ConfigError, ShapeMismatch
from nn.scaling import FeatureScaler
from uplift_rank.conf import get_defaults

logger = logging.getLogger(__name__)


class PropensityKind:
    CONSTANT = "constant"
    LOGISTIC = "logistic"

    CHOICES = [
        (CONSTANT, "Treated fraction"),
        (LOGISTIC, "Logistic regression"),
    ]

    VALUES = (CONSTANT, LOGISTIC)


@dataclass(frozen=True, eq=False)
class PropensityModel:
    """P(T = 1 | x), clipped away from 0 and 1."""

    kind: str
    e_hat: float
    weights: np.ndarray = None
    intercept: float = 0.0
    scaler: FeatureScaler = None
    clip: tuple = (0.01, 0.99)

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        if self.kind == PropensityKind.CONSTANT:
            return np.full(X.shape[0], float(np.clip(self.e_hat, *self.clip)))
        if X.ndim != 2 or X.shape[1] != self.weights.size:
            raise ShapeMismatch(f"Propensity model expects {self.weights.size} features, got {X.shape}")
        logits = self.scaler.transform(X) @ self.weights + self.intercept
        return np.clip(expit(logits), *self.clip)

    def to_document(self):
        doc = {'kind': self.kind, 'e_hat': self.e_hat, 'clip': list(self.clip)}
        if self.kind == PropensityKind.LOGISTIC:
            doc.update(
                weights=self.weights.tolist(),
                intercept=self.intercept,
                scaler=self.scaler.to_document(),
            )
        return doc

    @classmethod
    def from_document(cls, doc):
        if doc['kind'] == PropensityKind.CONSTANT:
            return cls(kind=doc['kind'], e_hat=float(doc['e_hat']), clip=tuple(doc['clip']))
        return cls(
            kind=doc['kind'],
            e_hat=float(doc['e_hat']),
            weights=np.asarray(doc['weights'], dtype=float),
            intercept=float(doc['intercept']),
            scaler=FeatureScaler.from_document(doc['scaler']),
            clip=tuple(doc['clip']),
        )


def fit_propensity(X, t, kind=PropensityKind.LOGISTIC, iterations=None, lr=None):
    """Constant treated fraction, or logistic regression by gradient ascent.

    The logistic fit runs a fixed number of full-batch steps on the mean
    log-likelihood over internally standardized features.
    """
    defaults = get_defaults()
    iterations = defaults['LOGISTIC']['iterations'] if iterations is None else iterations
    lr = defaults['LOGISTIC']['lr'] if lr is None else lr
    clip = tuple(defaults['PROPENSITY_CLIP'])
    t = np.asarray(t)
    cohort_indices(t)
    e_hat = float(np.mean(t == TREATED))
    if kind == PropensityKind.CONSTANT:
        return PropensityModel(kind=kind, e_hat=e_hat, clip=clip)
    if kind != PropensityKind.LOGISTIC:
        raise ConfigError(f"Unknown propensity kind '{kind}'")

    scaler = FeatureScaler.fit(X)
    Xs = scaler.transform(X)
    target = (t == TREATED).astype(float)
    weights = np.zeros(Xs.shape[1])
    intercept = float(np.log(e_hat / (1.0 - e_hat)))
    for _ in range(iterations):
        residual = target - expit(Xs @ weights + intercept)
        weights = weights + lr * (Xs.T @ residual) / Xs.shape[0]
        intercept = intercept + lr * float(residual.mean())
    logger.debug(f"Logistic propensity fitted: intercept={intercept:.4g} |w|={np.linalg.norm(weights):.4g}")
    return PropensityModel(kind=kind, e_hat=e_hat, weights=weights, intercept=intercept, scaler=scaler, clip=clip)
