import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from core.exceptions import ConfigError, ShapeMismatch, SingularSystem


@dataclass(frozen=True, eq=False)
class RidgeModel:
    weights: np.ndarray
    intercept: float
    reg: float = 0.0

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.weights.size:
            raise ShapeMismatch(f"Ridge model expects {self.weights.size} features, got shape {X.shape}")
        return X @ self.weights + self.intercept

    def to_document(self):
        return {'weights': self.weights.tolist(), 'intercept': self.intercept, 'reg': self.reg}

    @classmethod
    def from_document(cls, doc):
        return cls(
            weights=np.asarray(doc['weights'], dtype=float),
            intercept=float(doc['intercept']),
            reg=float(doc.get('reg', 0.0)),
        )


def fit_ridge(X, y, reg=0.0, sample_weight=None):
    """Minimize sum_i w_i (y_i - x_i.w - b)^2 + reg * ||w||^2; the intercept is not penalized.

    Solved through the centered normal equations.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if y.shape != (n,):
        raise ShapeMismatch(f"Target has shape {y.shape}, expected ({n},)")
    if reg < 0:
        raise ConfigError(f"Ridge penalty must be >= 0, got {reg}")
    weight = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    if weight.shape != (n,) or (weight < 0).any() or weight.sum() <= 0:
        raise ConfigError("Sample weights must be non-negative with a positive sum")
    if reg == 0 and np.count_nonzero(weight) < d + 1:
        raise SingularSystem(f"Unpenalized fit of {d} features needs at least {d + 1} weighted rows")

    total = weight.sum()
    x_mean = weight @ X / total
    y_mean = float(weight @ y / total)
    Xc = X - x_mean
    gram = Xc.T @ (weight[:, None] * Xc) + reg * np.eye(d)
    moment = Xc.T @ (weight * (y - y_mean))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", linalg.LinAlgWarning)
            coef = linalg.solve(gram, moment, assume_a="sym")
    except (linalg.LinAlgError, linalg.LinAlgWarning) as exc:
        raise SingularSystem(f"Normal equations are singular: {exc}")
    if not np.isfinite(coef).all():
        raise SingularSystem("Normal equations produced non-finite coefficients")
    return RidgeModel(weights=coef, intercept=y_mean - float(x_mean @ coef), reg=float(reg))
