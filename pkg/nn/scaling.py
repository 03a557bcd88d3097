from dataclasses import dataclass

import numpy as np

from core.exceptions import ShapeMismatch


@dataclass(frozen=True, eq=False)
class FeatureScaler:
    """Per-column standardization fitted on training features.

    Constant columns keep scale 1 so they map to 0.
    """

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=float)
        scale = X.std(axis=0)
        scale[scale < 1e-12] = 1.0
        return cls(mean=X.mean(axis=0), scale=scale)

    @classmethod
    def identity(cls, d):
        return cls(mean=np.zeros(d), scale=np.ones(d))

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.mean.size:
            raise ShapeMismatch(f"Scaler fitted on {self.mean.size} features, got shape {X.shape}")
        return (X - self.mean) / self.scale

    def to_document(self):
        return {'mean': self.mean.tolist(), 'scale': self.scale.tolist()}

    @classmethod
    def from_document(cls, doc):
        return cls(mean=np.asarray(doc['mean'], dtype=float), scale=np.asarray(doc['scale'], dtype=float))
