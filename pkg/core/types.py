from dataclasses import dataclass, field

import numpy as np

from .exceptions import EmptyCohort, ParseError, ShapeMismatch


class Strategy:
    """Experiment label attached to every logged user."""

    EXPLORE = "explore"
    EXPLOIT = "exploit"

    CHOICES = [
        (EXPLORE, "Explore"),
        (EXPLOIT, "Exploit"),
    ]

    VALUES = (EXPLORE, EXPLOIT)


@dataclass(frozen=True)
class UserSample:
    id: str
    x: tuple
    t: int
    y_r: float
    y_c: float
    strategy: str = Strategy.EXPLORE


@dataclass(frozen=True)
class DatasetMeta:
    name: str = "dataset"
    provenance: str = ""


def _frozen(array, dtype):
    array = np.array(array, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Dataset:
    """Columnar, read-only table of users.

    Row order is stable: scores, probabilities and other per-index arrays
    computed from a dataset align with it.
    """

    ids: np.ndarray
    X: np.ndarray
    t: np.ndarray
    y_r: np.ndarray
    y_c: np.ndarray
    strategy: np.ndarray = None
    meta: DatasetMeta = field(default_factory=DatasetMeta)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise ShapeMismatch(f"Feature matrix must be 2-D, got shape {X.shape}")
        n = X.shape[0]
        columns = {
            'ids': _frozen(self.ids, object),
            't': _frozen(self.t, np.int8),
            'y_r': _frozen(self.y_r, float),
            'y_c': _frozen(self.y_c, float),
        }
        strategy = self.strategy
        if strategy is None:
            strategy = np.full(n, Strategy.EXPLORE, dtype=object)
        columns['strategy'] = _frozen(strategy, object)
        for name, column in columns.items():
            if column.shape != (n,):
                raise ShapeMismatch(f"Column '{name}' has length {len(column)}, expected {n}")

        raw_t = np.asarray(self.t)
        if not np.isin(raw_t, (0, 1)).all():
            raise ParseError("treatment indicator must be exactly 0 or 1")
        if not (np.isfinite(columns['y_r']).all() and np.isfinite(columns['y_c']).all()):
            raise ParseError("outcomes must be finite reals")
        if not np.isfinite(X).all():
            raise ParseError("features must be finite reals")
        if not set(columns['strategy']) <= set(Strategy.VALUES):
            raise ParseError(f"strategy must be one of {Strategy.VALUES}")
        if not (columns['t'] == 1).any():
            raise EmptyCohort(f"Dataset '{self.meta.name}' has no treated samples")
        if not (columns['t'] == 0).any():
            raise EmptyCohort(f"Dataset '{self.meta.name}' has no control samples")

        object.__setattr__(self, 'X', _frozen(X, float))
        for name, column in columns.items():
            object.__setattr__(self, name, column)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    def __len__(self):
        return self.n

    @property
    def samples(self):
        return [
            UserSample(
                id=str(self.ids[i]),
                x=tuple(self.X[i].tolist()),
                t=int(self.t[i]),
                y_r=float(self.y_r[i]),
                y_c=float(self.y_c[i]),
                strategy=str(self.strategy[i]),
            )
            for i in range(self.n)
        ]

    @classmethod
    def from_samples(cls, samples, meta=None):
        samples = list(samples)
        if not samples:
            raise EmptyCohort("Cannot build a dataset from zero samples")
        widths = {len(s.x) for s in samples}
        if len(widths) != 1:
            raise ShapeMismatch(f"Feature vectors have mixed lengths {sorted(widths)}")
        return cls(
            ids=[s.id for s in samples],
            X=np.array([s.x for s in samples], dtype=float),
            t=[s.t for s in samples],
            y_r=[s.y_r for s in samples],
            y_c=[s.y_c for s in samples],
            strategy=[s.strategy for s in samples],
            meta=meta or DatasetMeta(),
        )

    def subset(self, indices, name=None):
        """Rows at `indices`, in the given order. Raises EmptyCohort if a cohort is lost."""
        indices = np.asarray(indices, dtype=int)
        meta = DatasetMeta(name=name or self.meta.name, provenance=self.meta.provenance)
        return Dataset(
            ids=self.ids[indices],
            X=self.X[indices],
            t=self.t[indices],
            y_r=self.y_r[indices],
            y_c=self.y_c[indices],
            strategy=self.strategy[indices],
            meta=meta,
        )
