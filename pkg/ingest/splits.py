import math
from dataclasses import dataclass

from core.exceptions import ConfigError
from core.seeding import make_rng


@dataclass(frozen=True)
class SplitRatios:
    train: float = 0.6
    val: float = 0.2
    test: float = 0.2

    def __post_init__(self):
        for name in ('train', 'val', 'test'):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigError(f"Split ratio '{name}' must be in (0, 1), got {value}")
        if abs(self.train + self.val + self.test - 1.0) > 1e-9:
            raise ConfigError("Split ratios must sum to 1")

    def to_document(self):
        return {'train': self.train, 'val': self.val, 'test': self.test}


def split_indices(n, ratios, seed):
    """Seeded permutation of 0..n-1 cut at floor(n*train) and floor(n*(train+val))."""
    order = make_rng(seed, "split").permutation(n)
    # guard against 0.6 * 10 landing a hair under 6
    first = math.floor(n * ratios.train + 1e-9)
    second = math.floor(n * (ratios.train + ratios.val) + 1e-9)
    return order[:first], order[first:second], order[second:]


def split_dataset(ds, ratios, seed):
    """Split into (train, val, test) datasets. EmptyCohort if a part loses a cohort."""
    if ds.n < 5:
        raise ConfigError(f"split_dataset needs at least 5 samples, got {ds.n}")
    parts = split_indices(ds.n, ratios, seed)
    return tuple(
        ds.subset(part, name=f"{ds.meta.name}/{label}")
        for part, label in zip(parts, ('train', 'val', 'test'))
    )
