"""Small seeded fixtures and numeric helpers shared by the app test suites."""

import numpy as np

from .seeding import make_rng
from .types import Dataset, DatasetMeta


def make_dataset(t, y_r=None, y_c=None, X=None, d=3, seed=0, name="fixture"):
    t = np.asarray(t, dtype=int)
    n = t.size
    rng = make_rng(seed, "fixture")
    if X is None:
        X = rng.standard_normal((n, d))
    if y_r is None:
        y_r = rng.standard_normal(n)
    if y_c is None:
        y_c = rng.standard_normal(n)
    return Dataset(
        ids=[f"u{i}" for i in range(n)],
        X=X,
        t=t,
        y_r=y_r,
        y_c=y_c,
        meta=DatasetMeta(name=name, provenance="test fixture"),
    )


def random_dataset(seed, n=32, d=4):
    """Random dataset with both cohorts guaranteed present."""
    rng = make_rng(seed, "random_dataset")
    t = rng.integers(0, 2, size=n)
    t[0], t[1] = 1, 0
    return make_dataset(
        t,
        y_r=rng.normal(1.0, 1.0, size=n),
        y_c=rng.normal(0.5, 0.5, size=n),
        X=rng.standard_normal((n, d)),
        seed=seed,
    )


def central_difference(f, theta, h=1e-5):
    """Central finite-difference gradient of scalar `f` at flat vector `theta`."""
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for j in range(theta.size):
        step = np.zeros_like(theta)
        step[j] = h
        grad[j] = (f(theta + step) - f(theta - step)) / (2.0 * h)
    return grad


def max_relative_error(analytic, numeric, floor=1e-6):
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale))
