import numpy as np

from .exceptions import EmptyCohort

TREATED = 1
CONTROL = 0


def split_cohorts(ds):
    """Partition row indices 0..n-1 by treatment indicator.

    Returns (treated_indices, control_indices), each in ascending order.
    """
    return cohort_indices(ds.t)


def cohort_indices(t):
    t = np.asarray(t)
    treated = np.flatnonzero(t == TREATED)
    control = np.flatnonzero(t == CONTROL)
    if treated.size == 0:
        raise EmptyCohort("No treated samples")
    if control.size == 0:
        raise EmptyCohort("No control samples")
    return treated, control


def cohort_means(y, t):
    """Treated-minus-control difference of means (the plain ATE estimate)."""
    treated, control = cohort_indices(t)
    y = np.asarray(y, dtype=float)
    return float(y[treated].mean() - y[control].mean())
