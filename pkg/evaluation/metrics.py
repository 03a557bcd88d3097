from core.cohorts import cohort_means
from core.exceptions import Undefined

ZERO_TOLERANCE = 1e-12


def subset_ate(ds):
    """(ATE^r, ATE^c) as treated-minus-control outcome means."""
    return cohort_means(ds.y_r, ds.t), cohort_means(ds.y_c, ds.t)


def slope_R(ds_subset):
    """Incremental value per unit of incremental cost in a selected group."""
    ate_r, ate_c = subset_ate(ds_subset)
    if abs(ate_c) < ZERO_TOLERANCE:
        raise Undefined(f"ATE^c is zero for '{ds_subset.meta.name}'; R is undefined")
    return ate_r / ate_c


def efficiency_gain(R_exploit, R_explore):
    if abs(R_explore) < ZERO_TOLERANCE:
        raise Undefined("Explore benchmark R is zero; efficiency gain is undefined")
    return (R_exploit - R_explore) / R_explore
