"""Cost curves: cumulative incremental cost against cumulative incremental value.

For each fraction q of the users ranked by score, the point is
(n_treated * ATE^c, n_treated * ATE^r) computed on the top-q subset.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from core.cohorts import TREATED, cohort_means
from core.exceptions import ConfigError, EmptyCohort, Undefined
from uplift_rank.conf import get_defaults
from .ranking import check_scores, rank_order, top_count

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CostCurve:
    grid: np.ndarray
    cost: np.ndarray
    value: np.ndarray
    n_treated: np.ndarray = None

    @property
    def points(self):
        return list(zip(self.cost.tolist(), self.value.tolist()))

    @property
    def aucc(self):
        return aucc(self)

    def to_frame(self):
        frame = pd.DataFrame({'q': self.grid, 'cum_cost': self.cost, 'cum_value': self.value})
        if self.n_treated is not None:
            frame['n_treated'] = self.n_treated
        return frame


def default_grid(step=None):
    step = step or get_defaults()['CURVE_GRID_STEP']
    return np.arange(step, 101, step) / 100.0


def check_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ConfigError("Curve grid must be a non-empty list of fractions")
    if (grid <= 0).any() or (np.diff(grid) <= 0).any() or abs(grid[-1] - 1.0) > 1e-12:
        raise ConfigError("Curve grid must increase strictly within (0, 1] and end at 1.0")
    return grid


def cost_curve(scores, ds, grid=None):
    """Cost curve of `scores` on `ds`; fractions whose subset lacks a cohort are skipped."""
    scores = check_scores(scores, ds)
    grid = check_grid(default_grid() if grid is None else grid)
    order = rank_order(scores)
    kept, cost, value, treated_counts = [], [], [], []
    for q in grid:
        rows = order[:top_count(ds.n, q)]
        t = ds.t[rows]
        try:
            ate_r = cohort_means(ds.y_r[rows], t)
            ate_c = cohort_means(ds.y_c[rows], t)
        except EmptyCohort:
            logger.warning(f"Skipping cost-curve point q={q:g}: top {rows.size} users lack a cohort")
            continue
        n_treated = int(np.sum(t == TREATED))
        kept.append(q)
        cost.append(n_treated * ate_c)
        value.append(n_treated * ate_r)
        treated_counts.append(n_treated)
    return CostCurve(
        grid=np.array(kept),
        cost=np.array(cost),
        value=np.array(value),
        n_treated=np.array(treated_counts),
    )


def aucc(curve):
    """Area under the cost curve over the rectangle spanned by its q=1 endpoint.

    The curve starts at the origin; points outside the rectangle are clamped
    onto it. A random ranking scores 0.5.
    """
    if len(curve.cost) < 2:
        raise Undefined(f"AUCC needs at least 2 curve points, got {len(curve.cost)}")
    max_cost, max_value = float(curve.cost[-1]), float(curve.value[-1])
    if max_cost <= 0 or max_value <= 0:
        raise Undefined(
            f"AUCC needs positive total incremental cost and value, got ({max_cost:.6g}, {max_value:.6g})"
        )
    x = np.concatenate([[0.0], np.clip(curve.cost, 0.0, max_cost)])
    y = np.concatenate([[0.0], np.clip(curve.value, 0.0, max_value)])
    return float(np.trapezoid(y, x) / (max_cost * max_value))


def value_at_cost(curve, fraction):
    """Cumulative incremental value when the curve first reaches `fraction` of the total cost."""
    if not 0.0 <= fraction <= 1.0:
        raise ConfigError(f"Cost fraction must be in [0, 1], got {fraction}")
    total = float(curve.cost[-1])
    if total <= 0:
        raise Undefined("Total incremental cost must be positive")
    target = fraction * total
    x = np.concatenate([[0.0], curve.cost])
    y = np.concatenate([[0.0], curve.value])
    for i in range(1, x.size):
        if x[i] >= target:
            span = x[i] - x[i - 1]
            share = 1.0 if span <= 0 else (target - x[i - 1]) / span
            return float(y[i - 1] + min(max(share, 0.0), 1.0) * (y[i] - y[i - 1]))
    return float(y[-1])


def write_curve_csv(curve, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    curve.to_frame().to_csv(path, index=False, float_format="%.12g", lineterminator="\n")
    return path
