"""Duality R-learner: rank by tau_r - lambda * tau_c.

lambda prices cost against value. It is either chosen on a validation set by
AUCC over a grid, or found by dual ascent on the budget-constrained selection

    max sum_i z_i tau_r_i   s.t.   sum_i z_i tau_c_i <= B,   0 <= z_i <= 1.
"""

import logging
from dataclasses import dataclass

import numpy as np

from core.exceptions import ConfigError, ShapeMismatch, Undefined
from evaluation.curves import aucc, cost_curve
from uplift_rank.conf import get_defaults
from .learner import Outcome, rlearner_fit

logger = logging.getLogger(__name__)


class LambdaStrategy:
    GRID = "grid"
    DUAL = "dual"

    VALUES = (GRID, DUAL)


@dataclass(frozen=True, eq=False)
class DualitySolution:
    z: np.ndarray
    lam: float
    s: np.ndarray
    spend: float
    converged: bool
    iterations: int = 0


def _selection(tau_r, tau_c, lam):
    s = tau_r - lam * tau_c
    z = (s >= 0).astype(float)
    return s, z, float(tau_c @ z)


def duality_solve(tau_r, tau_c, B, alpha=None, max_iters=None, tol=None):
    """Dual ascent on lambda for the relaxed budgeted selection.

    lambda rises while the selection overspends and falls otherwise; the step
    halves whenever the sign of the budget gap flips. The solution is taken
    at the smallest feasible lambda visited.
    """
    cfg = get_defaults()['DUALITY']
    alpha = cfg['alpha'] if alpha is None else alpha
    max_iters = cfg['max_iters'] if max_iters is None else max_iters
    tol = cfg['tol'] if tol is None else tol
    tau_r = np.asarray(tau_r, dtype=float)
    tau_c = np.asarray(tau_c, dtype=float)
    if tau_r.shape != tau_c.shape:
        raise ShapeMismatch(f"tau_r {tau_r.shape} and tau_c {tau_c.shape} differ")
    if B <= 0:
        raise ConfigError(f"Budget must be positive, got {B}")
    if alpha <= 0:
        raise ConfigError(f"Dual step size must be positive, got {alpha}")

    lam, step, last_sign = 0.0, float(alpha), 0.0
    best_feasible = None
    converged, iterations = False, 0
    for iterations in range(1, max_iters + 1):
        _, _, spend = _selection(tau_r, tau_c, lam)
        gap = B - spend
        if gap >= 0 and (best_feasible is None or lam < best_feasible):
            best_feasible = lam
        sign = np.sign(gap)
        if last_sign and sign and sign != last_sign:
            step /= 2.0
        last_sign = sign or last_sign
        updated = max(0.0, lam - step * gap)
        delta, lam = abs(updated - lam), updated
        if delta < tol:
            converged = True
            break

    if not converged:
        logger.warning(f"Duality solver stopped after {max_iters} iterations without converging (lambda={lam:.6g})")
    if best_feasible is not None:
        lam = best_feasible
    s, z, spend = _selection(tau_r, tau_c, lam)
    return DualitySolution(z=z, lam=lam, s=s, spend=spend, converged=converged, iterations=iterations)


def duality_score(tau_r_model, tau_c_model, lam, X):
    if lam < 0:
        raise ConfigError(f"lambda must be >= 0, got {lam}")
    return tau_r_model.predict(X) - lam * tau_c_model.predict(X)


@dataclass(frozen=True, eq=False)
class DualityModel:
    tau_r_model: object
    tau_c_model: object
    lam: float
    strategy: str = LambdaStrategy.GRID
    selection: dict = None

    def score(self, X):
        return duality_score(self.tau_r_model, self.tau_c_model, self.lam, X)


def select_lambda(tau_r_model, tau_c_model, val_ds, grid=None):
    """Grid lambda with the best validation AUCC; ties go to the smallest lambda.

    Returns (lambda, {lambda: aucc}). Grid values whose AUCC is undefined are
    skipped.
    """
    grid = sorted(get_defaults()['LAMBDA_GRID'] if grid is None else grid)
    results = {}
    for lam in grid:
        try:
            results[lam] = aucc(cost_curve(duality_score(tau_r_model, tau_c_model, lam, val_ds.X), val_ds))
        except Undefined as exc:
            logger.warning(f"lambda={lam:g} skipped: {exc}")
    if not results:
        raise Undefined("No lambda in the grid gives a defined validation AUCC")
    best = max(results, key=lambda lam: (results[lam], -lam))
    logger.info(f"Selected lambda={best:g} with validation AUCC {results[best]:.4f}")
    return best, results


def dual_lambda(tau_r_model, tau_c_model, X, budget_fraction=None):
    """lambda from dual ascent on training predictions with B = fraction * sum(max(tau_c, 0))."""
    cfg = get_defaults()['DUALITY']
    budget_fraction = cfg['budget_fraction'] if budget_fraction is None else budget_fraction
    tau_r = tau_r_model.predict(X)
    tau_c = tau_c_model.predict(X)
    budget = budget_fraction * float(np.maximum(tau_c, 0.0).sum())
    if budget <= 0:
        raise Undefined("Predicted cost effects are all non-positive; no budget to price")
    return duality_solve(tau_r, tau_c, budget)


def fit_duality(train, prop, val=None, strategy=LambdaStrategy.GRID, reg=0.0, grid=None, budget_fraction=None):
    """Fit tau_r and tau_c R-learners on `train` and price cost with lambda."""
    if strategy not in LambdaStrategy.VALUES:
        raise ConfigError(f"Unknown lambda strategy '{strategy}'")
    tau_r_model = rlearner_fit(train, Outcome.VALUE, prop, reg=reg)
    tau_c_model = rlearner_fit(train, Outcome.COST, prop, reg=reg)
    if strategy == LambdaStrategy.GRID:
        if val is None:
            raise ConfigError("The grid lambda strategy needs a validation set")
        lam, results = select_lambda(tau_r_model, tau_c_model, val, grid)
        selection = {'validation_aucc': {f"{k:g}": v for k, v in results.items()}}
    else:
        solution = dual_lambda(tau_r_model, tau_c_model, train.X, budget_fraction)
        lam = solution.lam
        selection = {'converged': solution.converged, 'spend': solution.spend, 'iterations': solution.iterations}
    return DualityModel(tau_r_model, tau_c_model, lam, strategy=strategy, selection=selection)
