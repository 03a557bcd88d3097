import logging

from core.exceptions import InvalidCost
from drm.training import RankingObjectiveConfig, batch_view, has_both_cohorts
from nn.scorer import init_params
from nn.training import TrainedScorer, fit_scaler, run_adam
from .constraints import AnnealSchedule, Constraint, ConstraintKind
from .objective import ConstrainedObjective
from .thresholds import budget_costs

logger = logging.getLogger(__name__)


def check_budget_costs(y_c):
    """A budget needs some positive spend; negative costs are clipped to zero."""
    negative = int((y_c < 0).sum())
    if not (budget_costs(y_c) > 0).any():
        raise InvalidCost(
            f"A budget constraint needs positive costs, but none of the {len(y_c)} y_c values is "
            "positive; use a percentage constraint for this data"
        )
    if negative:
        logger.warning(f"{negative} negative y_c values count as zero spend against the budget")


def train_constrained(ds, cfg, seed, constraint=None, schedule=None, objective=None, weights=None):
    """Adam ascent on the barrier objective with an annealed temperature.

    The threshold is recomputed for every batch; budgets are scaled to the
    batch's share of the users.
    """
    constraint = constraint or Constraint.percentage()
    if constraint.kind == ConstraintKind.BUDGET:
        check_budget_costs(ds.y_c)
    schedule = schedule or AnnealSchedule.from_defaults()
    objective = objective or RankingObjectiveConfig.from_defaults()
    scaler = fit_scaler(ds.X, cfg)
    X = scaler.transform(ds.X)
    params = init_params(cfg.layer_sizes(ds.d), seed)

    def build(rows, step):
        X_b, t, y_r, y_c, w = batch_view(ds, X, rows, weights)
        if not has_both_cohorts(t):
            return None
        return ConstrainedObjective(
            X_b,
            t,
            y_r,
            y_c,
            constraint.scaled(len(t) / ds.n),
            schedule.temperature(step),
            weights=w,
            reg=cfg.reg,
            **objective.kwargs(),
        )

    logger.info(
        f"Training constrained ranker ({constraint.kind}) on {ds.n} users, "
        f"T0={schedule.T0} dT={schedule.dT} every={schedule.every}"
    )
    params, trace = run_adam(params, build, ds.n, cfg, seed)
    config = {
        'training': cfg.to_document(),
        'objective': objective.kwargs(),
        'constraint': constraint.to_document(),
        'schedule': schedule.to_document(),
    }
    return TrainedScorer(params=params, scaler=scaler, trace=trace, config=config)
