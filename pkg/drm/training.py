import logging
from dataclasses import dataclass, fields

from core.cohorts import CONTROL, TREATED
from core.exceptions import ConfigError
from nn.scorer import init_params
from nn.training import TrainedScorer, fit_scaler, run_adam
from uplift_rank.conf import get_defaults
from .objectives import DirectRankingObjective, ObjectiveForm, TauEstimate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RankingObjectiveConfig:
    form: str = ObjectiveForm.RATIO
    alpha: float = 1.5
    rectifier_eps: float = 1e-6

    def __post_init__(self):
        if self.form not in ObjectiveForm.VALUES:
            raise ConfigError(f"Unknown objective form '{self.form}'; choose from {list(ObjectiveForm.VALUES)}")
        if self.rectifier_eps <= 0:
            raise ConfigError("rectifier_eps must be positive")

    @classmethod
    def from_defaults(cls, **overrides):
        defaults = get_defaults()
        values = {
            'form': defaults['RATIO_FORM'],
            'alpha': defaults['ALPHA_DRM'],
            'rectifier_eps': defaults['RECTIFIER_EPS'],
        }
        known = {f.name for f in fields(cls)}
        values.update({k: v for k, v in overrides.items() if k in known and v is not None})
        return cls(**values)

    def kwargs(self):
        return {'form': self.form, 'alpha': self.alpha, 'rectifier_eps': self.rectifier_eps}


def has_both_cohorts(t):
    return bool((t == TREATED).any() and (t == CONTROL).any())


def batch_view(ds, X, rows, weights=None):
    """(X, t, y_r, y_c, weights) for `rows`, or the full training set when rows is None."""
    if rows is None:
        return X, ds.t, ds.y_r, ds.y_c, weights
    t = ds.t[rows]
    batch_weights = weights.subset(rows, t) if weights is not None and has_both_cohorts(t) else None
    return X[rows], t, ds.y_r[rows], ds.y_c[rows], batch_weights


def train_drm(ds, cfg, seed, objective=None, weights=None):
    """Train a DRM scorer with Adam ascent.

    `weights` (PropensityWeights aligned with `ds`) selects the
    inverse-propensity variant. With 0 iterations the initial parameters are
    returned unchanged.
    """
    objective = objective or RankingObjectiveConfig.from_defaults()
    scaler = fit_scaler(ds.X, cfg)
    X = scaler.transform(ds.X)
    params = init_params(cfg.layer_sizes(ds.d), seed)

    def build(rows, step):
        X_b, t, y_r, y_c, w = batch_view(ds, X, rows, weights)
        if not has_both_cohorts(t):
            return None
        return DirectRankingObjective(X_b, t, y_r, y_c, weights=w, reg=cfg.reg, **objective.kwargs())

    variant = "propensity-weighted " if weights is not None else ""
    logger.info(f"Training {variant}DRM ({objective.form}) on {ds.n} users, layers {cfg.layer_sizes(ds.d)}")
    params, trace = run_adam(params, build, ds.n, cfg, seed)
    last = trace.iloc[-1]
    final = TauEstimate(
        tau_r=float(last["tau_r"]),
        tau_c=float(last["tau_c"]),
        objective=float(last["objective"]),
        rectifier_eps=objective.rectifier_eps,
    )
    logger.info(
        f"DRM training done: tau_r={final.tau_r:.6g} tau_c={final.tau_c:.6g} objective={final.objective:.6g}"
    )
    config = {
        'training': cfg.to_document(),
        'objective': objective.kwargs(),
        'propensity_weighted': weights is not None,
    }
    return TrainedScorer(params=params, scaler=scaler, trace=trace, config=config)
