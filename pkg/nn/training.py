import logging
from dataclasses import dataclass, fields

import numpy as np
import pandas as pd

from core.exceptions import ConfigError, EmptyCohort
from core.seeding import make_rng
from uplift_rank.conf import get_defaults
from .objectives import check_finite
from .optim import adam_step, init_adam
from .scaling import FeatureScaler
from .scorer import forward

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingConfig:
    iterations: int = 1500
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    hidden_layers: tuple = ()
    reg: float = 0.0
    batch_size: int = None
    standardize: bool = True
    log_every: int = 100

    def __post_init__(self):
        if self.iterations < 0:
            raise ConfigError(f"iterations must be >= 0, got {self.iterations}")
        if self.lr <= 0:
            raise ConfigError(f"Adam learning rate must be positive, got {self.lr}")
        if self.reg < 0:
            raise ConfigError(f"L2 weight must be >= 0, got {self.reg}")
        if self.batch_size is not None and self.batch_size < 2:
            raise ConfigError(f"batch_size must be >= 2, got {self.batch_size}")
        if any(int(width) < 1 for width in self.hidden_layers):
            raise ConfigError(f"Hidden layer widths must be >= 1, got {list(self.hidden_layers)}")
        object.__setattr__(self, 'hidden_layers', tuple(int(w) for w in self.hidden_layers))

    @classmethod
    def from_defaults(cls, **overrides):
        defaults = get_defaults()
        values = dict(
            iterations=defaults['ITERATIONS'],
            hidden_layers=tuple(defaults['HIDDEN_LAYERS']),
            reg=defaults['L2_REG'],
            log_every=defaults['LOG_EVERY'],
            **defaults['ADAM'],
        )
        known = {f.name for f in fields(cls)}
        values.update({k: v for k, v in overrides.items() if k in known and v is not None})
        return cls(**values)

    def layer_sizes(self, d):
        return [d, *self.hidden_layers, 1]

    def to_document(self):
        doc = {f.name: getattr(self, f.name) for f in fields(self)}
        doc['hidden_layers'] = list(self.hidden_layers)
        return doc


@dataclass(frozen=True, eq=False)
class TrainedScorer:
    """Scorer parameters plus the feature scaling they were trained under.

    `config` holds the training settings that checkpoints record next to the
    parameters.
    """

    params: object
    scaler: FeatureScaler
    trace: pd.DataFrame = None
    config: dict = None

    def score(self, X):
        return forward(self.params, self.scaler.transform(X))


def fit_scaler(X, cfg):
    X = np.asarray(X, dtype=float)
    return FeatureScaler.fit(X) if cfg.standardize else FeatureScaler.identity(X.shape[1])


def _batches(n, batch_size, rng):
    """Endless stream of row-index batches; None means the full batch."""
    if batch_size is None or batch_size >= n:
        while True:
            yield None
    while True:
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            yield order[start:start + batch_size]


def run_adam(params, build_objective, n, cfg, seed):
    """Maximize the objective built by `build_objective(rows, step)` with Adam.

    `rows` is an index array for a mini-batch or None for the full batch; the
    builder returns None when a batch cannot be used (a missing cohort) and
    that batch is skipped. The returned trace has one row per step plus a
    final full-batch row.
    """
    state = init_adam(params, lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
    batches = _batches(n, cfg.batch_size, make_rng(seed, "minibatch"))
    per_epoch = 1 if cfg.batch_size is None else -(-n // cfg.batch_size)
    rows, skipped, step = [], 0, 0
    while step < cfg.iterations:
        objective = build_objective(next(batches), step)
        if objective is None:
            skipped += 1
            if skipped > 10 * per_epoch:
                raise EmptyCohort("No mini-batch contains both cohorts; increase batch_size")
            continue
        skipped = 0
        evaluation = check_finite(objective.evaluate(params))
        rows.append({'iteration': step, 'objective': evaluation.value, **evaluation.info})
        state, params = adam_step(state, params, evaluation.grad)
        step += 1
        if cfg.log_every and step % cfg.log_every == 0:
            logger.debug(f"step {step}/{cfg.iterations} objective={evaluation.value:.6g}")

    final = check_finite(build_objective(None, step).evaluate(params))
    rows.append({'iteration': step, 'objective': final.value, **final.info})
    trace = pd.DataFrame(rows)
    logger.info(
        f"Adam finished {cfg.iterations} steps: objective {trace['objective'].iloc[0]:.6g} "
        f"-> {final.value:.6g}"
    )
    return params, trace
