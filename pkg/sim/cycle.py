"""Explore/exploit campaign cycles on a synthetic population.

Each cycle samples an explore group uniformly and randomizes its treatment.
The remaining users are split evenly across the exploit arms; every arm
targets its own top users by model score and randomizes treatment within
that selection. Outcomes come from the population's outcome model.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from barrier.constraints import Constraint, ConstraintKind
from core.exceptions import ConfigError
from core.seeding import make_rng
from core.types import Dataset, DatasetMeta, Strategy
from drm.training import train_drm
from evaluation.metrics import efficiency_gain, slope_R
from evaluation.ranking import rank_order, top_count
from ingest.csv_io import to_frame
from ingest.synthetic import OutcomeModel, draw_features

logger = logging.getLogger(__name__)

EXPLORE_ARM = Strategy.EXPLORE


@dataclass(frozen=True)
class CycleConfig:
    population_size: int = 10000
    explore_fraction: float = 0.2
    treat_prob_explore: float = 0.5
    exploit_cutoff: Constraint = field(default_factory=Constraint.percentage)
    exploit_treat_prob: float = 0.5
    seed: int = 7

    def __post_init__(self):
        if self.population_size < 10:
            raise ConfigError(f"population_size must be >= 10, got {self.population_size}")
        for name in ('explore_fraction', 'treat_prob_explore', 'exploit_treat_prob'):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigError(f"{name} must be in (0, 1), got {value}")

    def to_document(self):
        return {
            'population_size': self.population_size,
            'explore_fraction': self.explore_fraction,
            'treat_prob_explore': self.treat_prob_explore,
            'exploit_cutoff': self.exploit_cutoff.to_document(),
            'exploit_treat_prob': self.exploit_treat_prob,
            'seed': self.seed,
        }


@dataclass(frozen=True, eq=False)
class Population:
    """Users' features plus the outcome model that realizes their responses."""

    ids: np.ndarray
    X: np.ndarray
    model: OutcomeModel

    @property
    def n(self):
        return self.X.shape[0]

    @classmethod
    def synthetic(cls, synthetic_cfg, n, seed):
        resolved = synthetic_cfg.resolve(seed)
        X = draw_features(n, resolved.d, seed, stream="population")
        ids = np.array([f"u{i}" for i in range(n)], dtype=object)
        return cls(ids=ids, X=X, model=OutcomeModel(resolved))

    @property
    def truth(self):
        return self.model.ground_truth(self.X)


@dataclass(frozen=True, eq=False)
class ExperimentLog:
    """Logged users of one or more cycles with their arm and cycle labels."""

    dataset: Dataset
    arm: np.ndarray
    cycle: np.ndarray
    rows: np.ndarray = None

    def arms(self):
        return list(dict.fromkeys(self.arm.tolist()))

    def select(self, mask, name):
        return self.dataset.subset(np.flatnonzero(mask), name=name)

    def arm_dataset(self, arm):
        return self.select(self.arm == arm, name=f"{self.dataset.meta.name}/{arm}")

    def explore_dataset(self):
        return self.arm_dataset(EXPLORE_ARM)

    def to_frame(self):
        return to_frame(self.dataset, extra={'arm': self.arm, 'cycle': self.cycle})

    @classmethod
    def concat(cls, logs):
        datasets = [log.dataset for log in logs]
        dataset = Dataset(
            ids=np.concatenate([ds.ids for ds in datasets]),
            X=np.vstack([ds.X for ds in datasets]),
            t=np.concatenate([ds.t for ds in datasets]),
            y_r=np.concatenate([ds.y_r for ds in datasets]),
            y_c=np.concatenate([ds.y_c for ds in datasets]),
            strategy=np.concatenate([ds.strategy for ds in datasets]),
            meta=DatasetMeta(name="campaign", provenance="run_campaign"),
        )
        return cls(
            dataset=dataset,
            arm=np.concatenate([log.arm for log in logs]),
            cycle=np.concatenate([log.cycle for log in logs]),
            rows=np.concatenate([log.rows for log in logs]),
        )


def _exploit_selection(scores, tau_c, cutoff):
    """Positions of the targeted users, best score first."""
    order = rank_order(scores)
    if cutoff.kind == ConstraintKind.PERCENTAGE:
        return order[:top_count(order.size, cutoff.P)]
    spend = np.cumsum(tau_c[order])
    return order[:int(np.searchsorted(spend, cutoff.B, side="right"))]


def run_cycle(pop, models, cfg, cycle=0):
    """Log one campaign cycle. `models` maps arm names to objects with `score(X)`."""
    if EXPLORE_ARM in models:
        raise ConfigError(f"'{EXPLORE_ARM}' is reserved for the explore arm")
    rng = make_rng(cfg.seed, f"cycle-{cycle}")
    n = pop.n
    n_explore = int(round(cfg.explore_fraction * n))
    explore = np.sort(rng.choice(n, size=n_explore, replace=False))
    pool = np.setdiff1d(np.arange(n), explore)

    rows = [explore]
    treat = [(rng.random(n_explore) < cfg.treat_prob_explore).astype(int)]
    arms = [np.full(n_explore, EXPLORE_ARM, dtype=object)]
    if models:
        tau_c = pop.model.tau_c(pop.X)
        shares = np.array_split(rng.permutation(pool), len(models))
        for (name, scorer), share in zip(models.items(), shares):
            picked = share[_exploit_selection(scorer.score(pop.X[share]), tau_c[share], cfg.exploit_cutoff)]
            rows.append(picked)
            treat.append((rng.random(picked.size) < cfg.exploit_treat_prob).astype(int))
            arms.append(np.full(picked.size, name, dtype=object))
            logger.debug(f"cycle {cycle}: arm '{name}' targets {picked.size} of {share.size} users")

    rows = np.concatenate(rows)
    t = np.concatenate(treat)
    arm = np.concatenate(arms)
    X = pop.X[rows]
    y_r, y_c = pop.model.realize(X, t, rng)
    strategy = np.where(arm == EXPLORE_ARM, Strategy.EXPLORE, Strategy.EXPLOIT).astype(object)
    dataset = Dataset(
        ids=pop.ids[rows],
        X=X,
        t=t,
        y_r=y_r,
        y_c=y_c,
        strategy=strategy,
        meta=DatasetMeta(name=f"cycle{cycle}", provenance=f"run_cycle(seed={cfg.seed})"),
    )
    logger.info(f"cycle {cycle}: logged {n_explore} explore and {rows.size - n_explore} exploit users")
    return ExperimentLog(dataset=dataset, arm=arm, cycle=np.full(rows.size, cycle), rows=rows)


def evaluate_cycle(log):
    """Per-arm slope R and efficiency gain against the explore arm."""
    R_explore = slope_R(log.explore_dataset())
    report = {EXPLORE_ARM: {'R': R_explore, 'efficiency_gain': 0.0, 'n': int(np.sum(log.arm == EXPLORE_ARM))}}
    for arm in log.arms():
        if arm == EXPLORE_ARM:
            continue
        R = slope_R(log.arm_dataset(arm))
        report[arm] = {
            'R': R,
            'efficiency_gain': efficiency_gain(R, R_explore),
            'n': int(np.sum(log.arm == arm)),
        }
    return report


def run_campaign(pop, cfg, cycles, train_cfg, seed, baseline_models=None, objective=None):
    """Run `cycles` cycles, retraining a DRM arm on all explore rows logged so far.

    Cycle 0 runs only the baseline arms (none means explore only).
    """
    if cycles < 1:
        raise ConfigError(f"cycles must be >= 1, got {cycles}")
    baseline_models = dict(baseline_models or {})
    logs, reports, models = [], [], dict(baseline_models)
    for cycle in range(cycles):
        log = run_cycle(pop, models, cfg, cycle=cycle)
        logs.append(log)
        reports.append(evaluate_cycle(log))
        if cycle + 1 < cycles:
            explore = ExperimentLog.concat(logs).explore_dataset()
            trained = train_drm(explore, train_cfg, seed, objective=objective)
            models = {**baseline_models, 'drm': trained}
    return ExperimentLog.concat(logs), reports


def reports_frame(reports):
    rows = [
        {'cycle': cycle, 'arm': arm, **metrics}
        for cycle, report in enumerate(reports)
        for arm, metrics in report.items()
    ]
    return pd.DataFrame(rows, columns=['cycle', 'arm', 'R', 'efficiency_gain', 'n'])
