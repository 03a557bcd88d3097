from dataclasses import dataclass

import numpy as np

from core.seeding import make_rng


@dataclass(frozen=True)
class RandomScorer:
    """Uniform random scores; a seeded stand-in for "no model"."""

    seed: int = 0

    def score(self, X):
        return make_rng(self.seed, "random_scorer").random(np.asarray(X).shape[0])


@dataclass(frozen=True, eq=False)
class OracleScorer:
    """Ranks by the true cost effectiveness tau_r(x) / tau_c(x) of a synthetic outcome model."""

    outcome_model: object

    def score(self, X):
        return self.outcome_model.ground_truth(np.asarray(X, dtype=float)).oracle_scores
