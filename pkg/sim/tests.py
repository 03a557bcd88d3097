import numpy as np
from django.test import SimpleTestCase

from barrier.constraints import Constraint
from core.exceptions import ConfigError, Undefined
from core.types import Strategy
from drm.training import train_drm
from evaluation.baselines import OracleScorer, RandomScorer
from evaluation.curves import aucc, cost_curve
from ingest.synthetic import EffectSpec, SyntheticConfig, generate_synthetic
from nn.training import TrainingConfig
from .cycle import CycleConfig, Population, evaluate_cycle, reports_frame, run_campaign, run_cycle


def population(n=1000, seed=3, **kwargs):
    return Population.synthetic(SyntheticConfig(d=4, **kwargs), n=n, seed=seed)


class RunCycleTest(SimpleTestCase):
    def test_explore_only(self):
        log = run_cycle(population(), {}, CycleConfig(population_size=1000, explore_fraction=0.2))
        self.assertEqual(log.dataset.n, 200)
        self.assertEqual(set(log.dataset.strategy), {Strategy.EXPLORE})
        self.assertEqual(log.arms(), ["explore"])

    def test_arms_are_disjoint(self):
        pop = population()
        models = {'random': RandomScorer(1), 'oracle': OracleScorer(pop.model)}
        for seed in range(5):
            log = run_cycle(pop, models, CycleConfig(population_size=1000, seed=seed))
            self.assertEqual(len(set(log.rows.tolist())), log.rows.size)
            self.assertEqual(len(set(log.dataset.ids)), log.dataset.n)
            explore = set(log.rows[log.arm == "explore"].tolist())
            exploit = set(log.rows[log.arm != "explore"].tolist())
            self.assertFalse(explore & exploit)
            # each arm gets 400 pool users and targets the top 40%
            self.assertEqual(int(np.sum(log.arm == "oracle")), 160)

    def test_budget_cutoff_spends_true_cost(self):
        pop = population()
        cfg = CycleConfig(population_size=1000, exploit_cutoff=Constraint.budget(50.0))
        log = run_cycle(pop, {'oracle': OracleScorer(pop.model)}, cfg)
        picked = log.rows[log.arm == "oracle"]
        self.assertLessEqual(pop.model.tau_c(pop.X[picked]).sum(), 50.0)

    def test_explore_treatment_ignores_features(self):
        for seed in range(3):
            pop = population(n=12500, seed=seed)
            log = run_cycle(pop, {}, CycleConfig(population_size=12500, explore_fraction=0.8, seed=seed))
            X = np.column_stack([np.ones(log.dataset.n), log.dataset.X])
            t = log.dataset.t.astype(float)
            coef, *_ = np.linalg.lstsq(X, t, rcond=None)
            residual = t - X @ coef
            sigma2 = residual @ residual / (X.shape[0] - X.shape[1])
            se = np.sqrt(sigma2 * np.diag(np.linalg.inv(X.T @ X)))
            self.assertTrue((np.abs(coef[1:] / se[1:]) < 4).all())

    def test_reserved_arm_name(self):
        with self.assertRaises(ConfigError):
            run_cycle(population(), {'explore': RandomScorer()}, CycleConfig(population_size=1000))

    def test_log_frame_columns(self):
        pop = population()
        log = run_cycle(pop, {'random': RandomScorer(1)}, CycleConfig(population_size=1000))
        frame = log.to_frame()
        self.assertEqual(list(frame.columns[:5]), ['id', 'strategy', 't', 'y_r', 'y_c'])
        self.assertEqual(list(frame.columns[-2:]), ['arm', 'cycle'])


class EvaluateCycleTest(SimpleTestCase):
    def test_oracle_beats_random(self):
        pop = population(n=20000, noise_sd=0.0)
        models = {'random': RandomScorer(2), 'oracle': OracleScorer(pop.model)}
        report = evaluate_cycle(run_cycle(pop, models, CycleConfig(population_size=20000)))
        self.assertGreater(report['oracle']['efficiency_gain'], 0.0)
        self.assertGreater(report['oracle']['efficiency_gain'], report['random']['efficiency_gain'])
        self.assertLess(abs(report['random']['efficiency_gain']), 0.25)
        self.assertEqual(report['explore']['efficiency_gain'], 0.0)

    def test_flat_explore_cost(self):
        flat = EffectSpec(coef=(0.0, 0.0, 0.0, 0.0), intercept=0.0)
        pop = population(noise_sd=0.0, tau_c_spec=flat, mu0_c_spec=EffectSpec(coef=(0.0,) * 4, intercept=0.5))
        log = run_cycle(pop, {}, CycleConfig(population_size=1000))
        with self.assertRaises(Undefined):
            evaluate_cycle(log)


class CampaignTest(SimpleTestCase):
    def test_two_cycles_add_drm_arm(self):
        pop = population(n=2000)
        cfg = CycleConfig(population_size=2000, explore_fraction=0.3)
        log, reports = run_campaign(pop, cfg, 2, TrainingConfig(iterations=50, lr=0.01), seed=1,
                                    baseline_models={'random': RandomScorer(3)})
        self.assertEqual(sorted(set(log.cycle.tolist())), [0, 1])
        self.assertNotIn('drm', reports[0])
        self.assertIn('drm', reports[1])
        frame = reports_frame(reports)
        self.assertEqual(set(frame['arm']), {'explore', 'random', 'drm'})

    def test_retrained_model_beats_random(self):
        pop = population(n=8000, seed=5)
        cfg = CycleConfig(population_size=8000, explore_fraction=0.5, seed=5)
        log, _ = run_campaign(pop, cfg, 1, TrainingConfig(iterations=300, lr=0.01), seed=5)
        trained = train_drm(log.explore_dataset(), TrainingConfig(iterations=300, lr=0.01), seed=5)
        holdout, _ = generate_synthetic(SyntheticConfig(n=6000, d=4), seed=5)
        model_aucc = aucc(cost_curve(trained.score(holdout.X), holdout))
        random_aucc = aucc(cost_curve(RandomScorer(9).score(holdout.X), holdout))
        self.assertGreaterEqual(model_aucc, random_aucc)

    def test_cycle_count(self):
        with self.assertRaises(ConfigError):
            run_campaign(population(), CycleConfig(population_size=1000), 0, TrainingConfig(), seed=1)
