import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ConfigError, EmptyCohort
from core.seeding import make_rng
from core.testing import central_difference, make_dataset, max_relative_error, random_dataset
from ingest.synthetic import EffectSpec, SyntheticConfig, generate_synthetic
from nn.objectives import gradient
from nn.scorer import ScorerParams, forward, init_params
from nn.training import TrainingConfig
from .objectives import (
    DirectRankingObjective,
    ObjectiveForm,
    PropensityWeights,
    drm_objective,
    drm_propensity_objective,
    softplus,
    tau_hat,
    tau_hat_propensity,
)
from .probabilities import effectiveness_probs
from .training import RankingObjectiveConfig, train_drm


def zero_params(d):
    return ScorerParams((np.zeros((d, 1)),), (np.zeros(1),))


class EffectivenessProbsTest(SimpleTestCase):
    def test_equal_scores(self):
        probs = effectiveness_probs([0.0, 0.0, 5.0], [1, 1, 0])
        np.testing.assert_allclose(probs.p, [0.5, 0.5, 1.0])

    def test_closed_form(self):
        probs = effectiveness_probs([np.log(2.0), 0.0, 1.0, 1.0], [1, 1, 0, 0])
        np.testing.assert_allclose(probs.p, [2 / 3, 1 / 3, 0.5, 0.5], rtol=1e-12)

    def test_normalized_positive_and_order_preserving(self):
        rng = make_rng(6)
        for _ in range(20):
            n = int(rng.integers(4, 50))
            t = rng.integers(0, 2, n)
            t[:2] = [1, 0]
            scores = rng.uniform(-1, 1, n) * 30
            probs = effectiveness_probs(scores, t)
            self.assertTrue((probs.p > 0).all())
            for cohort in (0, 1):
                rows = t == cohort
                self.assertLess(abs(probs.cohort_total(cohort) - 1.0), 1e-9)
                np.testing.assert_array_equal(
                    np.argsort(probs.p[rows], kind="stable"), np.argsort(scores[rows], kind="stable")
                )

    def test_shift_within_cohort(self):
        t = np.array([1, 1, 1, 0, 0])
        scores = np.array([0.1, -0.4, 0.7, 0.2, 0.3])
        shifted = scores + np.where(t == 1, 3.0, -2.0)
        np.testing.assert_allclose(
            effectiveness_probs(shifted, t).p, effectiveness_probs(scores, t).p, atol=1e-9
        )

    def test_empty_cohort(self):
        with self.assertRaises(EmptyCohort):
            effectiveness_probs([0.1, 0.2], [1, 1])


class TauHatTest(SimpleTestCase):
    def test_uniform_probabilities(self):
        t = [1, 1, 0, 0]
        probs = effectiveness_probs(np.zeros(4), t)
        self.assertAlmostEqual(tau_hat(probs, [2, 4, 1, 1], t), 2.0, places=12)
        self.assertAlmostEqual(tau_hat(probs, [5, 5, 5, 5], t), 0.0, places=12)

    def test_saturated_scores(self):
        t = [1, 1, 0, 0]
        probs = effectiveness_probs([20.0, 0.0, 0.0, 20.0], t)
        self.assertAlmostEqual(tau_hat(probs, [7.0, 1.0, 2.0, 3.0], t), 7.0 - 3.0, delta=1e-6)

    def test_constant_propensity_reduces(self):
        rng = make_rng(1)
        for seed in range(100):
            n = int(rng.integers(2, 80))
            ds = random_dataset(seed, n=n)
            probs = effectiveness_probs(rng.standard_normal(n) * 3, ds.t)
            w = PropensityWeights.constant(ds.t)
            for y in (ds.y_r, ds.y_c):
                self.assertAlmostEqual(
                    tau_hat_propensity(probs, y, ds.t, w), tau_hat(probs, y, ds.t), delta=1e-12
                )

    def test_single_pair(self):
        t = [1, 0]
        w = PropensityWeights(e_hat=0.5, e_x=np.array([0.5, 0.5]))
        probs = effectiveness_probs([0.0, 0.0], t)
        self.assertAlmostEqual(tau_hat_propensity(probs, [4.0, 0.0], t, w), 4.0)

    def test_matches_term_by_term_sum(self):
        rng = make_rng(9)
        ds = random_dataset(4, n=25)
        e_x = rng.uniform(0.0, 1.0, 25)
        w = PropensityWeights.from_propensity(ds.t, e_x)
        probs = effectiveness_probs(rng.standard_normal(25), ds.t)
        expected = 0.0
        for i in range(25):
            e = min(max(e_x[i], 0.01), 0.99)
            if ds.t[i] == 1:
                expected += w.e_hat / e * ds.y_r[i] * probs.p[i]
            else:
                expected -= (1 - w.e_hat) / (1 - e) * ds.y_r[i] * probs.p[i]
        self.assertAlmostEqual(tau_hat_propensity(probs, ds.y_r, ds.t, w), expected, places=10)
        self.assertAlmostEqual(w.e_hat, float(np.mean(ds.t)), places=15)
        self.assertTrue(((w.e_x >= 0.01) & (w.e_x <= 0.99)).all())


def table_dataset():
    # treated value mean 3, control 1; treated cost mean 2.3, control 0.1
    return make_dataset(
        [1, 1, 0, 0],
        y_r=[2.0, 4.0, 1.0, 1.0],
        y_c=[2.0, 2.6, 0.0, 0.2],
        X=[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.5]],
    )


class DrmObjectiveTest(SimpleTestCase):
    def test_uniform_scorer(self):
        value = drm_objective(zero_params(2), table_dataset())
        self.assertAlmostEqual(value, 2.0 / (float(softplus(2.2)) + 1e-6), places=12)
        self.assertAlmostEqual(value, 2.0 / float(softplus(2.2)), places=5)

    def test_flat_value_outcome(self):
        ds = random_dataset(2, n=20)
        ds = make_dataset(ds.t, y_r=np.full(20, 3.0), y_c=ds.y_c, X=ds.X)
        self.assertAlmostEqual(drm_objective(init_params([4, 1], seed=1), ds), 0.0, places=12)

    def test_penalty_grows_with_norm(self):
        ds = random_dataset(5, n=30, d=3)
        base = init_params([3, 1], seed=2)
        values = []
        for scale in (50.0, 100.0, 200.0):
            p = ScorerParams((base.weights[0] * scale,), (base.biases[0],))
            values.append(drm_objective(p, ds, reg=0.1))
        self.assertGreater(values[0], values[1])
        self.assertGreater(values[1], values[2])

    def test_constant_propensity_ratio_mode(self):
        ds = random_dataset(7, n=40, d=3)
        p = init_params([3, 1], seed=3)
        w = PropensityWeights.constant(ds.t)
        self.assertAlmostEqual(drm_propensity_objective(p, ds, w, mode="ratio"), drm_objective(p, ds), delta=1e-9)

    def test_linear_mode(self):
        ds, truth = generate_synthetic(SyntheticConfig(n=200, d=3, treat_prob="logistic"), seed=3)
        p = init_params([3, 1], seed=4)
        w = PropensityWeights.from_propensity(ds.t, truth.propensity_true)
        probs = effectiveness_probs(forward(p, ds.X), ds.t)
        tau_r = tau_hat_propensity(probs, ds.y_r, ds.t, w)
        tau_c = tau_hat_propensity(probs, ds.y_c, ds.t, w)
        self.assertAlmostEqual(drm_propensity_objective(p, ds, w, alpha=0.0), tau_r, places=10)
        self.assertAlmostEqual(drm_propensity_objective(p, ds, w, alpha=1.5), tau_r - 1.5 * tau_c, places=10)

    def test_unknown_mode(self):
        ds = random_dataset(1)
        with self.assertRaises(ConfigError):
            drm_propensity_objective(zero_params(4), ds, PropensityWeights.constant(ds.t), mode="log")

    def test_gradients_match_finite_differences(self):
        rng = make_rng(17)
        for trial, form in enumerate(ObjectiveForm.VALUES * 7):
            d = int(rng.integers(1, 9))
            n = int(rng.integers(4, 65))
            ds = random_dataset(trial, n=n, d=d)
            weights = PropensityWeights.from_propensity(ds.t, rng.uniform(0.05, 0.95, n)) if trial % 2 else None
            sizes = [d, 3, 1] if trial % 4 >= 2 else [d, 1]
            p = init_params(sizes, seed=trial)
            objective = DirectRankingObjective.for_dataset(ds, form=form, weights=weights, reg=0.05)
            numeric = central_difference(objective.flat_value(sizes), p.flat())
            self.assertLess(max_relative_error(gradient(objective, p).flat(), numeric), 1e-4)


def sign_dataset(seed, n=400):
    """Value uplift is large only where x0 > 0; cost uplift is constant."""
    rng = make_rng(seed, "sign_dataset")
    X = rng.standard_normal((n, 2))
    t = rng.integers(0, 2, n)
    tau_r = np.where(X[:, 0] > 0, 2.0, 0.2)
    y_r = t * tau_r + 0.05 * rng.standard_normal(n)
    y_c = t * 1.0 + 0.05 * rng.standard_normal(n)
    return make_dataset(t, y_r=y_r, y_c=y_c, X=X)


class TrainDrmTest(SimpleTestCase):
    def test_learns_effective_group(self):
        ds = sign_dataset(1)
        trained = train_drm(ds, TrainingConfig(iterations=400, lr=0.01), seed=2)
        scores = trained.score(ds.X)
        positive = ds.X[:, 0] > 0
        self.assertGreater(scores[positive].mean(), scores[~positive].mean())

    def test_final_estimate_and_recorded_config(self):
        ds = sign_dataset(3, n=120)
        cfg = TrainingConfig(iterations=15, lr=0.01)
        with self.assertLogs('drm.training', level='INFO') as logs:
            trained = train_drm(ds, cfg, seed=2)
        last = trained.trace.iloc[-1]
        self.assertTrue(any(f"tau_r={last['tau_r']:.6g}" in line for line in logs.output))
        self.assertEqual(trained.config['training'], cfg.to_document())
        self.assertEqual(trained.config['objective']['form'], ObjectiveForm.RATIO)
        self.assertFalse(trained.config['propensity_weighted'])

    def test_zero_iterations(self):
        ds = random_dataset(2, d=3)
        cfg = TrainingConfig(iterations=0)
        trained = train_drm(ds, cfg, seed=5)
        np.testing.assert_array_equal(trained.params.flat(), init_params(cfg.layer_sizes(3), 5).flat())

    def test_deterministic(self):
        ds = random_dataset(3, n=60)
        cfg = TrainingConfig(iterations=30, hidden_layers=(4,))
        a = train_drm(ds, cfg, seed=9)
        b = train_drm(ds, cfg, seed=9)
        np.testing.assert_array_equal(a.params.flat(), b.params.flat())

    def test_objective_improves_over_seeds(self):
        cfg = TrainingConfig(iterations=100, lr=0.01)
        for seed in range(5):
            ds, _ = generate_synthetic(SyntheticConfig(n=500, d=4), seed=seed)
            trace = train_drm(ds, cfg, seed=seed).trace
            self.assertGreaterEqual(trace['objective'].iloc[-1], trace['objective'].iloc[0])
            self.assertIn('tau_c', trace.columns)

    def test_linear_propensity_variant_and_minibatches(self):
        ds, truth = generate_synthetic(
            SyntheticConfig(n=300, d=3, treat_prob="logistic",
                            tau_c_spec=EffectSpec(coef=(0.0, 0.0, 0.0), intercept=0.5)),
            seed=8,
        )
        weights = PropensityWeights.from_propensity(ds.t, truth.propensity_true)
        objective = RankingObjectiveConfig(form=ObjectiveForm.LINEAR, alpha=1.5)
        cfg = TrainingConfig(iterations=40, lr=0.01, batch_size=64)
        trained = train_drm(ds, cfg, seed=1, objective=objective, weights=weights)
        self.assertEqual(len(trained.trace), 41)
        self.assertTrue(trained.params.is_finite())

    def test_objective_config(self):
        with self.assertRaises(ConfigError):
            RankingObjectiveConfig(form="log_ratio")
        self.assertEqual(RankingObjectiveConfig.from_defaults().alpha, 1.5)
