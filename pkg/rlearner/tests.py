import itertools

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ConfigError, EmptyCohort, SingularSystem
from core.seeding import make_rng
from core.testing import make_dataset, random_dataset
from ingest.synthetic import EffectSpec, SyntheticConfig, generate_synthetic
from .duality import (
    LambdaStrategy,
    duality_score,
    duality_solve,
    fit_duality,
    select_lambda,
)
from .learner import Outcome, rlearner_fit
from .propensity import PropensityKind, PropensityModel, fit_propensity
from .ridge import RidgeModel, fit_ridge


class RidgeTest(SimpleTestCase):
    def test_exact_recovery(self):
        rng = make_rng(1)
        X = rng.standard_normal((50, 4))
        y = X @ np.array([1.0, -2.0, 0.5, 3.0]) + 0.7
        model = fit_ridge(X, y)
        self.assertLess(np.max(np.abs(model.predict(X) - y)), 1e-8)
        self.assertAlmostEqual(model.intercept, 0.7, places=8)

    def test_orthonormal_shrinkage(self):
        rng = make_rng(2)
        raw = rng.standard_normal((30, 3))
        Q, _ = np.linalg.qr(raw - raw.mean(axis=0))
        y = rng.standard_normal(30)
        model = fit_ridge(Q, y, reg=0.5)
        np.testing.assert_allclose(model.weights, Q.T @ (y - y.mean()) / 1.5, atol=1e-10)

    def test_constant_target(self):
        X = make_rng(3).standard_normal((20, 2))
        model = fit_ridge(X, np.full(20, 4.5))
        np.testing.assert_allclose(model.weights, [0.0, 0.0], atol=1e-12)
        self.assertAlmostEqual(model.intercept, 4.5)

    def test_singular_design(self):
        x = make_rng(4).standard_normal(20)
        with self.assertRaises(SingularSystem):
            fit_ridge(np.column_stack([x, x]), x)
        with self.assertRaises(SingularSystem):
            fit_ridge(np.ones((3, 4)), np.ones(3))
        model = fit_ridge(np.column_stack([x, x]), x, reg=0.1)
        self.assertAlmostEqual(model.weights[0], model.weights[1])

    def test_weights_act_like_repeated_rows(self):
        rng = make_rng(5)
        X = rng.standard_normal((15, 2))
        y = rng.standard_normal(15)
        weight = np.ones(15)
        weight[:5] = 2.0
        weighted = fit_ridge(X, y, sample_weight=weight)
        repeated = fit_ridge(np.vstack([X, X[:5]]), np.concatenate([y, y[:5]]))
        np.testing.assert_allclose(weighted.weights, repeated.weights, atol=1e-10)
        self.assertAlmostEqual(weighted.intercept, repeated.intercept, places=10)


class PropensityTest(SimpleTestCase):
    def test_independent_assignment(self):
        rng = make_rng(6)
        X = rng.standard_normal((4000, 3))
        t = rng.integers(0, 2, 4000)
        e = fit_propensity(X, t).predict(X)
        self.assertGreaterEqual(np.mean((e >= 0.45) & (e <= 0.55)), 0.95)

    def test_predictions_are_clipped(self):
        X = np.concatenate([np.linspace(-3, -1, 20), np.linspace(1, 3, 20)])[:, None]
        t = (X[:, 0] > 0).astype(int)
        model = fit_propensity(X, t)
        np.testing.assert_array_equal(model.predict(np.array([[-1e3], [1e3]])), [0.01, 0.99])
        self.assertTrue(((model.predict(X) >= 0.01) & (model.predict(X) <= 0.99)).all())

    def test_constant(self):
        model = fit_propensity(np.zeros((4, 1)), [1, 1, 0, 0], kind=PropensityKind.CONSTANT)
        self.assertEqual(model.e_hat, 0.5)
        np.testing.assert_array_equal(model.predict(np.zeros((3, 1))), [0.5, 0.5, 0.5])

    def test_document(self):
        X = make_rng(7).standard_normal((40, 2))
        t = np.array([1, 0] * 20)
        model = fit_propensity(X, t)
        restored = PropensityModel.from_document(model.to_document())
        np.testing.assert_allclose(restored.predict(X), model.predict(X))

    def test_single_class(self):
        with self.assertRaises(EmptyCohort):
            fit_propensity(np.zeros((3, 1)), [1, 1, 1])


def paired_dataset(tau, n=200, d=3, seed=0):
    """Every x appears once treated and once in control, so t is orthogonal to x."""
    rng = make_rng(seed, "paired")
    X = rng.standard_normal((n, d))
    X = np.vstack([X, X])
    t = np.concatenate([np.ones(n, dtype=int), np.zeros(n, dtype=int)])
    mu0 = X @ np.linspace(0.5, -0.5, d) + 1.0
    return make_dataset(t, y_r=mu0 + t * tau(X), y_c=0.5 * mu0 + t * 0.3, X=X)


class RLearnerTest(SimpleTestCase):
    def test_constant_effect_is_identified(self):
        ds = paired_dataset(lambda X: np.full(X.shape[0], 2.0))
        prop = fit_propensity(ds.X, ds.t, kind=PropensityKind.CONSTANT)
        model = rlearner_fit(ds, Outcome.VALUE, prop)
        np.testing.assert_allclose(model.predict(ds.X), 2.0, atol=1e-6)

    def test_linear_effect_direction(self):
        coef = (1.0, -0.5, 0.3, 0.8)
        cfg = SyntheticConfig(
            n=5000,
            d=4,
            noise_sd=0.1,
            tau_r_spec=EffectSpec(coef=coef, intercept=1.0),
        )
        ds, _ = generate_synthetic(cfg, seed=4)
        model = rlearner_fit(ds, Outcome.VALUE, fit_propensity(ds.X, ds.t, kind=PropensityKind.CONSTANT))
        cosine = model.weights @ np.array(coef) / (np.linalg.norm(model.weights) * np.linalg.norm(coef))
        self.assertGreater(cosine, 0.99)

    def test_combined_outcome_is_linear(self):
        ds = random_dataset(3, n=80)
        prop = fit_propensity(ds.X, ds.t)
        value = rlearner_fit(ds, Outcome.VALUE, prop)
        cost = rlearner_fit(ds, Outcome.COST, prop)
        np.testing.assert_allclose(
            rlearner_fit(ds, Outcome.COMBINED, prop, lam=0.0).weights, value.weights, atol=1e-12
        )
        combined = rlearner_fit(ds, Outcome.COMBINED, prop, lam=0.7)
        np.testing.assert_allclose(
            combined.predict(ds.X), value.predict(ds.X) - 0.7 * cost.predict(ds.X), atol=1e-8
        )

    def test_unknown_outcome(self):
        ds = random_dataset(1)
        with self.assertRaises(ConfigError):
            rlearner_fit(ds, "revenue", fit_propensity(ds.X, ds.t, kind=PropensityKind.CONSTANT))


def best_selection(tau_r, tau_c, B):
    corners = np.array(list(itertools.product((0, 1), repeat=len(tau_r))), dtype=float)
    feasible = corners @ tau_c <= B
    return float(np.max(corners[feasible] @ tau_r))


class DualitySolveTest(SimpleTestCase):
    def test_slack_budget(self):
        tau_r = np.array([1.0, -0.5, 2.0, 0.0])
        tau_c = np.array([1.0, 1.0, 1.0, 1.0])
        solution = duality_solve(tau_r, tau_c, B=10.0)
        self.assertEqual(solution.lam, 0.0)
        self.assertTrue(solution.converged)
        np.testing.assert_array_equal(solution.z, [1, 0, 1, 1])

    def test_two_users(self):
        solution = duality_solve([3.0, 1.0], [2.0, 2.0], B=2.0)
        np.testing.assert_array_equal(solution.z, [1, 0])
        self.assertTrue(0.5 < solution.lam <= 1.5)
        self.assertEqual(solution.spend, 2.0)

    def test_against_brute_force(self):
        rng = make_rng(8)
        for _ in range(50):
            n = int(rng.integers(2, 13))
            tau_r = rng.uniform(-1, 3, n)
            tau_c = rng.uniform(0.1, 2, n)
            B = float(rng.uniform(0.2, tau_c.sum()))
            solution = duality_solve(tau_r, tau_c, B)
            value = float(tau_r @ solution.z)
            self.assertTrue(set(np.unique(solution.z)) <= {0.0, 1.0})
            self.assertLessEqual(solution.spend, B + 1e-12)
            self.assertGreaterEqual(value + np.max(np.abs(tau_r)) + 1e-6, best_selection(tau_r, tau_c, B))
            if solution.lam > 0:
                self.assertLessEqual(abs(solution.spend - B), np.max(np.abs(tau_c)))

    def test_fixed_lambda_selection_is_optimal(self):
        rng = make_rng(9)
        tau_r, tau_c = rng.normal(size=8), rng.uniform(0, 1, 8)
        solution = duality_solve(tau_r, tau_c, B=1.0)
        best = max(
            float(solution.s @ np.array(corner)) for corner in itertools.product((0, 1), repeat=8)
        )
        self.assertAlmostEqual(float(solution.s @ solution.z), best, places=12)

    def test_large_budget_slackness(self):
        tau_r = np.array([2.0, 1.0, -1.0])
        tau_c = np.array([1.0, 1.0, 1.0])
        solution = duality_solve(tau_r, tau_c, B=5.0)
        self.assertAlmostEqual(solution.lam * (solution.spend - 5.0), 0.0)

    def test_invalid_budget(self):
        with self.assertRaises(ConfigError):
            duality_solve([1.0], [1.0], B=0.0)


class DualityScoreTest(SimpleTestCase):
    def setUp(self):
        self.X = make_rng(10).standard_normal((25, 3))
        self.tau_r = RidgeModel(np.array([1.0, 0.5, -0.2]), 0.3)
        self.tau_c = RidgeModel(np.array([0.2, -0.1, 0.4]), 0.5)

    def test_zero_lambda(self):
        np.testing.assert_array_equal(duality_score(self.tau_r, self.tau_c, 0.0, self.X), self.tau_r.predict(self.X))

    def test_equal_models_cancel(self):
        np.testing.assert_allclose(duality_score(self.tau_r, self.tau_r, 1.0, self.X), 0.0, atol=1e-15)

    def test_shift_keeps_order(self):
        shifted = RidgeModel(self.tau_r.weights, self.tau_r.intercept + 7.0)
        np.testing.assert_array_equal(
            np.argsort(duality_score(self.tau_r, self.tau_c, 0.05, self.X)),
            np.argsort(duality_score(shifted, self.tau_c, 0.05, self.X)),
        )

    def test_grid_ties_pick_smallest_lambda(self):
        ds, _ = generate_synthetic(SyntheticConfig(n=400, d=3), seed=1)
        flat_cost = RidgeModel(np.zeros(3), 0.0)
        lam, results = select_lambda(self.tau_r, flat_cost, ds)
        self.assertEqual(lam, 0.001)
        self.assertEqual(len(results), 6)


class FitDualityTest(SimpleTestCase):
    def setUp(self):
        ds, _ = generate_synthetic(SyntheticConfig(n=1500, d=4), seed=6)
        self.train = ds.subset(np.arange(1000))
        self.val = ds.subset(np.arange(1000, 1500))
        self.prop = fit_propensity(self.train.X, self.train.t, kind=PropensityKind.CONSTANT)

    def test_grid_strategy(self):
        model = fit_duality(self.train, self.prop, val=self.val)
        self.assertIn(model.lam, [0.001, 0.005, 0.01, 0.05, 0.1, 0.5])
        self.assertEqual(model.score(self.val.X).shape, (500,))

    def test_dual_strategy(self):
        model = fit_duality(self.train, self.prop, strategy=LambdaStrategy.DUAL)
        self.assertGreaterEqual(model.lam, 0.0)
        self.assertIn('spend', model.selection)

    def test_grid_needs_validation(self):
        with self.assertRaises(ConfigError):
            fit_duality(self.train, self.prop)
