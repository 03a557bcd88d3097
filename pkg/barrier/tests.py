import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ConfigError, InvalidCost
from core.seeding import make_rng
from core.testing import central_difference, make_dataset, max_relative_error, random_dataset
from drm.objectives import drm_objective
from drm.probabilities import cohort_softmax
from ingest.synthetic import SyntheticConfig, generate_synthetic
from nn.objectives import gradient
from nn.scorer import ScorerParams, forward, init_params
from nn.training import TrainingConfig
from .constraints import AnnealSchedule, BudgetOrder, Constraint
from .objective import ConstrainedObjective, apply_barrier, barrier_weights, constrained_objective
from .thresholds import budget_costs, select_threshold_budget, select_threshold_percentage
from .training import train_constrained


class PercentageThresholdTest(SimpleTestCase):
    def test_midpoint(self):
        self.assertAlmostEqual(select_threshold_percentage([0.4, 0.3, 0.2, 0.1], 0.5), 0.25)

    def test_everyone(self):
        p = [0.4, 0.3, 0.2, 0.1]
        self.assertLess(select_threshold_percentage(p, 1.0), min(p))

    def test_ties_pass_together(self):
        p = np.array([0.4, 0.3, 0.3, 0.1])
        d_star = select_threshold_percentage(p, 0.5)
        self.assertAlmostEqual(d_star, 0.3 - 1e-12, places=15)
        self.assertEqual(int((p > d_star).sum()), 3)

    def test_exact_count_without_ties(self):
        rng = make_rng(2)
        for _ in range(30):
            n = int(rng.integers(5, 200))
            P = float(rng.uniform(0.05, 1.0))
            p = rng.random(n)
            d_star = select_threshold_percentage(p, P)
            self.assertEqual(int((p > d_star).sum()), int(np.floor(P * n + 0.5)))

    def test_invalid_fraction(self):
        with self.assertRaises(ConfigError):
            select_threshold_percentage([0.5, 0.5], 0.0)


class BudgetThresholdTest(SimpleTestCase):
    def test_prefix(self):
        self.assertAlmostEqual(select_threshold_budget([0.5, 0.3, 0.2], [1, 1, 1], 2.0), 0.25)

    def test_large_budget(self):
        p = np.array([0.5, 0.3, 0.2])
        d_star = select_threshold_budget(p, [1, 1, 1], 10.0)
        self.assertTrue((p > d_star).all())

    def test_small_budget(self):
        p = np.array([0.5, 0.3, 0.2])
        d_star = select_threshold_budget(p, [1, 1, 1], 0.5)
        self.assertFalse((p > d_star).any())

    def test_budget_never_exceeded(self):
        rng = make_rng(4)
        for _ in range(100):
            n = int(rng.integers(3, 100))
            p = np.round(rng.random(n), 2)
            costs = rng.uniform(0, 3, n)
            B = float(rng.uniform(0.1, costs.sum()))
            d_star = select_threshold_budget(p, costs, B)
            self.assertLessEqual(costs[p > d_star].sum(), B + 1e-12)

    def test_cost_order(self):
        p, costs = [0.5, 0.3, 0.2], [5.0, 1.0, 1.0]
        self.assertAlmostEqual(select_threshold_budget(p, costs, 2.0, order=BudgetOrder.COST), 0.25)
        self.assertGreater(select_threshold_budget(p, costs, 2.0), 0.5)

    def test_negative_costs(self):
        with self.assertRaises(InvalidCost):
            select_threshold_budget([0.5, 0.5], [1.0, -1.0], 1.0)
        self.assertFalse(issubclass(InvalidCost, ConfigError))
        np.testing.assert_array_equal(budget_costs([1.5, -2.0, 0.0]), [1.5, 0.0, 0.0])


class BarrierWeightsTest(SimpleTestCase):
    def test_at_threshold(self):
        self.assertEqual(barrier_weights([0.3], 0.3, 5.0)[0], 0.5)

    def test_hard_limit(self):
        p = np.array([0.1, 0.2, 0.3, 0.4])
        np.testing.assert_array_equal(barrier_weights(p, 0.25, 1e6), [0.0, 0.0, 1.0, 1.0])

    def test_logistic_value(self):
        self.assertAlmostEqual(barrier_weights([2.5], 0.5, 0.5)[0], 0.7310585786300049, places=12)

    def test_monotone_and_renormalized(self):
        rng = make_rng(8)
        for temperature in (0.5, 5.0, 50.0, 1e4):
            t = rng.integers(0, 2, 40)
            t[:2] = [1, 0]
            p = cohort_softmax(rng.standard_normal(40) * 3, t)
            d_star = select_threshold_percentage(p, 0.4)
            out = apply_barrier(p, t, d_star, temperature)
            order = np.argsort(p)
            self.assertTrue((np.diff(out.weights[order]) >= 0).all())
            for cohort in (0, 1):
                self.assertLess(abs(out.p_hat[t == cohort].sum() - 1.0), 1e-9)
            if temperature >= 1e4:
                np.testing.assert_array_equal(out.weights > 0.5, out.passed)

    def test_hard_limit_matches_top_k(self):
        rng = make_rng(21)
        for _ in range(100):
            n = int(rng.integers(4, 120))
            t = rng.integers(0, 2, n)
            t[:2] = [1, 0]
            p = cohort_softmax(rng.standard_normal(n), t)
            P = float(rng.uniform(0.05, 1.0))
            out = apply_barrier(p, t, select_threshold_percentage(p, P), 1e4)
            top_k = np.argsort(-p, kind="stable")[: int(np.floor(P * n + 0.5))]
            self.assertEqual(set(np.flatnonzero(out.passed).tolist()), set(top_k.tolist()))
            self.assertTrue((out.weights[out.passed] >= 0.5).all())

    def test_cohort_below_threshold_stays_normalized(self):
        rng = make_rng(5)
        t = np.array([1] * 30 + [0] * 70)
        scores = rng.uniform(-0.1, 0.1, 100)
        p = cohort_softmax(scores, t)
        d_star = select_threshold_percentage(p, 0.1)
        for temperature in (1e4, 1e5, 1e8):
            out = apply_barrier(p, t, d_star, temperature)
            self.assertFalse(out.passed[t == 0].any())
            self.assertTrue(np.isfinite(out.p_hat).all())
            for cohort in (0, 1):
                self.assertLess(abs(out.p_hat[t == cohort].sum() - 1.0), 1e-9)

        ds = make_dataset(t, X=scores[:, None])
        identity = ScorerParams((np.ones((1, 1)),), (np.zeros(1),))
        objective = ConstrainedObjective.for_dataset(ds, constraint=Constraint.percentage(0.1), temperature=1e5)
        self.assertTrue(np.isfinite(gradient(objective, identity).flat()).all())

    def test_positive_temperature(self):
        with self.assertRaises(ConfigError):
            barrier_weights([0.1], 0.0, 0.0)


class ConstrainedObjectiveTest(SimpleTestCase):
    def test_full_selection_reduces_to_drm(self):
        ds = random_dataset(3, n=30, d=3)
        p = init_params([3, 1], seed=2)
        value = constrained_objective(p, ds, Constraint.percentage(1.0), temperature=30.0)
        self.assertAlmostEqual(value, drm_objective(p, ds), delta=1e-6)

    def test_hard_half_matches_restricted_drm(self):
        ds = random_dataset(6, n=40, d=3)
        ds = make_dataset([1, 0] * 20, y_r=ds.y_r, y_c=ds.y_c, X=ds.X)
        params = init_params([3, 1], seed=1)
        p = cohort_softmax(forward(params, ds.X), ds.t)
        survivors = np.flatnonzero(p > select_threshold_percentage(p, 0.5))
        self.assertEqual(set(ds.t[survivors].tolist()), {0, 1})
        value = constrained_objective(params, ds, Constraint.percentage(0.5), temperature=1e9)
        self.assertAlmostEqual(value, drm_objective(params, ds.subset(survivors)), delta=1e-6)

    def test_uniform_scores(self):
        ds = make_dataset([1, 1, 1, 0, 0, 0, 0, 0], d=2)
        zero = ScorerParams((np.zeros((2, 1)),), (np.zeros(1),))
        objective = ConstrainedObjective.for_dataset(ds, constraint=Constraint.percentage(0.25), temperature=10.0)
        p_hat, _, info = objective.transform(forward(zero, ds.X))
        np.testing.assert_allclose(p_hat[:3], np.full(3, 1 / 3))
        np.testing.assert_allclose(p_hat[3:], np.full(5, 1 / 5))
        self.assertAlmostEqual(info['pass_fraction'], 3 / 8)

    def test_negative_costs_count_as_zero_spend(self):
        ds = random_dataset(4, n=30, d=3)
        ds = make_dataset(ds.t, y_r=ds.y_r, y_c=ds.y_c - 0.5, X=ds.X)
        self.assertTrue((ds.y_c < 0).any())
        objective = ConstrainedObjective.for_dataset(ds, constraint=Constraint.budget(2.0), temperature=5.0)
        np.testing.assert_array_equal(objective.costs, np.maximum(ds.y_c, 0.0))
        out = objective.barrier(forward(init_params([3, 1], seed=1), ds.X))[1]
        self.assertLessEqual(objective.costs[out.passed].sum(), 2.0)

    def test_gradient_with_pinned_threshold(self):
        rng = make_rng(12)
        for trial, constraint in enumerate([Constraint.percentage(0.4), Constraint.budget(3.0)] * 10):
            d = int(rng.integers(1, 6))
            n = int(rng.integers(6, 48))
            ds = random_dataset(trial, n=n, d=d)
            ds = make_dataset(ds.t, y_r=ds.y_r, y_c=np.abs(ds.y_c), X=ds.X)
            sizes = [d, 2, 1] if trial % 4 >= 2 else [d, 1]
            params = init_params(sizes, seed=trial)
            free = ConstrainedObjective.for_dataset(ds, constraint=constraint, temperature=5.0)
            d_star = free.barrier(forward(params, ds.X))[1].d_star
            pinned = ConstrainedObjective.for_dataset(
                ds, constraint=constraint, temperature=5.0, d_star=d_star, reg=0.01
            )
            numeric = central_difference(pinned.flat_value(sizes), params.flat())
            self.assertLess(max_relative_error(gradient(pinned, params).flat(), numeric), 1e-4)


class AnnealScheduleTest(SimpleTestCase):
    def test_default_schedule(self):
        schedule = AnnealSchedule()
        self.assertAlmostEqual(schedule.temperature(25), 0.7, places=12)
        self.assertEqual(schedule.temperature(0), 0.5)
        self.assertEqual(schedule.temperature(10**6), 50.0)
        temps = [schedule.temperature(s) for s in range(200)]
        self.assertTrue(all(b >= a for a, b in zip(temps, temps[1:])))

    def test_constant(self):
        schedule = AnnealSchedule(T0=2.0, dT=0.0)
        self.assertEqual({schedule.temperature(s) for s in range(100)}, {2.0})

    def test_validation(self):
        with self.assertRaises(ConfigError):
            AnnealSchedule(T0=0.0)
        with self.assertRaises(ConfigError):
            AnnealSchedule(every=0)
        with self.assertRaises(ConfigError):
            Constraint(kind="geo")
        with self.assertRaises(ConfigError):
            Constraint.budget(0.0)


class TrainConstrainedTest(SimpleTestCase):
    def test_trace_and_final_selection(self):
        ds, _ = generate_synthetic(SyntheticConfig(n=300, d=3), seed=2)
        cfg = TrainingConfig(iterations=60, lr=0.01)
        trained = train_constrained(ds, cfg, seed=4, constraint=Constraint.percentage(0.4))
        trace = trained.trace
        for column in ('temperature', 'd_star', 'pass_fraction', 'tau_r', 'tau_c'):
            self.assertIn(column, trace.columns)
        self.assertAlmostEqual(trace['temperature'].iloc[25], 0.7, places=12)
        self.assertLessEqual(abs(trace['pass_fraction'].iloc[-1] - 0.4), 1.0 / ds.n)

    def test_budget_on_partly_negative_costs(self):
        ds = random_dataset(3, n=60, d=3)
        self.assertTrue((ds.y_c < 0).any())
        cfg = TrainingConfig(iterations=10, lr=0.01)
        with self.assertLogs('barrier.training', level='WARNING'):
            trained = train_constrained(ds, cfg, seed=1, constraint=Constraint.budget(5.0))
        self.assertEqual(trained.config['constraint']['B'], 5.0)
        self.assertEqual(trained.config['training']['iterations'], 10)

    def test_budget_without_positive_costs(self):
        ds = random_dataset(3, n=40, d=3)
        ds = make_dataset(ds.t, y_r=ds.y_r, y_c=-np.abs(ds.y_c), X=ds.X)
        with self.assertRaises(InvalidCost):
            train_constrained(ds, TrainingConfig(iterations=5), seed=1, constraint=Constraint.budget(5.0))

    def test_deterministic_minibatch_budget(self):
        ds = random_dataset(9, n=80, d=3)
        ds = make_dataset(ds.t, y_r=ds.y_r, y_c=np.abs(ds.y_c), X=ds.X)
        constraint = Constraint.budget(float(np.abs(ds.y_c).sum()) * 0.3)
        cfg = TrainingConfig(iterations=20, lr=0.01, batch_size=40)
        a = train_constrained(ds, cfg, seed=1, constraint=constraint)
        b = train_constrained(ds, cfg, seed=1, constraint=constraint)
        np.testing.assert_array_equal(a.params.flat(), b.params.flat())
