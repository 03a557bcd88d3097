import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ConfigError, EmptyCohort, Undefined
from core.seeding import make_rng
from core.testing import make_dataset, random_dataset
from drm.objectives import PropensityWeights, softplus
from ingest.synthetic import SyntheticConfig, generate_synthetic
from .curves import CostCurve, aucc, cost_curve, default_grid, value_at_cost
from .generalization import generalization_score, generalization_table, mean_generalization
from .metrics import efficiency_gain, slope_R
from .ranking import top_count, top_fraction


def curve_through(*points):
    cost, value = zip(*points)
    return CostCurve(grid=np.linspace(0, 1, len(points) + 1)[1:], cost=np.array(cost), value=np.array(value))


def four_users():
    return make_dataset([1, 0, 1, 0], y_r=[5, 1, 3, 1], y_c=[2, 1, 2, 1], d=2)


class RankingTest(SimpleTestCase):
    def test_ties_keep_row_order(self):
        np.testing.assert_array_equal(top_fraction([1.0, 2.0, 2.0, 0.5, 2.0], 0.6), [1, 2, 4])

    def test_counts(self):
        self.assertEqual(top_count(10, 0.3), 3)
        self.assertEqual(top_count(7, 0.5), 4)
        self.assertEqual(top_count(7, 1.0), 7)
        with self.assertRaises(ConfigError):
            top_count(7, 0.0)


class CostCurveTest(SimpleTestCase):
    def test_hand_computed_points(self):
        curve = cost_curve([4, 3, 2, 1], four_users(), grid=[0.5, 1.0])
        self.assertEqual(curve.points, [(1.0, 4.0), (2.0, 6.0)])
        self.assertEqual(curve.n_treated.tolist(), [1, 2])

    def test_equal_scores_take_first_rows(self):
        ds = random_dataset(2, n=20)
        curve = cost_curve(np.zeros(20), ds, grid=[0.5, 1.0])
        half = ds.subset(np.arange(10))
        n_treated = int(half.t.sum())
        expected_value = n_treated * (half.y_r[half.t == 1].mean() - half.y_r[half.t == 0].mean())
        self.assertAlmostEqual(curve.value[0], expected_value, places=12)

    def test_point_without_control_is_skipped(self):
        ds = make_dataset([1, 1, 0, 0], y_r=[3, 2, 1, 0], y_c=[1, 1, 0, 0], d=2)
        with self.assertLogs('evaluation.curves', level='WARNING'):
            curve = cost_curve([4, 3, 2, 1], ds, grid=[0.25, 0.5, 0.75, 1.0])
        self.assertEqual(curve.grid.tolist(), [0.75, 1.0])

    def test_endpoint_is_score_independent(self):
        ds = random_dataset(4, n=50)
        rng = make_rng(4)
        ends = {cost_curve(rng.standard_normal(50), ds).points[-1] for _ in range(5)}
        self.assertEqual(len({(round(c, 9), round(v, 9)) for c, v in ends}), 1)

    def test_default_grid(self):
        grid = default_grid()
        self.assertEqual(len(grid), 20)
        self.assertEqual((grid[0], grid[-1]), (0.05, 1.0))

    def test_bad_grid(self):
        with self.assertRaises(ConfigError):
            cost_curve([1, 2, 3, 4], four_users(), grid=[0.5, 0.9])


class AuccTest(SimpleTestCase):
    def test_diagonal(self):
        self.assertAlmostEqual(aucc(curve_through((1, 2), (2, 4))), 0.5)

    def test_full_rectangle(self):
        self.assertAlmostEqual(aucc(curve_through((0, 4), (2, 4))), 1.0)

    def test_two_segment_curves(self):
        self.assertAlmostEqual(aucc(curve_through((1, 4), (4, 4))), 0.875)
        self.assertAlmostEqual(aucc(curve_through((2, 4), (4, 4))), 0.75)

    def test_overshoot_is_clamped(self):
        self.assertAlmostEqual(aucc(curve_through((2, 6), (4, 4))), 0.75)

    def test_undefined(self):
        with self.assertRaises(Undefined):
            aucc(curve_through((1, 1), (2, -1)))
        with self.assertRaises(Undefined):
            aucc(curve_through((2, 4)))

    def test_random_scores_near_half(self):
        ds, _ = generate_synthetic(SyntheticConfig(n=4000, d=4), seed=3)
        rng = make_rng(5)
        values = [aucc(cost_curve(rng.random(ds.n), ds)) for _ in range(20)]
        self.assertTrue(0.45 <= np.mean(values) <= 0.55)

    def test_depends_only_on_ranking(self):
        ds, _ = generate_synthetic(SyntheticConfig(n=500, d=3), seed=2)
        scores = make_rng(1).standard_normal(ds.n)
        self.assertEqual(aucc(cost_curve(scores, ds)), aucc(cost_curve(3.0 * np.exp(scores) + 1.0, ds)))


class ValueAtCostTest(SimpleTestCase):
    def test_interpolation(self):
        curve = curve_through((2, 4), (4, 6))
        self.assertAlmostEqual(value_at_cost(curve, 0.25), 2.0)
        self.assertAlmostEqual(value_at_cost(curve, 0.75), 5.0)
        self.assertAlmostEqual(value_at_cost(curve, 1.0), 6.0)
        self.assertAlmostEqual(value_at_cost(curve, 0.0), 0.0)

    def test_bounds(self):
        with self.assertRaises(ConfigError):
            value_at_cost(curve_through((2, 4), (4, 6)), 1.5)


class SlopeTest(SimpleTestCase):
    def test_ratio(self):
        ds = make_dataset([1, 1, 0, 0], y_r=[5, 5, 1, 1], y_c=[3, 3, 1, 1], d=2)
        self.assertAlmostEqual(slope_R(ds), 2.0)

    def test_flat_value(self):
        ds = make_dataset([1, 0, 1, 0], y_r=[2, 2, 2, 2], y_c=[3, 1, 3, 1], d=2)
        self.assertEqual(slope_R(ds), 0.0)

    def test_zero_cost_effect(self):
        ds = make_dataset([1, 0], y_r=[2, 1], y_c=[1, 1], d=2)
        with self.assertRaises(Undefined):
            slope_R(ds)

    def test_efficiency_gain(self):
        self.assertAlmostEqual(efficiency_gain(3.0, 2.0), 0.5)
        self.assertEqual(efficiency_gain(2.0, 2.0), 0.0)
        self.assertAlmostEqual(efficiency_gain(1.0, 2.0), -0.5)
        with self.assertRaises(Undefined):
            efficiency_gain(1.0, 0.0)


class GeneralizationTest(SimpleTestCase):
    def test_constant_scores_reduce_to_ate_ratio(self):
        ds = random_dataset(6, n=40)
        ate_r = ds.y_r[ds.t == 1].mean() - ds.y_r[ds.t == 0].mean()
        ate_c = ds.y_c[ds.t == 1].mean() - ds.y_c[ds.t == 0].mean()
        value = generalization_score(np.zeros(40), ds, 1.0)
        self.assertAlmostEqual(value, ate_r / (float(softplus(ate_c)) + 1e-6), places=10)

    def test_matches_term_by_term_sums(self):
        rng = make_rng(3)
        ds = random_dataset(8, n=60)
        scores = rng.standard_normal(60)
        e_x = rng.uniform(0.2, 0.8, 60)
        w = PropensityWeights.from_propensity(ds.t, e_x)
        rows = np.argsort(-scores, kind="stable")[:24]
        t = ds.t[rows]
        e_hat = t.mean()
        p = np.empty(24)
        for cohort in (0, 1):
            mask = t == cohort
            p[mask] = np.exp(scores[rows][mask]) / np.exp(scores[rows][mask]).sum()
        tau = {}
        for name, y in (('r', ds.y_r), ('c', ds.y_c)):
            total = 0.0
            for j, i in enumerate(rows):
                if t[j] == 1:
                    total += e_hat / e_x[i] * y[i] * p[j]
                else:
                    total -= (1 - e_hat) / (1 - e_x[i]) * y[i] * p[j]
            tau[name] = total
        value = generalization_score(scores, ds, 0.4, w=w, mode="linear", alpha=1.3)
        self.assertAlmostEqual(value, tau['r'] - 1.3 * tau['c'], places=10)

    def test_table_rows(self):
        ds = random_dataset(1, n=200)
        table = generalization_table(make_rng(0).standard_normal(200), ds)
        self.assertEqual(table['q'].tolist(), [15, 20, 30, 40, 60, 80, 100])

    def test_table_skips_single_cohort_rows(self):
        ds = make_dataset([1, 1, 0, 0], y_r=[1.0, 2.0, 0.0, 1.0], y_c=[1.0, 1.0, 0.0, 0.0], d=2)
        with self.assertLogs('evaluation.generalization', level='WARNING'):
            table = generalization_table([4, 3, 2, 1], ds, qs=[50, 100])
        self.assertTrue(np.isnan(table['score'].iloc[0]))
        self.assertTrue(np.isfinite(table['score'].iloc[1]))
        self.assertEqual(mean_generalization(table), table['score'].iloc[1])

    def test_single_cohort_subset(self):
        ds = make_dataset([1, 1, 0, 0], d=2)
        with self.assertRaises(EmptyCohort):
            generalization_score([4, 3, 2, 1], ds, 0.5)
        with self.assertRaises(ConfigError):
            generalization_score([4, 3, 2, 1], ds, 1.0, mode="log")
