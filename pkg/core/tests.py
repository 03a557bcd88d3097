import numpy as np
from django.test import SimpleTestCase

from .cohorts import cohort_indices, cohort_means, split_cohorts
from .exceptions import ConfigError, EmptyCohort, ParseError, ShapeMismatch
from .seeding import make_rng
from .testing import make_dataset, random_dataset
from .types import Dataset, Strategy, UserSample


class SplitCohortsTest(SimpleTestCase):
    def test_direct_partition(self):
        treated, control = split_cohorts(make_dataset([1, 0, 1]))
        self.assertEqual(treated.tolist(), [0, 2])
        self.assertEqual(control.tolist(), [1])

    def test_block_partition(self):
        treated, control = split_cohorts(make_dataset([1] * 5 + [0] * 5))
        self.assertEqual(treated.tolist(), [0, 1, 2, 3, 4])
        self.assertEqual(control.tolist(), [5, 6, 7, 8, 9])

    def test_no_treated_samples(self):
        with self.assertRaises(EmptyCohort):
            cohort_indices([0, 0])
        with self.assertRaises(EmptyCohort):
            make_dataset([0, 0])

    def test_partition_is_exhaustive_and_disjoint(self):
        for seed in range(20):
            ds = random_dataset(seed, n=int(make_rng(seed).integers(2, 60)))
            treated, control = split_cohorts(ds)
            merged = np.concatenate([treated, control])
            self.assertEqual(sorted(merged.tolist()), list(range(ds.n)))
            self.assertEqual(len(set(treated) & set(control)), 0)

    def test_cohort_means(self):
        self.assertAlmostEqual(cohort_means([2.0, 4.0, 1.0, 1.0], [1, 1, 0, 0]), 2.0)


class DatasetTest(SimpleTestCase):
    def test_rejects_non_binary_treatment(self):
        with self.assertRaises(ParseError):
            make_dataset([1, 0, 2])

    def test_rejects_non_finite_outcomes(self):
        with self.assertRaises(ParseError):
            make_dataset([1, 0], y_r=[1.0, np.nan])

    def test_rejects_ragged_columns(self):
        with self.assertRaises(ShapeMismatch):
            make_dataset([1, 0], y_r=[1.0, 2.0, 3.0])

    def test_columns_are_read_only(self):
        ds = make_dataset([1, 0, 1])
        with self.assertRaises(ValueError):
            ds.X[0, 0] = 5.0

    def test_samples_round_trip(self):
        ds = make_dataset([1, 0, 1], y_r=[3.0, 1.0, 2.0], y_c=[2.3, 0.1, 0.5])
        rebuilt = Dataset.from_samples(ds.samples, meta=ds.meta)
        np.testing.assert_array_equal(rebuilt.X, ds.X)
        np.testing.assert_array_equal(rebuilt.t, ds.t)
        self.assertEqual(rebuilt.samples[0].strategy, Strategy.EXPLORE)
        self.assertIsInstance(rebuilt.samples[1], UserSample)

    def test_subset_keeps_order_and_checks_cohorts(self):
        ds = make_dataset([1, 0, 1, 0])
        sub = ds.subset([3, 0])
        self.assertEqual(list(sub.ids), ["u3", "u0"])
        with self.assertRaises(EmptyCohort):
            ds.subset([0, 2])


class SeedingTest(SimpleTestCase):
    def test_same_seed_same_draws(self):
        a = make_rng(11, "noise").standard_normal(5)
        b = make_rng(11, "noise").standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_streams_are_independent(self):
        a = make_rng(11, "noise").standard_normal(5)
        b = make_rng(11, "treatment").standard_normal(5)
        self.assertFalse(np.array_equal(a, b))

    def test_rejects_out_of_range_seed(self):
        with self.assertRaises(ConfigError):
            make_rng(-1)
        with self.assertRaises(ConfigError):
            make_rng(2**64)
        make_rng(2**64 - 1)
