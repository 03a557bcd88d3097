import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
from django.test import SimpleTestCase

from core.cohorts import cohort_means
from core.exceptions import ConfigError, EmptyCohort, ParseError, SchemaError
from core.seeding import make_rng
from core.testing import make_dataset, random_dataset
from core.validation import validate_with
from .csv_io import ColumnSchema, load_csv, read_sidecar, write_csv, write_sidecar
from .recipes import build_census, build_covtype, load_manifest
from .serializers import ColumnSchemaSerializer, SplitRatiosSerializer, SyntheticConfigSerializer
from .splits import SplitRatios, split_dataset, split_indices
from .synthetic import EffectSpec, OutcomeModel, SyntheticConfig, generate_synthetic


class CsvTest(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, text, name="data.csv"):
        path = self.dir / name
        path.write_text(text, encoding="utf-8")
        return path

    def test_marketing_table_layout(self):
        path = self.write(
            "id,strategy,t,y_r,y_c,f0,f1\n"
            "A,explore,1,3,2.3,1.2,3\n"
            "B,exploit,0,1,0.1,2.4,1\n"
        )
        ds = load_csv(path)
        self.assertEqual(ds.n, 2)
        self.assertEqual(list(ds.ids), ["A", "B"])
        self.assertEqual(list(ds.strategy), ["explore", "exploit"])
        self.assertEqual(ds.t.tolist(), [1, 0])
        self.assertEqual(ds.y_r.tolist(), [3.0, 1.0])
        self.assertEqual(ds.y_c.tolist(), [2.3, 0.1])
        self.assertEqual(ds.X.tolist(), [[1.2, 3.0], [2.4, 1.0]])

    def test_only_treated_rows(self):
        path = self.write("t,y_r,y_c,f0\n1,3,2,0.5\n1,1,1,0.2\n")
        with self.assertRaises(EmptyCohort):
            load_csv(path)

    def test_na_outcome_is_rejected_with_row(self):
        path = self.write("t,y_r,y_c,f0\n1,3,2,0.5\n0,NA,1,0.2\n")
        with self.assertRaises(ParseError) as ctx:
            load_csv(path)
        self.assertEqual(ctx.exception.row, 3)

    def test_missing_column(self):
        path = self.write("t,y_r,f0\n1,3,0.5\n0,1,0.2\n")
        with self.assertRaises(SchemaError):
            load_csv(path)

    def test_custom_schema_keeps_declared_feature_order(self):
        path = self.write("treat,gain,cost,b,a\n1,3,2,10,20\n0,1,1,30,40\n")
        schema = validate_with(
            ColumnSchemaSerializer,
            {'t': 'treat', 'y_r': 'gain', 'y_c': 'cost', 'features': ['a', 'b']},
        )
        ds = load_csv(path, schema)
        self.assertEqual(ds.X.tolist(), [[20.0, 10.0], [40.0, 30.0]])

    def test_round_trip_within_twelve_digits(self):
        ds = random_dataset(3, n=40, d=5)
        path = write_csv(ds, self.dir / "ds.csv")
        back = load_csv(path)
        np.testing.assert_allclose(back.X, ds.X, rtol=1e-11)
        np.testing.assert_allclose(back.y_r, ds.y_r, rtol=1e-11)
        np.testing.assert_allclose(back.y_c, ds.y_c, rtol=1e-11)
        np.testing.assert_array_equal(back.t, ds.t)
        self.assertEqual(list(back.ids), list(ds.ids))

    def test_sidecar(self):
        path = self.dir / "ds.csv"
        write_sidecar(path, {'source': 'synthetic', 'seed': 7})
        self.assertEqual(read_sidecar(path), {'seed': 7, 'source': 'synthetic'})


class SplitTest(SimpleTestCase):
    def test_floor_arithmetic(self):
        train, val, test = split_indices(10, SplitRatios(), seed=7)
        self.assertEqual((train.size, val.size, test.size), (6, 2, 2))

    def test_large_default_sizes(self):
        rng = make_rng(0)
        n = 100000
        ds = make_dataset(rng.integers(0, 2, n), X=np.zeros((n, 1)))
        train, val, test = split_dataset(ds, SplitRatios(), seed=1)
        self.assertEqual((train.n, val.n, test.n), (60000, 20000, 20000))

    def test_deterministic(self):
        ds = random_dataset(5, n=200)
        a = split_dataset(ds, SplitRatios(), seed=9)
        b = split_dataset(ds, SplitRatios(), seed=9)
        for left, right in zip(a, b):
            self.assertEqual(list(left.ids), list(right.ids))

    def test_parts_partition_for_random_inputs(self):
        rng = make_rng(42)
        for trial in range(25):
            n = int(rng.integers(40, 200))
            train = float(rng.uniform(0.3, 0.6))
            val = float(rng.uniform(0.1, 0.3))
            ratios = SplitRatios(train, val, 1.0 - train - val)
            parts = split_indices(n, ratios, seed=trial)
            rows = np.concatenate(parts)
            self.assertEqual(sorted(rows.tolist()), list(range(n)))
            self.assertEqual(parts[0].size, int(np.floor(n * train + 1e-9)))

    def test_lost_cohort(self):
        ds = make_dataset([1] * 9 + [0])
        with self.assertRaises(EmptyCohort):
            split_dataset(ds, SplitRatios(), seed=0)

    def test_ratio_validation(self):
        with self.assertRaises(ConfigError):
            SplitRatios(0.5, 0.3, 0.3)
        with self.assertRaises(ConfigError):
            validate_with(SplitRatiosSerializer, {'train': 0.6, 'val': 0.2, 'test': 0.2, 'x': 1})


class SyntheticTest(SimpleTestCase):
    def test_zero_noise_identity(self):
        cfg = SyntheticConfig(n=200, d=3, noise_sd=0.0, treat_prob=0.5,
                              tau_r_spec=EffectSpec(coef=(0.5, -0.2, 0.1), intercept=1.0))
        ds, truth = generate_synthetic(cfg, seed=3)
        model = OutcomeModel(cfg.resolve(3))
        treated = ds.t == 1
        np.testing.assert_allclose(
            (ds.y_r - model.mu0_r(ds.X))[treated], truth.tau_r_true[treated], atol=1e-12
        )

    def test_treated_fraction_concentrates(self):
        ds, _ = generate_synthetic(SyntheticConfig(n=10000, d=2, treat_prob=0.5), seed=11)
        self.assertTrue(0.48 <= ds.t.mean() <= 0.52)

    def test_logistic_propensity_drives_assignment(self):
        ds, truth = generate_synthetic(SyntheticConfig(n=20000, d=4, treat_prob="logistic"), seed=5)
        order = np.argsort(truth.propensity_true)
        decile = ds.n // 10
        self.assertGreater(ds.t[order[-decile:]].mean(), ds.t[order[:decile]].mean())
        self.assertTrue(((truth.propensity_true > 0) & (truth.propensity_true < 1)).all())

    def test_constant_tau_cohort_difference(self):
        flat = EffectSpec(coef=(0.0, 0.0), intercept=2.0)
        cfg = SyntheticConfig(
            n=500, d=2, noise_sd=0.0,
            tau_r_spec=EffectSpec(coef=(0.0, 0.0), intercept=1.5),
            tau_c_spec=EffectSpec(coef=(0.0, 0.0), intercept=0.7),
            mu0_spec=flat, mu0_c_spec=flat,
        )
        ds, _ = generate_synthetic(cfg, seed=2)
        self.assertAlmostEqual(cohort_means(ds.y_r, ds.t), 1.5, delta=1e-9)
        self.assertAlmostEqual(cohort_means(ds.y_c, ds.t), 0.7, delta=1e-9)

    def test_default_cost_effect_is_positive(self):
        _, truth = generate_synthetic(SyntheticConfig(n=1000, d=5), seed=1)
        self.assertTrue((truth.tau_c_true > 0).all())

    def test_deterministic(self):
        a, _ = generate_synthetic(SyntheticConfig(n=100, d=3), seed=4)
        b, _ = generate_synthetic(SyntheticConfig(n=100, d=3), seed=4)
        np.testing.assert_array_equal(a.X, b.X)
        np.testing.assert_array_equal(a.y_r, b.y_r)

    def test_config_validation(self):
        with self.assertRaises(ConfigError):
            SyntheticConfig(n=5)
        with self.assertRaises(ConfigError):
            SyntheticConfig(treat_prob=0.99)
        cfg = validate_with(SyntheticConfigSerializer, {'n': 50, 'd': 2, 'treat_prob': 'logistic'})
        self.assertTrue(cfg.is_logistic)
        with self.assertRaises(ConfigError):
            validate_with(SyntheticConfigSerializer, {'n': 50, 'colour': 'red'})
        with self.assertRaises(ConfigError):
            validate_with(SyntheticConfigSerializer, {'d': 2, 'tau_r_spec': {'coef': [1.0]}})


def _census_frame(rows):
    manifest = load_manifest("census")
    columns = ['caseid', 'dAge', 'iCitizen', 'iFertil', 'dHours', 'dIncome1'] + manifest['features']
    frame = pd.DataFrame(0, index=range(len(rows)), columns=columns)
    for i, row in enumerate(rows):
        for key, value in row.items():
            frame.loc[i, key] = value
    frame['caseid'] = range(len(rows))
    return frame


class CensusRecipeTest(SimpleTestCase):
    def test_filters_and_labels(self):
        raw = _census_frame([
            {'dAge': 3, 'iFertil': 3, 'dHours': 10, 'dIncome1': 2},
            {'dAge': 5, 'iFertil': 3, 'dHours': 10, 'dIncome1': 2},
            {'dAge': 2, 'iFertil': 1, 'dHours': 10, 'dIncome1': 2},
            {'dAge': 2, 'iFertil': 2, 'iCitizen': 1, 'dHours': 10},
            {'dAge': 4, 'iFertil': 2, 'dHours': 2, 'dIncome1': 1},
            {'dAge': 1, 'iFertil': 4, 'dHours': 5, 'dIncome1': 3},
        ])
        ds = build_census(raw)
        self.assertEqual(list(ds.ids), ["0", "4", "5"])
        self.assertEqual(ds.d, 46)
        # median of [10, 2, 5] is 5: the row exactly at the median is control
        self.assertEqual(ds.t.tolist(), [1, 0, 0])
        self.assertEqual(ds.y_r.tolist(), [2.0, 1.0, 3.0])
        self.assertEqual(ds.y_c.tolist(), [-2.0, -1.0, -3.0])

    def test_missing_columns(self):
        raw = _census_frame([{'dAge': 1, 'iFertil': 2}]).drop(columns=['dIncome1'])
        with self.assertRaises(SchemaError):
            build_census(raw)

    def test_deterministic(self):
        rows = [{'dAge': 1, 'iFertil': 2 + i % 3, 'dHours': i, 'dIncome1': i % 4} for i in range(12)]
        a = build_census(_census_frame(rows))
        b = build_census(_census_frame(rows))
        np.testing.assert_array_equal(a.t, b.t)
        np.testing.assert_array_equal(a.X, b.X)


def _covtype_frame(rows):
    manifest = load_manifest("covtype")
    frame = pd.DataFrame(0, index=range(len(rows)), columns=manifest['raw_columns'])
    for i, row in enumerate(rows):
        for key, value in row.items():
            frame.loc[i, key] = value
    return frame


class CovtypeRecipeTest(SimpleTestCase):
    def test_filters_and_labels(self):
        raw = _covtype_frame([
            {'Cover_Type': 1, 'Elevation': 3000, 'Horizontal_Distance_To_Hydrology': 50,
             'Horizontal_Distance_To_Fire_Points': 100},
            {'Cover_Type': 2, 'Elevation': 3100, 'Horizontal_Distance_To_Hydrology': 300,
             'Horizontal_Distance_To_Fire_Points': 900},
            {'Cover_Type': 2, 'Elevation': 3200, 'Horizontal_Distance_To_Hydrology': 200,
             'Horizontal_Distance_To_Fire_Points': 500},
            {'Cover_Type': 1, 'Elevation': 2000, 'Horizontal_Distance_To_Hydrology': 10,
             'Horizontal_Distance_To_Fire_Points': 10},
            {'Cover_Type': 2, 'Elevation': 2100, 'Horizontal_Distance_To_Hydrology': 10,
             'Horizontal_Distance_To_Fire_Points': 10},
            {'Cover_Type': 1, 'Elevation': 2500, 'Horizontal_Distance_To_Hydrology': 10,
             'Horizontal_Distance_To_Fire_Points': 10},
            {'Cover_Type': 3, 'Elevation': 3500, 'Horizontal_Distance_To_Hydrology': 10,
             'Horizontal_Distance_To_Fire_Points': 10},
        ])
        ds = build_covtype(raw)
        # median elevation of the six spruce/lodgepole rows is 2750
        self.assertEqual(ds.n, 3)
        self.assertEqual(ds.d, 51)
        self.assertEqual(ds.X[:, 0].tolist(), [3000.0, 3100.0, 3200.0])
        self.assertEqual(ds.y_c.tolist(), [0.0, 1.0, 1.0])
        self.assertEqual(ds.t.tolist(), [1, 0, 0])
        self.assertEqual(ds.y_r.tolist(), [1.0, 0.0, 0.0])

    def test_missing_columns(self):
        raw = _covtype_frame([{'Cover_Type': 1}]).drop(columns=['Elevation'])
        with self.assertRaises(SchemaError):
            build_covtype(raw)
