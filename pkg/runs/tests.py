import io
import os
import tempfile
from pathlib import Path
from unittest import mock, skipUnless

import numpy as np
import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, tag

from barrier.objective import apply_barrier
from barrier.thresholds import select_threshold_percentage
from core.exceptions import ConfigError, SchemaError
from core.jsonio import read_json
from core.seeding import make_rng
from core.testing import random_dataset
from drm.probabilities import cohort_softmax
from ingest.csv_io import load_csv
from ingest.recipes import build_covtype, load_manifest, read_raw_table
from ingest.splits import SplitRatios, split_dataset
from ingest.synthetic import SyntheticConfig, generate_synthetic
from .artifacts import subsample
from .cli import run
from .registry import ModelKind, model_from_document, model_to_document, train_model
from .reports import evaluate_model, holdout_propensity_weights

FAST = ['--iterations', '60', '--lr', '0.01']


class CliTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)
        self.stdout = io.StringIO()
        self.stderr = io.StringIO()

    def tearDown(self):
        self.tmp.cleanup()

    def run_cli(self, *argv):
        return run([str(arg) for arg in argv], stdout=self.stdout, stderr=self.stderr)

    def gen(self, name="data", n=1500, seed=7, *extra):
        out = self.root / name
        self.assertEqual(self.run_cli('gen', '--n', n, '--d', 3, '--seed', seed, '--out', out, *extra), 0)
        return out


class PipelineTest(CliTestCase):
    def test_gen_train_eval(self):
        data = self.gen()
        for name in ('dataset.csv', 'dataset.json', 'ground_truth.csv', 'train.csv', 'val.csv', 'test.csv'):
            self.assertTrue((data / name).exists(), name)
        self.assertEqual(load_csv(data / 'train.csv').n, 900)

        model_dir = self.root / 'drm'
        code = self.run_cli('train', '--model', 'drm', '--data', data, '--out', model_dir, *FAST)
        self.assertEqual(code, 0)
        for name in ('model.json', 'trace.csv', 'config.resolved.json'):
            self.assertTrue((model_dir / name).exists(), name)
        trace = pd.read_csv(model_dir / 'trace.csv')
        self.assertEqual(len(trace), 61)

        self.assertEqual(self.run_cli('eval', '--data', data, '--model-dir', model_dir, '--out', model_dir), 0)
        summary = read_json(model_dir / 'summary.json')
        self.assertIn('aucc', summary)
        self.assertEqual(summary['n_test'], 300)
        curve = pd.read_csv(model_dir / 'curve.csv')
        self.assertEqual(list(curve.columns), ['q', 'cum_cost', 'cum_value', 'n_treated'])
        np.testing.assert_allclose(summary['grid'], curve['q'], rtol=1e-9)
        table = pd.read_csv(model_dir / 'generalization.csv')
        self.assertEqual(table['q'].tolist(), [15, 20, 30, 40, 60, 80, 100])

    def test_resolved_config_is_complete(self):
        data = self.gen()
        model_dir = self.root / 'constrained'
        self.run_cli('train', '--model', 'constrained', '--data', data, '--out', model_dir, *FAST)
        config = read_json(model_dir / 'config.resolved.json')
        self.assertEqual(config['command'], 'train')
        self.assertEqual(config['iterations'], 60)
        self.assertEqual(config['percentage'], 0.4)
        self.assertEqual(config['T0'], 0.5)
        self.assertEqual(config['hidden_layers'], [])

    def test_oracle_beats_random(self):
        data = self.gen(n=5000)
        aucc = {}
        for kind in ('oracle', 'random'):
            out = self.root / kind
            self.assertEqual(self.run_cli('train', '--model', kind, '--data', data, '--out', out), 0)
            self.assertEqual(self.run_cli('eval', '--data', data, '--out', out), 0)
            aucc[kind] = read_json(out / 'summary.json')['aucc']
        self.assertGreater(aucc['oracle'], aucc['random'])
        self.assertGreater(aucc['oracle'], 0.6)


class ConfigPrecedenceTest(CliTestCase):
    def test_flags_override_file(self):
        config = self.root / 'gen.yaml'
        config.write_text("n: 150\nd: 2\nnoise_sd: 0.0\n", encoding="utf-8")
        out = self.root / 'data'
        self.assertEqual(self.run_cli('gen', '--config', config, '--n', 100, '--out', out), 0)
        resolved = read_json(out / 'config.resolved.json')
        self.assertEqual((resolved['n'], resolved['d'], resolved['noise_sd']), (100, 2, 0.0))
        self.assertEqual(load_csv(out / 'dataset.csv').n, 100)

    def test_json_config(self):
        config = self.root / 'gen.json'
        config.write_text('{"n": 100, "treat_prob": "logistic"}', encoding="utf-8")
        out = self.root / 'data'
        self.assertEqual(self.run_cli('gen', '--config', config, '--d', 2, '--out', out), 0)
        self.assertEqual(read_json(out / 'dataset.json')['synthetic']['treat_prob'], 'logistic')

    def test_unknown_key_in_file(self):
        config = self.root / 'gen.yaml'
        config.write_text("n: 50\nsamples: 3\n", encoding="utf-8")
        self.assertEqual(self.run_cli('gen', '--config', config, '--out', self.root / 'data'), 1)
        self.assertIn('samples', self.stderr.getvalue())

    def test_call_command(self):
        out = self.root / 'data'
        call_command('gen', n=100, d=2, out=str(out), stdout=self.stdout)
        self.assertEqual(read_json(out / 'dataset.json')['n'], 100)
        with self.assertRaises(CommandError):
            call_command('gen', n=5, out=str(out), stdout=self.stdout)


class ExitCodeTest(CliTestCase):
    def test_unknown_flag(self):
        with mock.patch('sys.stderr', new_callable=io.StringIO) as err:
            self.assertEqual(self.run_cli('gen', '--samples', 10), 1)
        self.assertIn('usage', err.getvalue())

    def test_unknown_command(self):
        self.assertEqual(self.run_cli('fit'), 1)
        self.assertIn('usage', self.stderr.getvalue())
        self.assertEqual(self.run_cli(), 1)

    def test_invalid_value(self):
        self.assertEqual(self.run_cli('gen', '--n', 5, '--out', self.root / 'data'), 1)
        self.assertEqual(self.run_cli('gen', '--treat-prob', 'sometimes', '--out', self.root / 'data'), 1)

    def test_missing_data(self):
        self.assertEqual(self.run_cli('train', '--data', self.root / 'nowhere', '--out', self.root / 'm'), 2)

    def test_single_cohort_data(self):
        data = self.root / 'data'
        data.mkdir()
        rows = "\n".join(f"u{i},explore,1,{i},1,{i % 3}" for i in range(10))
        (data / 'train.csv').write_text(f"id,strategy,t,y_r,y_c,f0\n{rows}\n", encoding="utf-8")
        self.assertEqual(self.run_cli('train', '--data', data, '--out', self.root / 'm', *FAST), 2)
        self.assertIn('EmptyCohort', self.stderr.getvalue())

    def write_train_split(self, costs):
        data = self.root / 'data'
        data.mkdir(exist_ok=True)
        rng = make_rng(6)
        rows = "\n".join(
            f"u{i},explore,{i % 2},{rng.normal(1.0, 1.0):.6f},{cost:.6f},{rng.normal():.6f},{rng.normal():.6f}"
            for i, cost in enumerate(costs)
        )
        (data / 'train.csv').write_text(f"id,strategy,t,y_r,y_c,f0,f1\n{rows}\n", encoding="utf-8")
        return data

    def test_budget_with_negative_costs(self):
        data = self.write_train_split([(i % 5) - 1.0 for i in range(80)])
        model_dir = self.root / 'm'
        code = self.run_cli(
            'train', '--model', 'constrained', '--budget', 20, '--data', data, '--out', model_dir, *FAST
        )
        self.assertEqual(code, 0)
        training = read_json(model_dir / 'model.json')['scorer']['training']
        self.assertEqual(training['constraint']['kind'], 'budget')
        self.assertEqual(training['constraint']['B'], 20.0)

    def test_budget_without_positive_costs(self):
        data = self.write_train_split([-float(i % 3) for i in range(80)])
        code = self.run_cli(
            'train', '--model', 'constrained', '--budget', 20, '--data', data, '--out', self.root / 'm', *FAST
        )
        self.assertEqual(code, 2)
        self.assertIn('InvalidCost', self.stderr.getvalue())

    def test_oracle_needs_synthetic_data(self):
        data = self.gen()
        (data / 'dataset.json').unlink()
        self.assertEqual(self.run_cli('train', '--model', 'oracle', '--data', data, '--out', self.root / 'm'), 2)

    def test_model_version(self):
        data = self.gen()
        model_dir = self.root / 'm'
        self.run_cli('train', '--model', 'random', '--data', data, '--out', model_dir)
        doc = read_json(model_dir / 'model.json')
        (model_dir / 'model.json').write_text('{"version": "2", "kind": "random", "seed": 1}', encoding="utf-8")
        self.assertEqual(self.run_cli('eval', '--data', data, '--out', model_dir), 1)
        self.assertEqual(doc['version'], '1')


class CompareTest(CliTestCase):
    def compare(self, data, name):
        out = self.root / name
        code = self.run_cli(
            'compare', '--data', data, '--models', 'random,drm,constrained', '--out', out, *FAST
        )
        self.assertEqual(code, 0)
        return out

    def test_table(self):
        data = self.gen(n=2000)
        out = self.compare(data, 'cmp')
        table = pd.read_csv(out / 'compare.csv')
        self.assertEqual(list(table.columns), ['algorithm', 'dataset', 'aucc', 'improvement_pct', 'value_at_20pct'])
        self.assertEqual(table['algorithm'].tolist(), ['random', 'drm', 'constrained', 'duality'])
        self.assertEqual(set(table['dataset']), {'synthetic'})
        duality = table.loc[table['algorithm'] == 'duality'].iloc[0]
        self.assertEqual(duality['improvement_pct'], 0.0)

    def test_repeat_runs_are_byte_identical(self):
        data = self.gen(n=1200)
        first = self.compare(data, 'a')
        second = self.compare(data, 'b')
        for name in ('summary.json', 'compare.csv'):
            self.assertEqual((first / name).read_bytes(), (second / name).read_bytes())

    @mock.patch('runs.management.commands.compare.get_threads', return_value=3)
    def test_parallel_matches_sequential(self, _threads):
        data = self.gen(n=1200)
        parallel = self.compare(data, 'parallel')
        with mock.patch('runs.management.commands.compare.get_threads', return_value=1):
            sequential = self.compare(data, 'sequential')
        self.assertEqual((parallel / 'summary.json').read_bytes(), (sequential / 'summary.json').read_bytes())

    def test_gen_is_deterministic(self):
        a = self.gen('a', 300, 11)
        b = self.gen('b', 300, 11)
        for name in ('dataset.csv', 'dataset.json', 'test.csv', 'ground_truth.csv'):
            self.assertEqual((a / name).read_bytes(), (b / name).read_bytes())


class SimulateTest(CliTestCase):
    def test_two_cycles(self):
        out = self.root / 'sim'
        code = self.run_cli(
            'simulate', '--n', 2000, '--d', 3, '--cycles', 2, '--explore-fraction', 0.3,
            '--arms', 'random,oracle', '--out', out, *FAST,
        )
        self.assertEqual(code, 0)
        log = pd.read_csv(out / 'log.csv')
        self.assertEqual(sorted(log['cycle'].unique().tolist()), [0, 1])
        self.assertEqual(set(log.loc[log['cycle'] == 1, 'arm']), {'explore', 'random', 'oracle', 'drm'})
        summary = read_json(out / 'summary.json')
        self.assertEqual(len(summary['cycles']), 2)
        self.assertEqual(summary['cycles'][0]['explore']['n'], 600)

    def test_unknown_arm(self):
        self.assertEqual(self.run_cli('simulate', '--arms', 'drm', '--out', self.root / 'sim'), 1)


class PrepTest(CliTestCase):
    def test_census(self):
        manifest = load_manifest('census')
        rng = make_rng(4)
        n = 200
        raw = pd.DataFrame(rng.integers(0, 5, size=(n, len(manifest['features']))), columns=manifest['features'])
        raw['caseid'] = range(n)
        raw['dAge'] = rng.integers(0, 5, n)
        raw['iCitizen'] = 0
        raw['iFertil'] = rng.integers(2, 6, n)
        raw['dHours'] = rng.integers(0, 100, n)
        raw['dIncome1'] = rng.integers(0, 6, n)
        path = self.root / 'census.csv'
        raw.to_csv(path, index=False)
        out = self.root / 'census'
        self.assertEqual(self.run_cli('prep', '--recipe', 'census', '--raw', path, '--out', out), 0)
        ds = load_csv(out / 'dataset.csv')
        self.assertEqual((ds.n, ds.d), (n, 46))
        sidecar = read_json(out / 'dataset.json')
        self.assertEqual(sidecar['recipe'], 'census')
        self.assertFalse((out / 'ground_truth.csv').exists())

        self.assertEqual(
            self.run_cli('prep', '--recipe', 'census', '--raw', path, '--subsample', 80, '--out', self.root / 's'), 0
        )
        self.assertEqual(load_csv(self.root / 's' / 'dataset.csv').n, 80)

    def test_unknown_recipe(self):
        self.assertEqual(self.run_cli('prep', '--recipe', 'adult', '--raw', 'x.csv', '--out', self.root / 'p'), 1)

    def test_missing_raw_file(self):
        code = self.run_cli('prep', '--recipe', 'covtype', '--raw', self.root / 'missing.csv', '--out', self.root / 'p')
        self.assertEqual(code, 2)


class RegistryTest(SimpleTestCase):
    def setUp(self):
        self.ds, _ = generate_synthetic(SyntheticConfig(n=600, d=3), seed=2)
        self.val, _ = generate_synthetic(SyntheticConfig(n=300, d=3), seed=2)
        self.options = {'iterations': 30, 'lr': 0.01}

    def assert_round_trip(self, kind, dataset_doc=None):
        fitted = train_model(kind, self.ds, self.val, self.options, seed=3, dataset_doc=dataset_doc)
        doc = model_to_document(fitted)
        loaded = model_from_document(doc)
        self.assertEqual(loaded.kind, kind)
        if kind in ModelKind.NEURAL:
            training = doc['scorer']['training']
            self.assertEqual(training['training']['iterations'], 30)
            self.assertEqual(training['training']['lr'], 0.01)
            self.assertIn('form', training['objective'])
            self.assertEqual(loaded.scorer.config, fitted.scorer.config)
            if kind == ModelKind.CONSTRAINED:
                self.assertEqual(training['constraint']['P'], 0.4)
                self.assertEqual(training['schedule']['T0'], 0.5)
        np.testing.assert_allclose(loaded.score(self.val.X), fitted.score(self.val.X), rtol=1e-12, atol=1e-12)

    def test_round_trips(self):
        for kind in (
            ModelKind.DRM,
            ModelKind.DRM_PROPENSITY,
            ModelKind.CONSTRAINED,
            ModelKind.DUALITY,
            ModelKind.RLEARNER,
            ModelKind.RLEARNER_PROPENSITY,
            ModelKind.RANDOM,
        ):
            with self.subTest(kind=kind):
                self.assert_round_trip(kind)

    def test_oracle(self):
        synthetic = SyntheticConfig(n=600, d=3).resolve(2).to_document()
        self.assert_round_trip(ModelKind.ORACLE, dataset_doc={'synthetic': synthetic})
        with self.assertRaises(SchemaError):
            train_model(ModelKind.ORACLE, self.ds, None, {}, seed=3)

    def test_duality_dual_strategy(self):
        options = {'lambda_strategy': 'dual'}
        fitted = train_model(ModelKind.DUALITY, self.ds, None, options, seed=3)
        self.assertEqual(fitted.scorer.strategy, 'dual')
        self.assertGreaterEqual(fitted.scorer.lam, 0.0)

    def test_unknown_kind(self):
        with self.assertRaises(ConfigError):
            train_model('forest', random_dataset(1), None, {}, seed=1)

    def test_malformed_document(self):
        with self.assertRaises(SchemaError):
            model_from_document({'version': '1', 'kind': 'duality', 'tau_r': {}})


@tag('slow')
class AcceptanceTest(SimpleTestCase):
    def test_synthetic_ordering(self):
        cfg = SyntheticConfig(n=20000, d=10, noise_sd=0.0)
        ds, _ = generate_synthetic(cfg, seed=7)
        train, val, test = split_dataset(ds, SplitRatios(), seed=7)
        dataset_doc = {'synthetic': cfg.resolve(7).to_document()}
        weights = holdout_propensity_weights(test)
        fitted, aucc = {}, {}
        for kind in ('random', 'drm', 'constrained', 'duality', 'oracle'):
            fitted[kind] = train_model(kind, train, val, {}, seed=7, dataset_doc=dataset_doc)
            aucc[kind] = evaluate_model(fitted[kind], test, weights=weights).summary['aucc']
        self.assertGreaterEqual(aucc['drm'], 0.6)
        self.assertGreater(aucc['drm'], aucc['random'])
        self.assertLessEqual(aucc['oracle'] - aucc['drm'], 0.05)
        self.assertGreaterEqual(aucc['constrained'], aucc['duality'])
        for kind in ('drm', 'constrained', 'duality'):
            self.assertGreaterEqual(aucc['oracle'], aucc[kind] - 1e-6, kind)

        p = cohort_softmax(fitted['constrained'].score(train.X), train.t)
        out = apply_barrier(p, train.t, select_threshold_percentage(p, 0.4), 1e4)
        self.assertEqual(int(out.passed.sum()), int(np.floor(0.4 * train.n + 0.5)))
        self.assertTrue((out.weights[out.passed] >= 0.5).all())

    def test_propensity_weighting_generalizes(self):
        cfg = SyntheticConfig(n=20000, d=10, treat_prob="logistic")
        ds, _ = generate_synthetic(cfg, seed=3)
        train, val, test = split_dataset(ds, SplitRatios(), seed=3)
        weights = holdout_propensity_weights(test)
        score = {}
        for kind in (ModelKind.DRM, ModelKind.DRM_PROPENSITY):
            report = evaluate_model(train_model(kind, train, val, {}, seed=3), test, weights=weights)
            self.assertEqual(list(report.summary['generalization']), ['15', '20', '30', '40', '60', '80', '100'])
            score[kind] = report.summary['generalization']['100']
        self.assertGreater(score[ModelKind.DRM_PROPENSITY], score[ModelKind.DRM])

    @skipUnless(os.environ.get('UPLIFT_RANK_COVTYPE'), 'set UPLIFT_RANK_COVTYPE to the covtype.data path')
    def test_covtype_ordering(self):
        manifest = load_manifest('covtype')
        ds = build_covtype(read_raw_table(os.environ['UPLIFT_RANK_COVTYPE'], manifest), manifest)
        ds = subsample(ds, 50000, seed=7)
        train, val, test = split_dataset(ds, SplitRatios(), seed=7)
        weights = holdout_propensity_weights(test)
        aucc = {}
        for kind in ('drm', 'duality'):
            fitted = train_model(kind, train, val, {}, seed=7)
            aucc[kind] = evaluate_model(fitted, test, weights=weights).summary['aucc']
        self.assertGreater(aucc['duality'], 0.55)
        self.assertGreater(aucc['drm'], aucc['duality'])
