import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ConfigError, EmptyCohort, InvalidShape, NonFinite, ShapeMismatch
from core.seeding import make_rng
from core.testing import central_difference, max_relative_error
from .checkpoint import scorer_from_document, scorer_to_document
from .objectives import ScoreObjective, gradient
from .optim import adam_step, init_adam
from .scaling import FeatureScaler
from .scorer import ScorerParams, forward, init_params
from .training import TrainedScorer, TrainingConfig, run_adam


class ConstantObjective(ScoreObjective):
    def evaluate_scores(self, scores):
        return 3.0, np.zeros_like(scores), {}


class SumOfScores(ScoreObjective):
    def evaluate_scores(self, scores):
        return float(scores.sum()), np.ones_like(scores), {}


class WeightedSine(ScoreObjective):
    def __init__(self, X, weights, reg=0.0):
        super().__init__(X, reg)
        self.weights = weights

    def evaluate_scores(self, scores):
        value = float(self.weights @ np.sin(2.0 * scores))
        return value, 2.0 * self.weights * np.cos(2.0 * scores), {'mean_score': float(scores.mean())}


class SquaredError(ScoreObjective):
    def __init__(self, X, target):
        super().__init__(X)
        self.target = target

    def evaluate_scores(self, scores):
        diff = scores - self.target
        return -float(diff @ diff), -2.0 * diff, {}


class NanObjective(ScoreObjective):
    def evaluate_scores(self, scores):
        return float('nan'), np.zeros_like(scores), {}


class InitParamsTest(SimpleTestCase):
    def test_single_layer_shape(self):
        p = init_params([3, 1], seed=4)
        self.assertEqual(p.weights[0].shape, (3, 1))
        self.assertEqual(p.biases[0].tolist(), [0.0])
        self.assertEqual(p.size, 4)
        limit = np.sqrt(6.0 / 4)
        self.assertTrue((np.abs(p.weights[0]) <= limit).all())

    def test_deterministic(self):
        a = init_params([5, 4, 1], seed=11)
        b = init_params([5, 4, 1], seed=11)
        np.testing.assert_array_equal(a.flat(), b.flat())
        c = init_params([5, 4, 1], seed=12)
        self.assertFalse(np.array_equal(a.flat(), c.flat()))

    def test_invalid_widths(self):
        with self.assertRaises(InvalidShape):
            init_params([3, 0, 1], seed=0)
        with self.assertRaises(InvalidShape):
            init_params([3, 2], seed=0)
        with self.assertRaises(InvalidShape):
            init_params([3], seed=0)

    def test_flat_layout(self):
        p = init_params([2, 3, 1], seed=1)
        q = ScorerParams.from_flat([2, 3, 1], p.flat())
        np.testing.assert_array_equal(q.weights[0], p.weights[0])
        with self.assertRaises(ShapeMismatch):
            ScorerParams.from_flat([2, 3, 1], p.flat()[:-1])


class ForwardTest(SimpleTestCase):
    def test_zero_params_score_zero(self):
        p = ScorerParams((np.zeros((3, 2)), np.zeros((2, 1))), (np.zeros(2), np.zeros(1)))
        X = make_rng(0).standard_normal((6, 3))
        np.testing.assert_array_equal(forward(p, X), np.zeros(6))

    def test_saturation(self):
        w = np.zeros((4, 1))
        w[0, 0] = 50.0
        p = ScorerParams((w,), (np.zeros(1),))
        scores = forward(p, np.array([[1.0] * 4, [-1.0] * 4]))
        self.assertAlmostEqual(scores[0], 1.0, places=12)
        self.assertAlmostEqual(scores[1], -1.0, places=12)

    def test_rows_are_scored_independently(self):
        p = init_params([4, 3, 1], seed=2)
        X = make_rng(1).standard_normal((10, 4))
        X[7] = X[2]
        scores = forward(p, X)
        self.assertEqual(scores[7], scores[2])
        self.assertTrue((np.abs(scores) < 1).all())
        order = make_rng(3).permutation(10)
        np.testing.assert_allclose(forward(p, X[order]), scores[order], rtol=0, atol=1e-12)

    def test_width_mismatch(self):
        p = init_params([4, 1], seed=2)
        with self.assertRaises(ShapeMismatch):
            forward(p, np.zeros((3, 5)))


class GradientTest(SimpleTestCase):
    def test_constant_objective(self):
        p = init_params([3, 2, 1], seed=0)
        X = make_rng(0).standard_normal((5, 3))
        grads = gradient(ConstantObjective(X), p)
        np.testing.assert_array_equal(grads.flat(), np.zeros(p.size))

    def test_sum_of_scores_one_hot(self):
        p = init_params([3, 1], seed=5)
        X = np.tile(np.eye(3), (3, 1))
        scores = forward(p, X)
        grads = gradient(SumOfScores(X), p)
        expected = ((1.0 - scores ** 2)[:, None] * X).sum(axis=0)
        np.testing.assert_allclose(grads.weights[0][:, 0], expected, rtol=1e-12)
        self.assertAlmostEqual(grads.biases[0][0], float((1.0 - scores ** 2).sum()), places=12)

    def test_matches_finite_differences(self):
        rng = make_rng(21)
        for trial in range(8):
            d = int(rng.integers(1, 9))
            n = int(rng.integers(2, 65))
            hidden = [int(w) for w in rng.integers(1, 6, size=trial % 3)]
            sizes = [d, *hidden, 1]
            p = init_params(sizes, seed=trial)
            objective = WeightedSine(
                rng.standard_normal((n, d)), rng.standard_normal(n), reg=0.1 * (trial % 2)
            )
            numeric = central_difference(objective.flat_value(sizes), p.flat())
            analytic = gradient(objective, p).flat()
            self.assertLess(max_relative_error(analytic, numeric), 1e-4)

    def test_non_finite(self):
        p = init_params([2, 1], seed=0)
        with self.assertRaises(NonFinite):
            gradient(NanObjective(np.ones((3, 2))), p)


class AdamTest(SimpleTestCase):
    def setUp(self):
        self.p = init_params([3, 1], seed=8)

    def test_zero_gradient(self):
        state = init_adam(self.p)
        state, p = adam_step(state, self.p, np.zeros(4))
        np.testing.assert_array_equal(p.flat(), self.p.flat())
        self.assertEqual(state.step, 1)

    def test_first_step_moves_by_learning_rate(self):
        g = np.array([0.5, -2.0, 3.0, -0.01])
        state, p = adam_step(init_adam(self.p, lr=0.001), self.p, g)
        np.testing.assert_allclose(p.flat() - self.p.flat(), 0.001 * np.sign(g), rtol=1e-5)

    def test_ascent_direction(self):
        g = np.array([1.0, 0.0, 0.0, 0.0])
        _, p = adam_step(init_adam(self.p), self.p, g)
        self.assertGreater(p.flat()[0], self.p.flat()[0])

    def test_deterministic(self):
        state = init_adam(self.p)
        g = np.array([0.1, 0.2, -0.3, 0.4])
        s1, p1 = adam_step(state, self.p, g)
        s2, p2 = adam_step(state, self.p, g)
        np.testing.assert_array_equal(p1.flat(), p2.flat())
        np.testing.assert_array_equal(s1.m, s2.m)
        self.assertEqual(state.step, 0)

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeMismatch):
            adam_step(init_adam(self.p), self.p, np.zeros(5))


class RunAdamTest(SimpleTestCase):
    def setUp(self):
        rng = make_rng(30)
        self.X = rng.standard_normal((40, 3))
        self.target = np.tanh(self.X @ np.array([0.4, -0.3, 0.2]))

    def builder(self, rows, step):
        if rows is None:
            return SquaredError(self.X, self.target)
        return SquaredError(self.X[rows], self.target[rows])

    def test_objective_improves(self):
        cfg = TrainingConfig(iterations=300, lr=0.05)
        p0 = init_params([3, 1], seed=1)
        p, trace = run_adam(p0, self.builder, 40, cfg, seed=1)
        self.assertEqual(len(trace), 301)
        self.assertGreater(trace['objective'].iloc[-1], trace['objective'].iloc[0])

    def test_zero_iterations(self):
        p0 = init_params([3, 1], seed=1)
        p, trace = run_adam(p0, self.builder, 40, TrainingConfig(iterations=0), seed=1)
        np.testing.assert_array_equal(p.flat(), p0.flat())
        self.assertEqual(trace['iteration'].tolist(), [0])

    def test_minibatches_cover_every_row_per_epoch(self):
        seen = []

        def builder(rows, step):
            if rows is not None:
                seen.append(rows)
            return self.builder(rows, step)

        run_adam(init_params([3, 1], seed=1), builder, 40, TrainingConfig(iterations=4, batch_size=10), seed=3)
        self.assertEqual(sorted(np.concatenate(seen).tolist()), list(range(40)))

    def test_unusable_batches(self):
        with self.assertRaises(EmptyCohort):
            run_adam(
                init_params([3, 1], seed=1),
                lambda rows, step: None if rows is not None else self.builder(rows, step),
                40,
                TrainingConfig(iterations=2, batch_size=10),
                seed=3,
            )

    def test_config_validation(self):
        with self.assertRaises(ConfigError):
            TrainingConfig(iterations=-1)
        with self.assertRaises(ConfigError):
            TrainingConfig(batch_size=1)
        cfg = TrainingConfig.from_defaults(iterations=5)
        self.assertEqual((cfg.iterations, cfg.lr), (5, 0.001))


class CheckpointTest(SimpleTestCase):
    def test_document_restores_scores(self):
        X = make_rng(2).standard_normal((12, 4)) * 3 + 1
        trained = TrainedScorer(init_params([4, 2, 1], seed=3), FeatureScaler.fit(X))
        restored = scorer_from_document(scorer_to_document(trained))
        self.assertEqual(restored.params.layer_sizes, [4, 2, 1])
        np.testing.assert_allclose(restored.score(X), trained.score(X), rtol=0, atol=1e-12)

    def test_training_config_is_recorded(self):
        config = {'training': TrainingConfig(iterations=5).to_document()}
        trained = TrainedScorer(init_params([4, 1], seed=3), FeatureScaler.identity(4), config=config)
        doc = scorer_to_document(trained)
        self.assertEqual(doc['training']['training']['iterations'], 5)
        self.assertEqual(doc['params']['layer_sizes'], [4, 1])
        self.assertEqual(scorer_from_document(doc).config, config)
        doc['training'] = [5]
        with self.assertRaises(ConfigError):
            scorer_from_document(doc)

    def test_inconsistent_document(self):
        doc = scorer_to_document(TrainedScorer(init_params([4, 1], seed=3), FeatureScaler.identity(4)))
        doc['params']['layer_sizes'] = [4, 2, 1]
        with self.assertRaises(ConfigError):
            scorer_from_document(doc)
        doc = scorer_to_document(TrainedScorer(init_params([4, 1], seed=3), FeatureScaler.identity(3)))
        with self.assertRaises(ConfigError):
            scorer_from_document(doc)

    def test_constant_column_scales_to_zero(self):
        X = np.column_stack([np.full(5, 2.0), np.arange(5.0)])
        scaled = FeatureScaler.fit(X).transform(X)
        np.testing.assert_array_equal(scaled[:, 0], np.zeros(5))
        self.assertAlmostEqual(scaled[:, 1].std(), 1.0)
