"""
Unit tests for the baseline, the metrics, the importance report and the
sparsity sweep
"""
import os
import sys
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), '..'))
import math
import unittest

import numpy as np

from pysert.sert.config import Config
from pysert.sert.data import *
from pysert.sert.encoding import NormalizationStats, VariableVocabulary, embed_triplet
from pysert.sert.error import SertError, UsageError
from pysert.sert.evaluation import *
from pysert.sert.mode import LocationMode, ModelKind
from pysert.sert.model import Forecaster, ModelConfig


def window(targets, mask, anchor=0, location=None):
    return SampleWindow([0], [0], [0.0], targets, mask, location, anchor)


def column(table, start, stop):
    return list(table.between(start, stop).frame['value'])


class TestForwardFill(unittest.TestCase):

    def test_interior_gap(self):
        table = LongTable.from_records([(0, 's', 'x', 1.0), (3, 's', 'x', 4.0)])
        filled = forward_fill(table, {('s', 'x'): 2.5})
        self.assertEqual(column(filled, 0, 4), [1.0, 1.0, 1.0, 4.0])

    def test_leading_gap(self):
        table = LongTable.from_records([(2, 's', 'x', 5.0)])
        filled = forward_fill(table, {('s', 'x'): 2.0}, 0, 3)
        self.assertEqual(column(filled, 0, 3), [2.0, 2.0, 5.0])

    def test_dense(self):
        sparse = sparsify(simulate_fixture(0, n_steps=100), 0.5, 0)
        filled = forward_fill(sparse, series_means(sparse, 0, 50))
        self.assertEqual(len(filled), len(sparse.pairs()) * 100)
        self.assertTrue(np.isfinite(filled.frame['value'].to_numpy()).all())
        filled.check()

    def test_series_means(self):
        table = LongTable.from_records([(0, 'a', 'x', 1.0), (1, 'a', 'x', 3.0), (20, 'b', 'x', 9.0),
                                        (20, 'b', 'y', 7.0)])
        means = series_means(table, 0, 10)
        self.assertEqual(means, {('a', 'x'): 2.0, ('b', 'x'): 2.0, ('b', 'y'): 0.0})


class TestNaive(unittest.TestCase):

    def setUp(self):
        self.vocabulary = VariableVocabulary(['site.v'], (), LocationMode.A)

    def config(self, horizon=1, lookback=5, n_targets=1, mode=LocationMode.A):
        return ModelConfig(d=4, n_heads=1, k=1, n_max=lookback * n_targets, n_targets=n_targets,
                           lookback=lookback, horizon=horizon, location_mode=mode)

    def test_ramp(self):
        table = matrix_to_table(np.arange(50.0).reshape(50, 1), 'site', ['v'])
        for horizon in (1, 3):
            windows = build_windows(table, self.config(horizon), Split('test', 0, 50), self.vocabulary)
            predictions = naive_forecast(table, windows, self.vocabulary, {})
            np.testing.assert_array_equal(predictions[:, 0], [w.anchor - 1 for w in windows])
            metrics = rmse_per_variable(predictions, windows, self.vocabulary.names, 'naive')
            self.assertAlmostEqual(metrics.rmse('naive', 'site.v'), float(horizon), places=12)

    def test_constant(self):
        table = matrix_to_table(np.full((30, 1), 4.2), 'site', ['v'])
        windows = build_windows(table, self.config(2), Split('test', 0, 30), self.vocabulary)
        predictions = naive_forecast(table, windows, self.vocabulary, {})
        self.assertEqual(rmse_per_variable(predictions, windows, ['site.v']).rmse('model', 'site.v'), 0.0)

    def test_loop_oracle(self):
        rng = np.random.default_rng(2)
        names = ['a', 'b', 'c']
        dense = matrix_to_table(rng.normal(size=(60, 3)), 'site', names)
        sparse = sparsify(dense, 0.5, 0)
        vocabulary = VariableVocabulary.from_pairs(dense.pairs(), LocationMode.A)
        windows = build_windows(sparse, self.config(2, n_targets=3), Split('test', 30, 60), vocabulary,
                                target_table=dense)
        means = series_means(sparse, 0, 30)
        predictions = naive_forecast(sparse, windows, vocabulary, means)
        records = sparse.records()
        for j, w in enumerate(windows):
            for k, name in enumerate(names):
                seen = [(t, value) for t, _, variable, value in records if variable == name and t <= w.anchor - 1]
                expected = max(seen)[1] if seen else means[('site', name)]
                self.assertEqual(predictions[j, k], expected)

        metrics = rmse_per_variable(predictions, windows, vocabulary.names, 'naive')
        for k, name in enumerate(vocabulary.names):
            errors = [(predictions[j, k] - w.targets[k]) ** 2 for j, w in enumerate(windows) if w.target_mask[k]]
            self.assertLess(abs(metrics.rmse('naive', name) - math.sqrt(sum(errors) / len(errors))), 1e-12)

    def test_mode_b(self):
        table = sparsify(simulate_fixture(3, n_steps=120), 0.3, 3)
        vocabulary = VariableVocabulary.from_pairs(table.pairs(), LocationMode.B)
        windows = build_windows(table, self.config(7, lookback=10, n_targets=7, mode=LocationMode.B),
                                Split('test', 60, 120), vocabulary)
        predictions = naive_forecast(table, windows, vocabulary, series_means(table, 0, 60))
        self.assertEqual(predictions.shape, (len(windows), 7))
        self.assertTrue(np.isfinite(predictions).all())
        # Water Level is repeated at every buoy
        level = vocabulary.index('Water Level')
        by_anchor = {}
        for w, p in zip(windows, predictions[:, level]):
            by_anchor.setdefault(w.anchor, []).append(p)
        self.assertTrue(any(len(set(values)) < len(values) for values in by_anchor.values()))

    def test_empty(self):
        self.assertEqual(naive_forecast(LongTable(), [], self.vocabulary, {}).shape, (0, 1))


class TestRmse(unittest.TestCase):

    def setUp(self):
        self.windows = [window([1.0, 0.0], [True, False]), window([5.0, 4.0], [True, True])]
        self.predictions = np.array([[2.0, 9.0], [3.0, 4.0]])

    def test_example(self):
        metrics = rmse_per_variable(self.predictions, self.windows, ['x', 'y'], 'sert')
        self.assertEqual(metrics.rmse('sert', 'x'), math.sqrt(2.5))
        self.assertEqual(metrics.rmse('sert', 'y'), 0.0)
        self.assertEqual(metrics.models(), ['sert'])
        self.assertEqual(metrics.overall('sert'), math.sqrt(2.5) / 2)

    def test_absent(self):
        windows = [window([1.0, 0.0], [True, False])]
        metrics = rmse_per_variable([[1.5, 7.0]], windows, ['x', 'y'], 'naive', {'level': 0.2})
        self.assertEqual(metrics.absent, [('naive', 'y')])
        self.assertRaises(KeyError, metrics.rmse, 'naive', 'y')
        self.assertEqual(metrics.to_csv(), '# level = 0.2\nmodel,variable,rmse\nnaive,x,0.5\nnaive,y,\n')
        self.assertTrue(np.isnan(metrics.to_frame()['rmse'][1]))
        self.assertIn('absent', metrics.to_text())

    def test_order_invariance(self):
        rng = np.random.default_rng(0)
        windows = [window(rng.normal(size=3), rng.random(3) < 0.7) for _ in range(50)]
        predictions = rng.normal(size=(50, 3))
        metrics = rmse_per_variable(predictions, windows, ['a', 'b', 'c'])
        order = rng.permutation(50)
        shuffled = rmse_per_variable(predictions[order], [windows[i] for i in order], ['a', 'b', 'c'])
        self.assertEqual(metrics, shuffled)

    def test_loop_oracle(self):
        rng = np.random.default_rng(1)
        windows = [window(rng.normal(size=4), rng.random(4) < 0.8) for _ in range(10)]
        predictions = rng.normal(size=(10, 4))
        metrics = rmse_per_variable(predictions, windows, list('abcd'))
        for k, name in enumerate('abcd'):
            total, count = 0.0, 0
            for j in range(10):
                if windows[j].target_mask[k]:
                    total += (predictions[j, k] - windows[j].targets[k]) ** 2
                    count += 1
            if count:
                self.assertLess(abs(metrics.rmse('model', name) - math.sqrt(total / count)), 1e-12)

    def test_extend(self):
        first = rmse_per_variable(self.predictions, self.windows, ['x', 'y'], 'sert')
        first.extend(rmse_per_variable(self.predictions, self.windows, ['x', 'y'], 'naive'))
        self.assertEqual(first.models(), ['sert', 'naive'])
        self.assertEqual(len(first.to_frame()), 4)


class TestImportance(unittest.TestCase):

    def forecaster(self, n_targets=2, seed=0):
        vocabulary = VariableVocabulary(['site.v%d' % i for i in range(n_targets)], (), LocationMode.A)
        config = ModelConfig(d=n_targets, n_heads=1, k=1, n_max=3, n_targets=n_targets, lookback=3,
                             horizon=1, location_mode=LocationMode.A)
        stats = NormalizationStats(np.zeros(n_targets), np.ones(n_targets))
        return Forecaster.create(ModelKind.SSTANN, config, vocabulary, stats, seed)

    def hand_set(self, weights):
        """
        One-hot triplet embeddings, so that the contribution of a triplet
        of variable ``f`` at any position is ``weights[f]``.
        """
        forecaster = self.forecaster()
        params = forecaster.params
        params['variable_embedding'].data[...] = np.eye(2)
        for prefix in ('cve_time', 'cve_value'):
            params[prefix + '.output_weight'].data[...] = 0.0
            params[prefix + '.output_bias'].data[...] = 0.0
        params['head.weight'].data[...] = np.array(weights, dtype=np.float64)
        return forecaster

    def windows(self):
        return [SampleWindow([0, 1], [0, 1], [0.3, 0.7], [0.0, 0.0], [True, True]),
                SampleWindow([2], [1], [1.5], [0.0, 0.0], [True, True]),
                SampleWindow([0, 1, 2], [0, 0, 1], [1.0, -1.0, 0.2], [0.0, 0.0], [True, True])]

    def test_shares(self):
        forecaster = self.hand_set([[1.0, 1.0], [3.0, 3.0]])
        report = importance_index(forecaster, self.windows())
        for target in ('site.v0', 'site.v1'):
            self.assertAlmostEqual(report.importance('site.v0', target), 25.0, places=12)
            self.assertAlmostEqual(report.importance('site.v1', target), 75.0, places=12)
            self.assertAlmostEqual(report.row('site.v1', target)[2], 3.0, places=12)

    def test_signed(self):
        forecaster = self.hand_set([[1.0, 1.0], [-3.0, -3.0]])
        report = importance_index(forecaster, self.windows(), targets=['site.v1'])
        self.assertEqual(report.targets(), ['site.v1'])
        self.assertAlmostEqual(report.signed('site.v1', 'site.v1'), -75.0, places=12)
        self.assertAlmostEqual(report.signed('site.v0', 'site.v1'), 25.0, places=12)

    def test_contribution_table(self):
        forecaster = self.hand_set([[1.0, 2.0], [3.0, 4.0]])
        frame = contribution_table(forecaster, self.windows())
        self.assertEqual(list(frame.columns), list(CONTRIBUTION_COLUMNS))
        self.assertEqual(len(frame), (2 + 1 + 3) * 2)

        last = frame[frame['window'] == 2]
        self.assertEqual(list(last['position']), [0, 0, 1, 1, 2, 2])
        self.assertEqual(list(last['variable']), ['site.v0'] * 4 + ['site.v1'] * 2)
        self.assertEqual(list(last['time']), [0, 0, 1, 1, 2, 2])
        self.assertEqual(list(last['value']), [1.0, 1.0, -1.0, -1.0, 0.2, 0.2])
        self.assertEqual(list(last['target']), ['site.v0', 'site.v1'] * 3)
        self.assertEqual(list(last['contribution']), [1.0, 2.0, 1.0, 2.0, 3.0, 4.0])
        self.assertEqual(list(last['bias']), [0.0] * 6)

    def test_contributions_add_up(self):
        rng = np.random.default_rng(4)
        forecaster = self.forecaster(n_targets=3, seed=2)
        forecaster.params['head.bias'].data[...] = [0.5, -1.0, 2.0]
        windows = [SampleWindow(*self.random_triplets(rng), targets=np.zeros(3), target_mask=np.ones(3, dtype=bool))
                   for _ in range(6)]
        frame = contribution_table(forecaster, windows)
        sums = frame.groupby(['window', 'target'])['contribution'].sum()
        bias = frame.groupby(['window', 'target'])['bias'].first()
        predicted = forecaster.predict(windows)
        for j in range(len(windows)):
            for k, name in enumerate(forecaster.vocabulary.names):
                self.assertLess(abs(sums[(j, name)] + bias[(j, name)] - predicted[j, k]), 1e-9)

    def test_uniform(self):
        forecaster = self.hand_set(np.zeros((2, 2)))
        report = importance_index(forecaster, self.windows())
        self.assertEqual(report.importance('site.v0', 'site.v0'), 50.0)
        self.assertEqual(report.signed('site.v1', 'site.v0'), 50.0)

    def test_total(self):
        rng = np.random.default_rng(3)
        forecaster = self.forecaster(n_targets=3, seed=5)
        windows = [SampleWindow(*self.random_triplets(rng), targets=np.zeros(3), target_mask=np.ones(3, dtype=bool))
                   for _ in range(20)]
        report = importance_index(forecaster, windows)
        for target in report.targets():
            self.assertLess(abs(report.total(target) - 100.0), 1e-9)
        for row in report.rows:
            self.assertEqual(abs(row[4]), row[3])

    def random_triplets(self, rng):
        size = int(rng.integers(1, 4))
        cells = np.sort(rng.choice(9, size=size, replace=False))
        return cells // 3, cells % 3, rng.normal(size=size)

    def test_scale_invariance(self):
        forecaster = self.forecaster(seed=2)
        windows = self.windows()
        report = importance_index(forecaster, windows)
        forecaster.params['head.weight'].data *= 4.0
        scaled = importance_index(forecaster, windows)
        for row, other in zip(report.rows, scaled.rows):
            self.assertLess(abs(row[3] - other[3]), 1e-12)
            self.assertLess(abs(4.0 * row[2] - other[2]), 1e-12)

    def test_single_window_oracle(self):
        forecaster = self.forecaster(seed=4)
        sample = self.windows()[2]
        report = importance_index(forecaster, [sample])
        weight = forecaster.params['head.weight'].data
        contributions = {0: [], 1: []}
        for i, triplet in enumerate(sample.triplets()):
            e = embed_triplet(triplet, forecaster.vocabulary, forecaster.stats, forecaster.params, 3).data
            contributions[triplet.f].append(e @ weight[i])
        means = dict((f, np.mean(c, axis=0)) for f, c in contributions.items())
        for k in range(2):
            total = abs(means[0][k]) + abs(means[1][k])
            for f in range(2):
                name, target = 'site.v%d' % f, 'site.v%d' % k
                self.assertLess(abs(report.row(name, target)[2] - means[f][k]), 1e-12)
                self.assertLess(abs(report.importance(name, target) - abs(means[f][k]) / total * 100), 1e-9)

    def test_excluded(self):
        forecaster = self.forecaster(n_targets=3)
        windows = [SampleWindow([0, 1], [0, 1], [0.3, 0.7], np.zeros(3), np.ones(3, dtype=bool))]
        report = importance_index(forecaster, windows, metadata={'split': 'test'})
        self.assertEqual(report.excluded, ['site.v2'])
        self.assertEqual(len(report.rows), 2 * 3)
        text = report.to_csv()
        self.assertTrue(text.startswith('# split = test\n# excluded = site.v2\n'))
        self.assertIn('predictor,target,mean_contribution,importance,signed_importance\n', text)
        self.assertIn('excluded', report.to_text())

    def test_bare_name(self):
        vocabulary = VariableVocabulary.from_pairs([('north', 'x'), ('south', 'x'), ('north', 'y')],
                                                   LocationMode.A)
        config = ModelConfig(d=3, n_heads=1, k=1, n_max=3, n_targets=3, lookback=2, horizon=1,
                             location_mode=LocationMode.A)
        forecaster = Forecaster.create(ModelKind.SSTANN, config, vocabulary,
                                       NormalizationStats(np.zeros(3), np.ones(3)), 0)
        windows = [SampleWindow([0, 0, 1], [0, 1, 2], [0.1, 0.2, 0.3], np.zeros(3), np.ones(3, dtype=bool))]
        report = importance_index(forecaster, windows, predictors=['x', 'north.y'])
        for target in vocabulary.names:
            self.assertLess(abs(report.importance('x', target) + report.importance('north.y', target) - 100), 1e-9)

    def test_sert_refused(self):
        vocabulary = VariableVocabulary(['site.v0', 'site.v1'], (), LocationMode.A)
        config = ModelConfig(d=2, n_heads=1, k=1, n_max=3, n_targets=2, lookback=3, horizon=1,
                             location_mode=LocationMode.A)
        forecaster = Forecaster.create(ModelKind.SERT, config, vocabulary,
                                       NormalizationStats(np.zeros(2), np.ones(2)), 0)
        with self.assertRaises(UsageError) as cm:
            importance_index(forecaster, self.windows())
        self.assertEqual(cm.exception.error_subcode, UsageError.MODEL_MISMATCH)


TINY = dict(d=4, n_heads=1, k=1, lookback=4, horizon=1, max_epochs=2, patience=1, batch_size=64,
            test_steps=100)


class TestSweep(unittest.TestCase):

    def test_replay(self):
        spec = SimulationSpec(n_steps=300)
        config = Config(**TINY)
        first = sparsity_sweep(spec, levels=(0.5, 0.0), config=config)
        second = sparsity_sweep(spec, levels=(0.0, 0.5), config=config)
        self.assertEqual(list(first), [(0.0, 0), (0.5, 0)])
        self.assertEqual(first, second)
        for key, table in first.items():
            self.assertEqual(first[key].to_csv(), second[key].to_csv())
            self.assertEqual(table.models(), list(DEFAULT_MODELS))
            self.assertEqual(len(table.rows), 3 * 16)
            self.assertEqual(table.absent, [])

        dense = first[(0.0, 0)].metadata
        self.assertEqual(dense['input_records'], 16 * 300)
        self.assertEqual((dense['train_windows'], dense['val_windows'], dense['test_windows']), (176, 16, 96))
        self.assertEqual(dense['rejected_windows'], 0)
        sparse = first[(0.5, 0)].metadata
        self.assertEqual(sparse['input_records'], 8 * 300)
        self.assertEqual(sparse['train_windows'] + sparse['val_windows'] + sparse['test_windows'] +
                         sparse['rejected_windows'], 176 + 16 + 96)
        self.assertEqual(sparse['config'], dense['config'])

    def test_one_step_ahead_by_default(self):
        results = sparsity_sweep(SimulationSpec(n_steps=300), levels=(0.0,), models=(ModelKind.NAIVE,),
                                 config=Config(test_steps=100))
        # lookback 10, horizon 1
        self.assertEqual(results[(0.0, 0)].metadata['test_windows'], 100 - 10 - 1 + 1)

        results = sparsity_sweep(SimulationSpec(n_steps=300), levels=(0.0,), models=(ModelKind.NAIVE,),
                                 config=Config(test_steps=100, horizon=3))
        self.assertEqual(results[(0.0, 0)].metadata['test_windows'], 100 - 10 - 3 + 1)

    def test_sweep_config(self):
        config = sweep_config()
        self.assertEqual((config['lookback'], config['horizon']), (10, 1))
        self.assertEqual(config['d'], Config()['d'])
        config = sweep_config(Config(horizon=7, lookback=4))
        self.assertEqual((config['lookback'], config['horizon']), (4, 7))
        self.assertEqual(sweep_config(config), config)

    def test_bad_level(self):
        with self.assertRaises(UsageError):
            sparsity_sweep(SimulationSpec(n_steps=300), levels=(0.0, 1.0))

    def test_error_names_cell(self):
        config = Config(**TINY).update({'test_steps': 400})
        with self.assertRaises(SertError) as cm:
            sparsity_sweep(SimulationSpec(n_steps=300), levels=(0.2,), models=(ModelKind.NAIVE,),
                           seeds=(3,), config=config)
        self.assertIn('level 0.2, seed 3', str(cm.exception))

    @unittest.skipUnless(os.environ.get('PYSERT_SLOW'), 'set PYSERT_SLOW to run the desk-scale sweep')
    def test_desk_scale(self):
        config = Config(d=32, n_heads=4, k=2, lookback=10, horizon=1, test_steps=1000)
        results = sparsity_sweep(SimulationSpec(n_steps=8000), levels=(0.0, 0.8), seeds=(0, 1),
                                 config=config)

        def overall(level, model):
            return np.mean([results[(level, seed)].overall(model) for seed in (0, 1)])

        for model in (ModelKind.SERT, ModelKind.SSTANN):
            self.assertLess(overall(0.0, model), overall(0.0, ModelKind.NAIVE))
            self.assertGreaterEqual(overall(0.8, model), overall(0.0, model))


if __name__ == '__main__':
    unittest.main()
