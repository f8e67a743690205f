"""
Unit tests for SERT, SST-ANN and the forecaster checkpoint
"""
import os
import sys
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), '..'))
import shutil
import struct
import tempfile
import unittest

import numpy as np

from pysert.sert.data.window import SampleWindow
from pysert.sert.encoding import NormalizationStats, Triplet, VariableVocabulary
from pysert.sert.error import DataError, UsageError
from pysert.sert.mode import LocationMode, ModelKind
from pysert.sert.model import *
from pysert.sert.model.window import TripletBatch
from pysert.sert.tensor import backward


def random_windows(rng, count, n_targets, lookback, n_locations=0, max_triplets=None):
    """
    Windows with 1 to ``max_triplets`` distinct random triplets each.
    """
    windows = []
    cells = lookback * n_targets
    for _ in range(count):
        size = int(rng.integers(1, (max_triplets or cells) + 1))
        chosen = np.sort(rng.choice(cells, size=size, replace=False))
        location = int(rng.integers(n_locations)) if n_locations else None
        windows.append(SampleWindow(chosen // n_targets, chosen % n_targets, rng.normal(size=size),
                                    rng.normal(size=n_targets), rng.random(n_targets) < 0.7,
                                    location, 0))
    return windows


def mode_a(n):
    return VariableVocabulary(['site.v%d' % i for i in range(n)], (), LocationMode.A)


def mode_b(n, locations):
    return VariableVocabulary(['v%d' % i for i in range(n)], ['loc%d' % i for i in range(locations)],
                              LocationMode.B)


def identity_stats(n):
    return NormalizationStats(np.zeros(n), np.ones(n))


class TestModelConfig(unittest.TestCase):

    def test_divisible(self):
        with self.assertRaises(UsageError) as cm:
            ModelConfig(d=10, n_heads=4)
        self.assertEqual(cm.exception.error_subcode, UsageError.BAD_CONFIG)
        self.assertIn('divisible', str(cm.exception))

    def test_bad_values(self):
        for changes in ({'k': 0}, {'dropout': 1.0}, {'location_mode': 'C'}, {'horizon': 0}):
            with self.assertRaises(UsageError):
                ModelConfig(d=8, n_heads=2, **changes)

    def test_dict(self):
        config = ModelConfig(d=8, n_heads=2, k=1, n_max=5, n_targets=3, location_mode=LocationMode.A)
        self.assertEqual(ModelConfig.from_dict(config.as_dict()), config)
        self.assertEqual(config.head_dim, 4)

    def test_from_config(self):
        from pysert.sert.config import Config
        config = ModelConfig.from_config(Config(d=8, n_heads=2, lookback=4), mode_b(3, 2))
        self.assertEqual(config.n_max, 12)
        self.assertEqual(config.n_targets, 3)
        self.assertEqual(config.location_mode, LocationMode.B)


class ModelCase(object):

    kind = ModelKind.SERT
    vocabulary = mode_a(3)

    def setUp(self):
        self.rng = np.random.default_rng(11)
        n = len(self.vocabulary)
        self.config = ModelConfig(d=8, n_heads=2, k=1, n_max=5, n_targets=n, lookback=4, horizon=1,
                                  location_mode=self.vocabulary.mode, dropout=0.1)
        self.stats = identity_stats(n)
        self.forecaster = Forecaster.create(self.kind, self.config, self.vocabulary, self.stats, seed=2)
        self.windows = random_windows(self.rng, 6, n, 4, len(self.vocabulary.locations))

    def mutate_padding(self, batch):
        padded = ~batch.mask
        f, t, v = batch.f.copy(), batch.t_norm.copy(), batch.v_norm.copy()
        f[padded] = self.rng.integers(len(self.vocabulary), size=padded.sum())
        t[padded] = self.rng.normal(size=padded.sum())
        v[padded] = self.rng.normal(size=padded.sum()) * 100
        return TripletBatch(f, t, v, batch.mask, batch.location, batch.targets, batch.target_mask)

    def grads(self, batch):
        from pysert.sert.training import masked_mse
        params = self.forecaster.params
        params.zero_grads()
        pred, _ = self.forecaster.forward(batch)
        loss = masked_mse(pred, batch.targets, batch.target_mask)
        backward(loss)
        return pred.data, float(loss.data), [p.grad.copy() for p in params.tensors()]

    def test_output_shape(self):
        batch = self.forecaster.batch(self.windows)
        pred, _ = self.forecaster.forward(batch)
        self.assertEqual(pred.shape, (6, len(self.vocabulary)))

    def test_padding_invariance(self):
        for _ in range(20):
            windows = random_windows(self.rng, 4, len(self.vocabulary), 4,
                                     len(self.vocabulary.locations), max_triplets=4)
            batch = self.forecaster.batch(windows)
            pred, loss, grads = self.grads(batch)
            other_pred, other_loss, other_grads = self.grads(self.mutate_padding(batch))
            np.testing.assert_array_equal(pred, other_pred)
            self.assertEqual(loss, other_loss)
            for g, h in zip(grads, other_grads):
                np.testing.assert_array_equal(g, h)

    def test_masked_targets_invisible(self):
        batch = self.forecaster.batch(self.windows)
        _, loss, grads = self.grads(batch)
        targets = batch.targets.copy()
        targets[~batch.target_mask] = 1e6
        changed = TripletBatch(batch.f, batch.t_norm, batch.v_norm, batch.mask, batch.location,
                               targets, batch.target_mask)
        _, other_loss, other_grads = self.grads(changed)
        self.assertEqual(loss, other_loss)
        for g, h in zip(grads, other_grads):
            np.testing.assert_array_equal(g, h)

    def test_triplet_order_ignored(self):
        for window in random_windows(self.rng, 10, len(self.vocabulary), 4, len(self.vocabulary.locations)):
            triplets = [Triplet(int(t), int(f), float(v)) for t, f, v in zip(window.t, window.f, window.v)]
            shuffled = [triplets[i] for i in self.rng.permutation(len(triplets))]
            ordered = SampleWindow.from_triplets(triplets, window.targets, window.target_mask, window.location)
            mixed = SampleWindow.from_triplets(shuffled, window.targets, window.target_mask, window.location)
            self.assertEqual(ordered, mixed)
            np.testing.assert_array_equal(self.forecaster.predict([ordered]), self.forecaster.predict([mixed]))

    def test_truncation(self):
        window = SampleWindow(np.repeat(np.arange(4), 3), np.tile(np.arange(3), 4), np.arange(12.0),
                              np.zeros(3), np.ones(3, dtype=bool),
                              0 if self.vocabulary.locations else None)
        batch = self.forecaster.batch([window])
        self.assertTrue(batch.mask.all())
        # the 5 most recent triplets
        np.testing.assert_array_equal(batch.v_norm[0], np.arange(7.0, 12.0))

    def test_pack_unpack(self):
        msg = self.forecaster.pack()
        self.assertEqual(msg[:8], b'PYSERTCK')
        version, length = struct.unpack('!BI', msg[8:13])
        self.assertEqual(version, 1)
        other = Forecaster.unpack(msg)
        self.assertEqual(other.kind, self.kind)
        self.assertEqual(other.config, self.config)
        self.assertEqual(other.vocabulary, self.vocabulary)
        self.assertEqual(other.stats, self.stats)
        self.assertEqual(other.params, self.forecaster.params)
        self.assertEqual(other.pack(), msg)
        np.testing.assert_array_equal(other.predict(self.windows), self.forecaster.predict(self.windows))

    def test_save_load(self):
        directory = tempfile.mkdtemp()
        self.addCleanup(shutil.rmtree, directory)
        path = os.path.join(directory, 'sub', 'model.ckpt')
        self.forecaster.save(path)
        self.assertEqual(Forecaster.load(path).pack(), self.forecaster.pack())

    def test_unpack_bad(self):
        msg = self.forecaster.pack()
        for bad in (b'garbage', msg[:20], msg[:-8]):
            with self.assertRaises(DataError) as cm:
                Forecaster.unpack(bad)
            self.assertEqual(cm.exception.error_subcode, DataError.BAD_CHECKPOINT)

    def test_same_seed_same_weights(self):
        other = Forecaster.create(self.kind, self.config, self.vocabulary, self.stats, seed=2)
        self.assertEqual(other.pack(), self.forecaster.pack())


class TestSert(ModelCase, unittest.TestCase):

    kind = ModelKind.SERT
    vocabulary = mode_a(3)

    def test_contributions_refused(self):
        with self.assertRaises(UsageError) as cm:
            self.forecaster.contributions(self.windows)
        self.assertEqual(cm.exception.error_subcode, UsageError.MODEL_MISMATCH)

    def test_dropout_only_with_rng(self):
        batch = self.forecaster.batch(self.windows)
        first, _ = self.forecaster.forward(batch)
        second, _ = self.forecaster.forward(batch)
        noisy, _ = self.forecaster.forward(batch, np.random.default_rng(0))
        np.testing.assert_array_equal(first.data, second.data)
        self.assertFalse(np.array_equal(first.data, noisy.data))

    def test_attention_weights(self):
        batch = self.forecaster.batch(self.windows)
        window = embed_batch(batch, self.forecaster.params, self.config, self.vocabulary)
        _, weights = attention_block(window.embeddings, window.mask, self.forecaster.params,
                                     'block0', self.config, return_weights=True)
        self.assertEqual(weights.shape, (6, 2, 5, 5))
        np.testing.assert_allclose(weights.data.sum(axis=-1), 1.0)
        self.assertTrue((weights.data[np.broadcast_to(~window.mask[:, None, None, :], weights.shape)] == 0).all())


def layernorm(row, gain, bias):
    centered = row - row.mean()
    return centered / np.sqrt((centered ** 2).mean() + 1e-5) * gain + bias


class TestSertOracle(unittest.TestCase):

    def setUp(self):
        rng = np.random.default_rng(4)
        self.vocabulary = mode_a(2)
        self.config = ModelConfig(d=4, n_heads=2, k=1, n_max=3, n_targets=2, lookback=4, horizon=1,
                                  location_mode=LocationMode.A, dropout=0.0)
        self.forecaster = Forecaster.create(ModelKind.SERT, self.config, self.vocabulary, identity_stats(2), 0)
        for tensor in self.forecaster.params.tensors():
            tensor.data[...] = rng.normal(size=tensor.shape) * 0.5

    def test_forward(self):
        window = SampleWindow([0, 2], [1, 0], [0.4, -1.1], [0.0, 0.0], [True, True])
        batch = self.forecaster.batch([window])
        pred, _ = self.forecaster.forward(batch)
        p = dict((name, t.data) for name, t in self.forecaster.params.items())
        x = embed_batch(batch, self.forecaster.params, self.config, self.vocabulary).embeddings.data[0].copy()
        real = [0, 1]

        normed = [layernorm(x[i], p['block0.norm1.gain'], p['block0.norm1.bias']) for i in range(3)]
        q = [n @ p['block0.attention.query'] for n in normed]
        k = [n @ p['block0.attention.key'] for n in normed]
        v = [n @ p['block0.attention.value'] for n in normed]
        out = np.zeros((3, 4))
        for i in range(3):
            context = np.zeros(4)
            for h in range(2):
                cols = slice(2 * h, 2 * h + 2)
                scores = np.array([q[i][cols] @ k[j][cols] / np.sqrt(2.0) for j in real])
                weights = np.exp(scores - scores.max())
                weights /= weights.sum()
                for w, j in zip(weights, real):
                    context[cols] += w * v[j][cols]
            row = x[i] + context @ p['block0.attention.output']
            n2 = layernorm(row, p['block0.norm2.gain'], p['block0.norm2.bias'])
            hidden = np.maximum(0.0, n2 @ p['block0.ffn.weight1'] + p['block0.ffn.bias1'])
            out[i] = row + hidden @ p['block0.ffn.weight2'] + p['block0.ffn.bias2']
        out[2] = 0.0

        flat = out.ravel()
        hidden = np.maximum(0.0, flat @ p['head.hidden_weight'] + p['head.hidden_bias'])
        expected = hidden @ p['head.output_weight'] + p['head.output_bias']
        np.testing.assert_allclose(pred.data[0], expected, rtol=1e-10, atol=1e-12)

    def test_block_gradient(self):
        from pysert.sert.tensor import Tensor, central_difference, mul, tensor_sum
        rng = np.random.default_rng(9)
        x = Tensor(rng.normal(size=(2, 3, 4)))
        mask = np.array([[True, True, False], [True, True, True]])
        weights = rng.normal(size=(2, 3, 4))
        params = self.forecaster.params

        def total():
            return tensor_sum(mul(attention_block(x, mask, params, 'block0', self.config), weights))

        params.zero_grads()
        backward(total())
        for name, tensor in params.items():
            if not name.startswith('block0.'):
                continue
            for index in np.ndindex(tensor.shape):
                numeric = central_difference(lambda: float(total().data), tensor.data, index, 1e-6)
                self.assertLess(abs(tensor.grad[index] - numeric), 1e-4 * max(1.0, abs(numeric)),
                                '%s%s' % (name, index))


class TestSertModeB(ModelCase, unittest.TestCase):

    kind = ModelKind.SERT
    vocabulary = mode_b(3, 2)

    def test_location_matters(self):
        windows = random_windows(self.rng, 1, 3, 4)
        first = SampleWindow(windows[0].t, windows[0].f, windows[0].v, windows[0].targets,
                             windows[0].target_mask, 0)
        second = SampleWindow(windows[0].t, windows[0].f, windows[0].v, windows[0].targets,
                              windows[0].target_mask, 1)
        pred = self.forecaster.predict([first, second])
        self.assertFalse(np.array_equal(pred[0], pred[1]))


class TestSstann(ModelCase, unittest.TestCase):

    kind = ModelKind.SSTANN
    vocabulary = mode_a(3)

    def test_decomposition(self):
        windows = random_windows(self.rng, 1000, 3, 4)
        contributions, bias, batch = self.forecaster.contributions(windows)
        pred, _ = self.forecaster.forward(batch)
        total = contributions.sum(axis=1) + bias
        self.assertLess(np.abs(pred.data - total).max(), 1e-9)
        # padded positions contribute exactly zero
        self.assertTrue((contributions[~batch.mask] == 0.0).all())

    def test_contribution_oracle(self):
        from pysert.sert.encoding import embed_triplet
        window = random_windows(self.rng, 1, 3, 4, max_triplets=5)[0]
        contributions, _, _ = self.forecaster.contributions([window])
        weight = self.forecaster.params['head.weight'].data
        for i, triplet in enumerate(window.triplets()):
            e = embed_triplet(triplet, self.vocabulary, self.stats, self.forecaster.params, 4).data
            np.testing.assert_allclose(contributions[0, i], e @ weight[i], rtol=1e-12, atol=1e-14)


class TestSstannModeB(ModelCase, unittest.TestCase):

    kind = ModelKind.SSTANN
    vocabulary = mode_b(3, 2)

    def test_decomposition(self):
        windows = random_windows(self.rng, 200, 3, 4, 2)
        contributions, bias, batch = self.forecaster.contributions(windows)
        pred, _ = self.forecaster.forward(batch)
        self.assertLess(np.abs(pred.data - (contributions.sum(axis=1) + bias)).max(), 1e-9)
        self.assertIn('head.location_weight', self.forecaster.params)


class TestForecasterErrors(unittest.TestCase):

    def test_unknown_kind(self):
        config = ModelConfig(d=8, n_heads=2, k=1, n_max=5, n_targets=3, location_mode=LocationMode.A)
        with self.assertRaises(UsageError):
            Forecaster.create('lstm', config, mode_a(3), identity_stats(3), 0)

    def test_mismatch(self):
        config = ModelConfig(d=8, n_heads=2, k=1, n_max=5, n_targets=4, location_mode=LocationMode.A)
        with self.assertRaises(UsageError) as cm:
            Forecaster.create(ModelKind.SSTANN, config, mode_a(3), identity_stats(3), 0)
        self.assertEqual(cm.exception.error_subcode, UsageError.MODEL_MISMATCH)


if __name__ == '__main__':
    unittest.main()
