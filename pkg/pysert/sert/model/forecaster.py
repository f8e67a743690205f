# encoding: utf-8
"""
A trained (or trainable) forecaster and its checkpoint file.
"""
import json
import struct

import numpy as np

from pysert.sert.config import Config, substream
from pysert.sert.encoding import NormalizationStats, VariableVocabulary, init_encoding
from pysert.sert.error import DataError, UsageError
from pysert.sert.mode import ModelKind
from pysert.sert.model.config import ModelConfig
from pysert.sert.model.sert import init_sert, sert_forward
from pysert.sert.model.sstann import init_sstann, sstann_bias, sstann_forward
from pysert.sert.model.window import embed_batch, pad_windows
from pysert.sert.output import write_atomic
from pysert.sert.tensor import ParameterStore


class Forecaster(object):

    """
    Model kind, architecture, vocabulary, normalization statistics and
    parameters. Predictions come out in the units of the data, the
    networks themselves work on z-scored targets.

    Checkpoint format::

        +---------------------------------------------------+
        |   Marker "PYSERTCK" (8 octets)                    |
        +---------------------------------------------------+
        |   Format version (1 octet)                        |
        +---------------------------------------------------+
        |   Metadata length (4 octets)                      |
        +---------------------------------------------------+
        |   Metadata, canonical JSON (variable)             |
        +---------------------------------------------------+
        |   ParameterStore (variable)                       |
        +---------------------------------------------------+

    The metadata holds the model kind, the ModelConfig, the run
    configuration, the vocabulary and the normalization statistics.
    """

    MARKER  = b'PYSERTCK'
    VERSION = 1

    def __init__(self, kind, config, vocabulary, stats, params, run_config=None):
        if kind not in ModelKind.TRAINABLE:
            raise UsageError(UsageError.BAD_ARGUMENT, 'unknown model kind %r' % (kind,))
        if config.location_mode != vocabulary.mode or config.n_targets != len(vocabulary):
            raise UsageError(UsageError.MODEL_MISMATCH,
                             '%r does not fit %r' % (config, vocabulary))
        self.kind       = kind
        self.config     = config
        self.vocabulary = vocabulary
        self.stats      = stats
        self.params     = params
        self.run_config = run_config

    @classmethod
    def layout(cls, kind, config, vocabulary, rng):
        params = ParameterStore()
        init_encoding(params, vocabulary, config.d, rng)
        if kind == ModelKind.SERT:
            init_sert(params, config, rng)
        else:
            init_sstann(params, config, rng)
        return params

    @classmethod
    def create(cls, kind, config, vocabulary, stats, seed, run_config=None):
        """
        A freshly initialized forecaster; the ``init`` stream of ``seed``
        draws every initial weight.
        """
        if kind not in ModelKind.TRAINABLE:
            raise UsageError(UsageError.BAD_ARGUMENT, 'unknown model kind %r' % (kind,))
        params = cls.layout(kind, config, vocabulary, substream(seed, 'init'))
        return cls(kind, config, vocabulary, stats, params, run_config)

    def batch(self, windows):
        return pad_windows(windows, self.config, self.stats)

    def forward(self, batch, rng=None):
        """
        :return: ``(predictions, contributions)`` tensors in z-scored
            target units; contributions is None for SERT.
        """
        window = embed_batch(batch, self.params, self.config, self.vocabulary)
        if self.kind == ModelKind.SERT:
            return sert_forward(window, self.params, self.config, rng), None
        return sstann_forward(window, self.params, self.config)

    def denormalize(self, values):
        return values * self.stats.std + self.stats.mean

    def predict(self, windows, batch_size=256):
        """
        Predictions ``(J, K)`` in the units of the data.
        """
        out = np.zeros((len(windows), self.config.n_targets))
        for i in range(0, len(windows), batch_size):
            predictions, _ = self.forward(self.batch(windows[i:i + batch_size]))
            out[i:i + batch_size] = self.denormalize(predictions.data)
        return out

    def contributions(self, windows, batch_size=256):
        """
        Per triplet contributions of an SST-ANN, in z-scored target units.

        :return: ``(contributions (J, n_max, K), bias (J, K), batch)`` where
            ``batch`` gives the variable ids and the mask of each position.
        """
        if self.kind != ModelKind.SSTANN:
            raise UsageError(UsageError.MODEL_MISMATCH,
                             'contributions need an sstann model; SERT has no exact additive decomposition')
        batch = self.batch(windows)
        contributions = np.zeros((len(windows), self.config.n_max, self.config.n_targets))
        bias = np.zeros((len(windows), self.config.n_targets))
        for i in range(0, len(windows), batch_size):
            part = batch.select(slice(i, i + batch_size))
            window = embed_batch(part, self.params, self.config, self.vocabulary)
            _, c = sstann_forward(window, self.params, self.config)
            contributions[i:i + batch_size] = c.data
            bias[i:i + batch_size] = sstann_bias(window, self.params, self.config).data
        return contributions, bias, batch

    def check_vocabulary(self, vocabulary):
        self.vocabulary.check_compatible(vocabulary)

    def metadata(self):
        return {
            'kind': self.kind,
            'model_config': self.config.as_dict(),
            'run_config': self.run_config.as_dict() if self.run_config is not None else None,
            'vocabulary': self.vocabulary.as_dict(),
            'stats': self.stats.as_dict(),
        }

    def pack(self):
        meta = json.dumps(self.metadata(), sort_keys=True, separators=(',', ':')).encode('utf-8')
        result = self.MARKER
        result += struct.pack('!BI', self.VERSION, len(meta))
        result += meta
        result += self.params.pack()
        return result

    @classmethod
    def header_unpack(cls, msg):
        """
        Return the metadata length after checking marker and version.
        """
        if len(msg) < 13 or msg[:8] != cls.MARKER:
            raise DataError(DataError.BAD_CHECKPOINT, 'not a pySERT checkpoint')
        version, length = struct.unpack('!BI', msg[8:13])
        if version != cls.VERSION:
            raise DataError(DataError.BAD_CHECKPOINT, 'format version %d' % version)
        if 13 + length > len(msg):
            raise DataError(DataError.BAD_CHECKPOINT, 'truncated metadata')
        return length

    @classmethod
    def unpack(cls, msg):
        """
        Factory function.
        Return the Forecaster encoded by ``msg``, after checking that its
        parameters fit its configuration.
        """
        msg = bytes(msg)
        length = cls.header_unpack(msg)
        try:
            meta = json.loads(msg[13:13 + length].decode('utf-8'))
            config = ModelConfig.from_dict(meta['model_config'])
            vocabulary = VariableVocabulary.from_dict(meta['vocabulary'])
            stats = NormalizationStats.from_dict(meta['stats'])
            run_config = Config(**meta['run_config']) if meta['run_config'] is not None else None
            kind = meta['kind']
        except (ValueError, KeyError, TypeError) as e:
            raise DataError(DataError.BAD_CHECKPOINT, 'metadata: %s' % e)
        params = ParameterStore.unpack(msg[13 + length:])
        expected = cls.layout(kind, config, vocabulary, np.random.default_rng(0))
        if [(n, t.shape) for n, t in expected.items()] != [(n, t.shape) for n, t in params.items()]:
            raise DataError(DataError.BAD_CHECKPOINT, 'parameters do not match %r' % config)
        return cls(kind, config, vocabulary, stats, params, run_config)

    def save(self, path):
        write_atomic(path, self.pack())

    @classmethod
    def load(cls, path):
        try:
            with open(path, 'rb') as f:
                return cls.unpack(f.read())
        except IOError as e:
            raise DataError(DataError.BAD_CHECKPOINT, '%s: %s' % (path, e))
