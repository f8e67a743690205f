# encoding: utf-8
"""
Triplet encoding.

An observation is a triplet ``(t, f, v)``: a time offset inside the
lookback window, a variable id and a value. Each part is embedded in
``R^d`` and the three embeddings are summed::

    e = e^f + e^t + e^v

``e^f`` comes from a lookup table, ``e^t`` and ``e^v`` from two separate
Continuous Value Embeddings (CVE), one hidden layer with a tanh::

    cve(x) = tanh(x . W_hidden + b_hidden) . W_out + b_out

with a hidden width of ``ceil(sqrt(d))``.
"""
import math
from collections import namedtuple

import numpy as np

from pysert.sert.error import DataError
from pysert.sert.mode import LocationMode
from pysert.sert.tensor import Tensor, add, matmul, reshape, take, tanh


STD_FLOOR = 1e-8
TABLE_STDDEV = 0.02


class Triplet(namedtuple('Triplet', 't f v')):

    """
    One observation: time offset ``t`` (hours since the window start),
    variable id ``f`` and value ``v``. Missing observations are absent,
    never encoded.
    """

    __slots__ = ()

    def validate(self, vocabulary, lookback):
        if not 0 <= self.t < lookback:
            raise DataError(DataError.UNSPECIFIC, 'triplet time %r outside [0, %d)' % (self.t, lookback))
        if not 0 <= self.f < len(vocabulary):
            raise DataError(DataError.UNKNOWN_VARIABLE, 'variable id %r' % (self.f,))
        if not np.isfinite(self.v):
            raise DataError(DataError.UNSPECIFIC, 'non finite value %r' % (self.v,))


def canonicalize(triplets):
    """
    Sort triplets by (t, f) and keep the first occurrence of any
    duplicated (t, f) pair.
    """
    seen = set()
    result = []
    for triplet in sorted(triplets, key=lambda tr: (tr.t, tr.f)):
        key = (triplet.t, triplet.f)
        if key in seen:
            continue
        seen.add(key)
        result.append(triplet)
    return result


def composite_name(location, variable):
    return '%s.%s' % (location, variable)


class VariableVocabulary(object):

    """
    Ordered variable names, and in mode B the ordered location names.

    In mode A each name is a composite ``{location}.{variable}``, in mode
    B it is the bare variable name. Ids are positions in these lists.
    """

    def __init__(self, names, locations=(), mode=LocationMode.A):
        self.names = list(names)
        self.locations = list(locations)
        self.mode = mode
        if len(set(self.names)) != len(self.names):
            raise DataError(DataError.UNSPECIFIC, 'duplicated variable names')
        if len(set(self.locations)) != len(self.locations):
            raise DataError(DataError.UNSPECIFIC, 'duplicated location names')
        self._index = dict((name, i) for i, name in enumerate(self.names))
        self._location_index = dict((name, i) for i, name in enumerate(self.locations))

    def __len__(self):
        return len(self.names)

    def __eq__(self, other):
        return (isinstance(other, VariableVocabulary) and self.mode == other.mode and
                self.names == other.names and self.locations == other.locations)

    def __repr__(self):
        return 'VariableVocabulary(mode=%s, %d variables, %d locations)' % (
            self.mode, len(self.names), len(self.locations))

    @classmethod
    def from_pairs(cls, pairs, mode):
        """
        Build the vocabulary from ``(location, variable)`` pairs. Names
        are sorted so the same data always gives the same ids.
        """
        pairs = set(pairs)
        if mode == LocationMode.A:
            return cls(sorted(composite_name(l, v) for l, v in pairs), (), mode)
        return cls(sorted(set(v for _, v in pairs)), sorted(set(l for l, _ in pairs)), mode)

    def index(self, name):
        try:
            return self._index[name]
        except KeyError:
            raise DataError(DataError.UNKNOWN_VARIABLE, name)

    def location_index(self, name):
        try:
            return self._location_index[name]
        except KeyError:
            raise DataError(DataError.UNKNOWN_LOCATION, name)

    def variable_of(self, index):
        """
        Bare variable name of an id, whatever the mode.
        """
        name = self.names[index]
        if self.mode == LocationMode.A:
            return name.split('.', 1)[1]
        return name

    def matching(self, name):
        """
        Ids whose full name is ``name``, or, in mode A, whose bare
        variable name is ``name``.
        """
        if name in self._index:
            return [self._index[name]]
        found = [i for i in range(len(self.names)) if self.variable_of(i) == name]
        if not found:
            raise DataError(DataError.UNKNOWN_VARIABLE, name)
        return found

    def as_dict(self):
        return {'mode': self.mode, 'names': list(self.names), 'locations': list(self.locations)}

    @classmethod
    def from_dict(cls, d):
        return cls(d['names'], d['locations'], d['mode'])

    def check_compatible(self, other):
        if self != other:
            raise DataError(DataError.VOCABULARY_MISMATCH,
                            'model has %r, data has %r' % (self, other))


class NormalizationStats(object):

    """
    Per-variable mean and standard deviation, computed on the training
    split only. A variable never seen in training gets mean 0, std 1.
    """

    def __init__(self, mean, std):
        self.mean = np.asarray(mean, dtype=np.float64)
        self.std = np.maximum(np.asarray(std, dtype=np.float64), STD_FLOOR)

    def __eq__(self, other):
        return (isinstance(other, NormalizationStats) and
                np.array_equal(self.mean, other.mean) and np.array_equal(self.std, other.std))

    @classmethod
    def compute(cls, f, v, size):
        """
        :param f: Variable ids of the training observations.
        :param v: Their values.
        :param int size: Vocabulary size.
        """
        f = np.asarray(f, dtype=np.intp)
        v = np.asarray(v, dtype=np.float64)
        mean = np.zeros(size)
        std = np.ones(size)
        for i in range(size):
            values = v[f == i]
            if not len(values):
                continue
            if values.min() == values.max():
                mean[i], std[i] = values[0], 0.0
            else:
                mean[i], std[i] = values.mean(), values.std()
        return cls(mean, std)

    def as_dict(self):
        return {'mean': self.mean.tolist(), 'std': self.std.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d['mean'], d['std'])


def normalize_inputs(t, v, f, stats, lookback):
    """
    Return ``(t / L, (v - mean_f) / std_f)``. Works on scalars or arrays.
    """
    t_norm = np.asarray(t, dtype=np.float64) / float(lookback)
    f = np.asarray(f, dtype=np.intp)
    v_norm = (np.asarray(v, dtype=np.float64) - stats.mean[f]) / stats.std[f]
    return t_norm, v_norm


def hidden_width(d):
    return int(math.ceil(math.sqrt(d)))


def init_cve(params, prefix, d, rng):
    """
    Register one CVE under ``prefix`` with Uniform(+-1/sqrt(fan_in)) weights.
    """
    width = hidden_width(d)
    params.add(prefix + '.hidden_weight', rng.uniform(-1.0, 1.0, (1, width)))
    params.add(prefix + '.hidden_bias', rng.uniform(-1.0, 1.0, (width,)))
    bound = 1.0 / math.sqrt(width)
    params.add(prefix + '.output_weight', rng.uniform(-bound, bound, (width, d)))
    params.add(prefix + '.output_bias', rng.uniform(-bound, bound, (d,)))


def cve(x, params, prefix):
    """
    Continuous Value Embedding of every entry of ``x``.

    :param x: Tensor or array of any shape ``S``.
    :return: Tensor of shape ``S + (d,)``.
    """
    x = x if isinstance(x, Tensor) else Tensor(x)
    shape = x.shape
    column = reshape(x, shape + (1, 1))
    hidden = tanh(add(matmul(column, params[prefix + '.hidden_weight']),
                      params[prefix + '.hidden_bias']))
    out = add(matmul(hidden, params[prefix + '.output_weight']), params[prefix + '.output_bias'])
    return reshape(out, shape + (out.shape[-1],))


def init_encoding(params, vocabulary, d, rng):
    params.add('variable_embedding', rng.normal(0.0, TABLE_STDDEV, (len(vocabulary), d)))
    init_cve(params, 'cve_time', d, rng)
    init_cve(params, 'cve_value', d, rng)
    if vocabulary.mode == LocationMode.B:
        params.add('location_embedding', rng.normal(0.0, TABLE_STDDEV, (len(vocabulary.locations), d)))


def embed_triplet(triplet, vocabulary, stats, params, lookback):
    """
    Embedding of one triplet, ``e^f + e^t + e^v``.
    """
    if not 0 <= triplet.f < len(vocabulary):
        raise DataError(DataError.UNKNOWN_VARIABLE, 'variable id %r' % (triplet.f,))
    t_norm, v_norm = normalize_inputs(triplet.t, triplet.v, triplet.f, stats, lookback)
    variable = take(params['variable_embedding'], triplet.f)
    return add(add(variable, cve(t_norm, params, 'cve_time')), cve(v_norm, params, 'cve_value'))


def embed_location(location, vocabulary, params):
    """
    Lookup of the location embedding (mode B only).
    """
    if vocabulary.mode != LocationMode.B:
        raise DataError(DataError.UNKNOWN_LOCATION, 'no location embedding in mode %s' % vocabulary.mode)
    location = np.asarray(location, dtype=np.intp)
    if np.any(location < 0) or np.any(location >= len(vocabulary.locations)):
        raise DataError(DataError.UNKNOWN_LOCATION, 'location id %r' % (location.tolist(),))
    return take(params['location_embedding'], location)
