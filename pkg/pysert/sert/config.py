# encoding: utf-8
"""
Flat key/value configuration and named random streams.

A configuration file looks like::

    # SERT on the buoy data
    d = 60
    n_heads = 6
    location_mode = B

Every key has a typed default, so a resolved configuration never hides
anything: the run manifest stores all of them.
"""
import zlib
from collections import OrderedDict

import numpy as np

from pysert.sert.error import UsageError
from pysert.sert.mode import LocationMode


# key -> (type, default)
DEFAULTS = OrderedDict([
    ('d',              (int,   60)),
    ('n_heads',        (int,   6)),
    ('k',              (int,   6)),
    ('n_max',          (int,   0)),
    ('lookback',       (int,   10)),
    ('horizon',        (int,   7)),
    ('location_mode',  (str,   LocationMode.B)),
    ('dropout',        (float, 0.1)),
    ('learning_rate',  (float, 1e-3)),
    ('batch_size',     (int,   32)),
    ('max_epochs',     (int,   100)),
    ('patience',       (int,   5)),
    ('clip_norm',      (float, 5.0)),
    ('seed',           (int,   0)),
    ('train_fraction', (float, 0.8)),
    ('val_fraction',   (float, 0.1)),
    ('n_steps',        (int,   40000)),
    ('test_steps',     (int,   3000)),
])

STREAMS = ('data', 'sparsify', 'init', 'batching', 'dropout', 'gradcheck')


class Config(object):

    """
    A fully materialized configuration. Values are read with item access::

        config = Config(d=32, n_heads=4)
        config['d']
    """

    def __init__(self, **values):
        self.values = OrderedDict((key, default) for key, (_, default) in DEFAULTS.items())
        # keys given by the caller, as opposed to defaults
        self.explicit = set()
        self.update(values)

    def __getitem__(self, key):
        return self.values[key]

    def __setitem__(self, key, value):
        self.update({key: value})

    def __eq__(self, other):
        return isinstance(other, Config) and self.values == other.values

    def __repr__(self):
        return 'Config(%s)' % ', '.join('%s=%r' % item for item in self.values.items())

    def update(self, values):
        for key, value in values.items():
            self.values[key] = parse_value(key, value)
            self.explicit.add(key)
        return self

    def copy(self):
        other = Config()
        other.values = OrderedDict(self.values)
        other.explicit = set(self.explicit)
        return other

    def with_defaults(self, values):
        """
        Return a copy where every key of ``values`` the caller never set
        takes the value from ``values`` instead of the global default.
        """
        other = self.copy()
        other.update(OrderedDict((key, value) for key, value in values.items() if key not in self.explicit))
        return other

    def as_dict(self):
        return OrderedDict(self.values)

    def pack(self):
        """
        Return the text form of the configuration, one ``key = value``
        line per key, readable back by :py:func:`read_config`.
        """
        return ''.join('%s = %s\n' % (key, value) for key, value in self.values.items())


def parse_value(key, value):
    if key not in DEFAULTS:
        raise UsageError(UsageError.BAD_CONFIG, 'unknown key %r' % key)
    kind = DEFAULTS[key][0]
    if isinstance(value, str):
        value = value.strip()
    try:
        if kind is int and isinstance(value, float):
            if not value.is_integer():
                raise ValueError(value)
            return int(value)
        return kind(value)
    except (TypeError, ValueError):
        raise UsageError(UsageError.BAD_CONFIG, '%s: cannot read %r as %s' % (key, value, kind.__name__))


def parse_text(text):
    values = OrderedDict()
    for number, line in enumerate(text.splitlines(), 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise UsageError(UsageError.BAD_CONFIG, 'line %d: expected key = value' % number)
        key, value = line.split('=', 1)
        values[key.strip()] = value.strip()
    return values


def read_config(path, overrides=None):
    """
    Read a configuration file and apply the overrides on top of it.

    :param path: Path of the file, or None for the defaults only.
    :param dict overrides: Values taking precedence over the file.
    :rtype: Config
    """
    config = Config()
    if path is not None:
        try:
            with open(path, encoding='utf-8') as f:
                config.update(parse_text(f.read()))
        except IOError as e:
            raise UsageError(UsageError.BAD_CONFIG, '%s: %s' % (path, e))
    if overrides:
        config.update(overrides)
    return config


def substream(seed, name, *extra):
    """
    Return an independent random generator for the named stream.
    The same (seed, name, extra) always gives the same generator.
    """
    if name not in STREAMS:
        raise UsageError(UsageError.BAD_ARGUMENT, 'unknown random stream %r' % name)
    key = [int(seed), zlib.crc32(name.encode('ascii'))]
    key.extend(int(e) for e in extra)
    return np.random.default_rng(key)
