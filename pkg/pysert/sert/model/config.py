# encoding: utf-8
from collections import OrderedDict

from pysert.sert.error import UsageError
from pysert.sert.mode import LocationMode


class ModelConfig(object):

    """
    Architecture of a forecaster.

    :param int d: Embedding width.
    :param int n_heads: Attention heads, must divide ``d``.
    :param int k: Number of encoder blocks (SERT only).
    :param int n_max: Maximum number of triplets per window.
    :param int n_targets: Number of target variables K.
    :param int lookback: Input window length L, in hours.
    :param int horizon: Forecast horizon h, in hours.
    :param str location_mode: :py:class:`pysert.sert.mode.LocationMode`.
    :param float dropout: Dropout rate used while fitting.
    """

    FIELDS = ('d', 'n_heads', 'k', 'n_max', 'n_targets', 'lookback', 'horizon',
              'location_mode', 'dropout')

    def __init__(self, d=60, n_heads=6, k=6, n_max=1, n_targets=1, lookback=10, horizon=7,
                 location_mode=LocationMode.B, dropout=0.1):
        self.d             = int(d)
        self.n_heads       = int(n_heads)
        self.k             = int(k)
        self.n_max         = int(n_max)
        self.n_targets     = int(n_targets)
        self.lookback      = int(lookback)
        self.horizon       = int(horizon)
        self.location_mode = location_mode
        self.dropout       = float(dropout)
        self.validate()

    def __eq__(self, other):
        return isinstance(other, ModelConfig) and self.as_dict() == other.as_dict()

    def __repr__(self):
        return 'ModelConfig(%s)' % ', '.join('%s=%r' % item for item in self.as_dict().items())

    def validate(self):
        if self.d < 1 or self.n_heads < 1:
            raise UsageError(UsageError.BAD_CONFIG, 'd and n_heads must be positive')
        if self.d % self.n_heads:
            raise UsageError(UsageError.BAD_CONFIG,
                             'd (%d) must be divisible by n_heads (%d)' % (self.d, self.n_heads))
        if self.k < 1:
            raise UsageError(UsageError.BAD_CONFIG, 'k (%d) must be at least 1' % self.k)
        if self.n_max < 1 or self.n_targets < 1:
            raise UsageError(UsageError.BAD_CONFIG, 'n_max and n_targets must be at least 1')
        if self.lookback < 1 or self.horizon < 1:
            raise UsageError(UsageError.BAD_CONFIG, 'lookback and horizon must be positive')
        if self.location_mode not in LocationMode.ALL:
            raise UsageError(UsageError.BAD_CONFIG, 'location_mode %r' % (self.location_mode,))
        if not 0.0 <= self.dropout < 1.0:
            raise UsageError(UsageError.BAD_CONFIG, 'dropout %r outside [0, 1)' % self.dropout)

    @property
    def head_dim(self):
        return self.d // self.n_heads

    def replace(self, **changes):
        values = self.as_dict()
        values.update(changes)
        return ModelConfig(**values)

    def as_dict(self):
        return OrderedDict((name, getattr(self, name)) for name in self.FIELDS)

    @classmethod
    def from_dict(cls, d):
        return cls(**dict((name, d[name]) for name in cls.FIELDS))

    @classmethod
    def from_config(cls, config, vocabulary):
        """
        Resolve a flat :py:class:`pysert.sert.config.Config` against a
        vocabulary. ``n_max = 0`` becomes ``lookback * len(vocabulary)``.
        """
        n_max = config['n_max'] or config['lookback'] * len(vocabulary)
        return cls(d=config['d'], n_heads=config['n_heads'], k=config['k'], n_max=n_max,
                   n_targets=len(vocabulary), lookback=config['lookback'],
                   horizon=config['horizon'], location_mode=vocabulary.mode,
                   dropout=config['dropout'])
