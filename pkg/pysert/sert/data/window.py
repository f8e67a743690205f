# encoding: utf-8
"""
Sample windows ``(T_j, Y_j, M_j)``.

For an anchor hour ``a`` the inputs are every observation in
``[a - L, a)`` and the targets are the observations at ``a + h - 1``::

        a-L                 a-1   a          a+h-1
    ----|===== inputs ======|-----|- - - - - -|---->
                                              targets

In mode A there is one window per anchor, over every
``{location}.{variable}`` series. In mode B the series are grouped by
location and there is one window per (anchor, location).
"""
import numpy as np
from twisted.python import log

from pysert.sert.encoding import NormalizationStats, Triplet, composite_name
from pysert.sert.error import DataError, UsageError
from pysert.sert.mode import LocationMode


class Split(object):

    """
    A half-open range of hours ``[start, stop)``.
    """

    def __init__(self, name, start, stop):
        self.name  = name
        self.start = int(start)
        self.stop  = int(stop)

    def __len__(self):
        return max(0, self.stop - self.start)

    def __repr__(self):
        return 'Split(%r, %d, %d)' % (self.name, self.start, self.stop)

    def __contains__(self, timestamp):
        return self.start <= timestamp < self.stop


def split_timeline(start, stop, train_fraction, val_fraction):
    """
    Cut ``[start, stop)`` into train, validation and test ranges. The
    validation range is the last ``val_fraction`` of the training range.
    """
    if not 0.0 < train_fraction <= 1.0 or not 0.0 <= val_fraction < 1.0:
        raise UsageError(UsageError.BAD_CONFIG, 'train_fraction/val_fraction out of range')
    fit_stop = start + int(round((stop - start) * train_fraction))
    val_start = fit_stop - int(round((fit_stop - start) * val_fraction))
    return (Split('train', start, val_start),
            Split('validation', val_start, fit_stop),
            Split('test', fit_stop, stop))


def split_steps(n_steps, test_steps, val_fraction):
    """
    The benchmark layout: the last ``test_steps`` hours are the test range.
    """
    return split_timeline(0, n_steps, float(n_steps - test_steps) / n_steps, val_fraction)


class SampleWindow(object):

    """
    One sample.

    :ivar t: Triplet times (hours since ``anchor - L``), canonical order.
    :ivar f: Triplet variable ids.
    :ivar v: Triplet values.
    :ivar targets: ``K`` target values, 0 where unobserved.
    :ivar target_mask: ``K`` booleans, true where the target is observed.
    :ivar location: Location id in mode B, None in mode A.
    :ivar anchor: Anchor hour.
    """

    def __init__(self, t, f, v, targets, target_mask, location=None, anchor=0):
        self.t           = np.asarray(t, dtype=np.int64)
        self.f           = np.asarray(f, dtype=np.intp)
        self.v           = np.asarray(v, dtype=np.float64)
        self.targets     = np.asarray(targets, dtype=np.float64)
        self.target_mask = np.asarray(target_mask, dtype=bool)
        self.location    = location
        self.anchor      = int(anchor)

    def __len__(self):
        return len(self.t)

    def __eq__(self, other):
        return (isinstance(other, SampleWindow) and self.location == other.location and
                self.anchor == other.anchor and
                all(np.array_equal(getattr(self, n), getattr(other, n))
                    for n in ('t', 'f', 'v', 'targets', 'target_mask')))

    def __repr__(self):
        return 'SampleWindow(anchor=%d, location=%r, %d triplets)' % (self.anchor, self.location, len(self))

    @property
    def group(self):
        return self.location or 0

    def triplets(self):
        return [Triplet(int(t), int(f), float(v)) for t, f, v in zip(self.t, self.f, self.v)]

    @classmethod
    def from_triplets(cls, triplets, targets, target_mask, location=None, anchor=0):
        from pysert.sert.encoding import canonicalize
        triplets = canonicalize(triplets)
        return cls([tr.t for tr in triplets], [tr.f for tr in triplets], [tr.v for tr in triplets],
                   targets, target_mask, location, anchor)


class WindowSet(list):

    """
    Windows of one split, plus the number of anchors rejected because
    their input interval held no observation at all.
    """

    def __init__(self, windows=(), rejected=0):
        super(WindowSet, self).__init__(windows)
        self.rejected = rejected


def series_matrix(table, vocabulary, start, stop):
    """
    Dense view of a table over ``[start, stop)``.

    :return: ``(groups, stop - start, len(vocabulary))`` array, NaN where
        nothing was observed. Mode A has a single group, mode B one per
        location.
    """
    frame = table.frame
    frame = frame[(frame['timestamp'] >= start) & (frame['timestamp'] < stop)]
    if vocabulary.mode == LocationMode.A:
        names = [composite_name(l, v) for l, v in zip(frame['location'], frame['variable'])]
        columns = np.array([vocabulary.index(n) for n in names], dtype=np.intp)
        groups = np.zeros(len(frame), dtype=np.intp)
        n_groups = 1
    else:
        lookup = dict((v, vocabulary.index(v)) for v in frame['variable'].unique())
        columns = np.array([lookup[v] for v in frame['variable']], dtype=np.intp)
        places = dict((l, vocabulary.location_index(l)) for l in frame['location'].unique())
        groups = np.array([places[l] for l in frame['location']], dtype=np.intp)
        n_groups = len(vocabulary.locations)
    matrix = np.full((n_groups, max(0, stop - start), len(vocabulary)), np.nan)
    rows = frame['timestamp'].to_numpy(dtype=np.int64) - start
    matrix[groups, rows, columns] = frame['value'].to_numpy(dtype=np.float64)
    return matrix


def build_windows(table, config, split, vocabulary, target_table=None):
    """
    Every window of ``split`` whose inputs and target both fall inside it.

    :param table: LongTable the inputs are read from.
    :param config: A :py:class:`pysert.sert.model.ModelConfig` (``lookback``,
        ``horizon``, ``n_max``, ``location_mode``).
    :param split: :py:class:`Split`.
    :param vocabulary: :py:class:`pysert.sert.encoding.VariableVocabulary`.
    :param target_table: LongTable the targets are read from, ``table``
        by default.
    :rtype: WindowSet, sorted by (location, anchor).
    """
    lookback, horizon = config.lookback, config.horizon
    if lookback <= 0 or horizon <= 0:
        raise UsageError(UsageError.BAD_CONFIG, 'lookback and horizon must be positive')
    if vocabulary.mode != config.location_mode:
        raise UsageError(UsageError.MODEL_MISMATCH, 'vocabulary in mode %s, config in mode %s'
                         % (vocabulary.mode, config.location_mode))
    inputs = series_matrix(table, vocabulary, split.start, split.stop)
    if target_table is None:
        outputs = inputs
    else:
        outputs = series_matrix(target_table, vocabulary, split.start, split.stop)

    windows = WindowSet()
    first, last = lookback, len(split) - horizon
    for group in range(inputs.shape[0]):
        location = group if vocabulary.mode == LocationMode.B else None
        for row in range(first, last + 1):
            block = inputs[group, row - lookback:row]
            tt, ff = np.nonzero(~np.isnan(block))
            if not len(tt):
                windows.rejected += 1
                continue
            tt, ff = tt[-config.n_max:], ff[-config.n_max:]
            target = outputs[group, row + horizon - 1]
            observed = ~np.isnan(target)
            windows.append(SampleWindow(tt, ff, block[tt, ff], np.where(observed, target, 0.0),
                                        observed, location, split.start + row))
    if windows.rejected:
        log.msg('%s: rejected %d empty windows' % (split.name, windows.rejected))
    return windows


def training_statistics(table, vocabulary, split):
    """
    Per-variable normalization statistics over the records of ``split``.
    """
    frame = table.frame
    frame = frame[(frame['timestamp'] >= split.start) & (frame['timestamp'] < split.stop)]
    if vocabulary.mode == LocationMode.A:
        ids = [vocabulary.index(composite_name(l, v)) for l, v in zip(frame['location'], frame['variable'])]
    else:
        ids = [vocabulary.index(v) for v in frame['variable']]
    if not len(ids):
        raise DataError(DataError.EMPTY_DATASET, 'no record in %r' % (split,))
    return NormalizationStats.compute(ids, frame['value'].to_numpy(), len(vocabulary))
