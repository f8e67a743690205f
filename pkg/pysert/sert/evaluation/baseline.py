# encoding: utf-8
"""
Persistence forecast: the value of the last input hour, forward filled,
is the prediction for any horizon.

The persistence model cannot deal with gaps, so its input is forward
filled first. Hours before the first observation of a series take the
training mean of that series.
"""
import numpy as np
import pandas as pd

from pysert.sert.data.table import LongTable
from pysert.sert.encoding import composite_name
from pysert.sert.mode import LocationMode


def series_means(table, start, stop):
    """
    Mean of every (location, variable) series of ``table`` over
    ``[start, stop)``. A series without records there gets the mean of its
    variable over all locations, or 0.
    """
    frame = table.frame
    inside = frame[(frame['timestamp'] >= start) & (frame['timestamp'] < stop)]
    by_pair = inside.groupby(['location', 'variable'])['value'].mean()
    by_variable = inside.groupby('variable')['value'].mean()
    means = {}
    for pair in table.pairs():
        if pair in by_pair.index:
            means[pair] = float(by_pair[pair])
        elif pair[1] in by_variable.index:
            means[pair] = float(by_variable[pair[1]])
        else:
            means[pair] = 0.0
    return means


def filled_matrix(table, pairs, means, start, stop):
    """
    Forward filled values of ``pairs`` over ``[start, stop)``, shape
    ``(stop - start, len(pairs))``. Records before ``start`` are carried
    into the range.
    """
    fallback = np.array([means.get(pair, 0.0) for pair in pairs], dtype=np.float64)
    frame = table.frame[table.frame['timestamp'] < stop]
    if not len(frame) or not len(pairs):
        return np.tile(fallback, (max(0, stop - start), 1))
    first = min(start, int(frame['timestamp'].min()))
    wide = frame.pivot(index='timestamp', columns=['location', 'variable'], values='value')
    wide = wide.reindex(index=pd.RangeIndex(first, stop),
                        columns=pd.MultiIndex.from_tuples(pairs, names=['location', 'variable']))
    values = wide.ffill().to_numpy(dtype=np.float64)[start - first:]
    return np.where(np.isnan(values), fallback, values)


def forward_fill(table, means, start=None, stop=None):
    """
    Dense LongTable: every series of ``table`` has a record at every hour
    of ``[start, stop)`` (the span of the table by default).

    :param dict means: ``(location, variable) -> training mean``.
    """
    span = table.span()
    start = span[0] if start is None else start
    stop = span[1] if stop is None else stop
    pairs = table.pairs()
    values = filled_matrix(table, pairs, means, start, stop)
    steps = values.shape[0]
    return LongTable(pd.DataFrame({
        'timestamp': np.repeat(np.arange(start, start + steps, dtype=np.int64), len(pairs)),
        'location': np.tile(np.array([l for l, _ in pairs], dtype=object), steps),
        'variable': np.tile(np.array([v for _, v in pairs], dtype=object), steps),
        'value': values.ravel(),
    }))


def target_pairs(table, vocabulary, location=None):
    """
    The (location, variable) series behind the K targets of a window.
    """
    if vocabulary.mode == LocationMode.A:
        lookup = dict((composite_name(l, v), (l, v)) for l, v in table.pairs())
        return [lookup.get(name, tuple(name.split('.', 1))) for name in vocabulary.names]
    place = vocabulary.locations[location]
    return [(place, name) for name in vocabulary.names]


def naive_forecast(table, windows, vocabulary, means):
    """
    Persistence predictions ``(J, K)``: for the window anchored at ``a``,
    the forward filled value of each target series at hour ``a - 1``,
    whatever the horizon.
    """
    predictions = np.zeros((len(windows), len(vocabulary)))
    if not len(windows):
        return predictions
    anchors = np.array([w.anchor for w in windows])
    start, stop = int(anchors.min()) - 1, int(anchors.max())
    groups = {}
    for j, window in enumerate(windows):
        groups.setdefault(window.location, []).append(j)
    for location, rows in groups.items():
        pairs = target_pairs(table, vocabulary, location)
        filled = filled_matrix(table, pairs, means, start, stop)
        predictions[rows] = filled[anchors[rows] - 1 - start]
    return predictions
