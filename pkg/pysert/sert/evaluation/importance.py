# encoding: utf-8
"""
Variable importance of an SST-ANN.

For predictor variable ``p`` and target ``k``, ``cbar_pk`` is the mean of
the contributions ``c_ik`` of every real triplet of ``p``. Over the
predictor set considered::

    I_pk = |cbar_pk| / sum_q |cbar_qk| * 100

and the signed importance is ``sign(cbar_pk) * I_pk``. Contributions are
in z-scored target units, which leaves ``I`` unchanged.
"""
import io
from collections import OrderedDict

import numpy as np
import pandas as pd


# physical drivers and the water quality they act on, for buoy networks
CAUSAL_PREDICTORS = ('Water Level', 'Temperature', 'Wind Speed', 'Precipitation')
CAUSAL_TARGETS = ('Turbidity', 'Dissolved Oxygen', 'Salinity')


class ImportanceReport(object):

    """
    :ivar rows: List of ``(predictor, target, mean_contribution,
        importance, signed_importance)``.
    :ivar excluded: Predictors without any observation in the windows.
    """

    HEADER = ('predictor', 'target', 'mean_contribution', 'importance', 'signed_importance')

    def __init__(self, rows=(), excluded=(), metadata=None):
        self.rows = list(rows)
        self.excluded = list(excluded)
        self.metadata = OrderedDict(metadata or ())

    def __repr__(self):
        return 'ImportanceReport(%d rows, %d excluded)' % (len(self.rows), len(self.excluded))

    def targets(self):
        seen = []
        for _, target, _, _, _ in self.rows:
            if target not in seen:
                seen.append(target)
        return seen

    def row(self, predictor, target):
        for row in self.rows:
            if row[:2] == (predictor, target):
                return row
        raise KeyError((predictor, target))

    def importance(self, predictor, target):
        return self.row(predictor, target)[3]

    def signed(self, predictor, target):
        return self.row(predictor, target)[4]

    def total(self, target):
        return sum(row[3] for row in self.rows if row[1] == target)

    def to_csv(self):
        buf = io.StringIO()
        for name, value in self.metadata.items():
            buf.write('# %s = %s\n' % (name, value))
        if self.excluded:
            buf.write('# excluded = %s\n' % ';'.join(self.excluded))
        buf.write(','.join(self.HEADER) + '\n')
        for predictor, target, mean, importance, signed in self.rows:
            buf.write('%s,%s,%r,%r,%r\n' % (predictor, target, mean, importance, signed))
        return buf.getvalue()

    def to_text(self):
        lines = []
        pwidth = max([len(r[0]) for r in self.rows] + [9])
        for target in self.targets():
            lines.append('target %s' % target)
            for predictor, _, mean, importance, signed in (r for r in self.rows if r[1] == target):
                lines.append('  %-*s  %+8.2f%%  (mean contribution %+.4g)' % (pwidth, predictor, signed, mean))
            lines.append('  %-*s  %8.2f%%' % (pwidth, 'total', self.total(target)))
        if self.excluded:
            lines.append('excluded (no observation): %s' % ', '.join(self.excluded))
        return '\n'.join(lines) + '\n'


def importance_index(forecaster, windows, predictors=None, targets=None, metadata=None):
    """
    :param forecaster: An SST-ANN :py:class:`pysert.sert.model.Forecaster`.
    :param windows: SampleWindow list; a single window gives a per sample
        analysis.
    :param predictors: Variable names (bare names are accepted in mode A
        and gather every location), all variables by default.
    :param targets: Target names, all variables by default.
    :raises UsageError: The forecaster is not an SST-ANN.
    :rtype: ImportanceReport
    """
    vocabulary = forecaster.vocabulary
    contributions, _, batch = forecaster.contributions(windows)
    predictors = list(predictors) if predictors else list(vocabulary.names)
    target_ids = []
    for name in (targets or vocabulary.names):
        target_ids.extend(vocabulary.matching(name))

    kept, means, excluded = [], [], []
    for predictor in predictors:
        selected = batch.mask & np.isin(batch.f, vocabulary.matching(predictor))
        if not selected.any():
            excluded.append(predictor)
            continue
        kept.append(predictor)
        means.append(contributions[selected].mean(axis=0))

    report = ImportanceReport(excluded=excluded, metadata=metadata)
    if not kept:
        return report
    means = np.array(means)
    for k in target_ids:
        column = means[:, k]
        total = np.abs(column).sum()
        if total > 0:
            shares = np.abs(column) / total * 100.0
        else:
            shares = np.full(len(kept), 100.0 / len(kept))
        for predictor, mean, share in zip(kept, column, shares):
            report.rows.append((predictor, vocabulary.names[k], float(mean), float(share),
                                float(-share if mean < 0 else share)))
    return report


CONTRIBUTION_COLUMNS = ('window', 'anchor', 'position', 'variable', 'time', 'value',
                        'target', 'contribution', 'bias')


def contribution_table(forecaster, windows):
    """
    Every ``c_ik`` of an SST-ANN, one row per real triplet and target, in
    the order of the windows, then of the positions, then of the targets.

    ``time`` and ``value`` are those of the triplet as stored in the
    window. ``contribution`` and ``bias`` are in z-scored target units:
    for each window and target, the contributions plus the bias give the
    z-scored prediction.

    :raises UsageError: The forecaster is not an SST-ANN.
    :rtype: pandas.DataFrame with :py:data:`CONTRIBUTION_COLUMNS`.
    """
    contributions, bias, batch = forecaster.contributions(windows)
    n_max, n_targets = contributions.shape[1:]
    times = np.zeros((len(windows), n_max), dtype=np.int64)
    values = np.zeros((len(windows), n_max))
    for j, window in enumerate(windows):
        n = min(len(window), n_max)
        times[j, :n] = window.t[len(window) - n:]
        values[j, :n] = window.v[len(window) - n:]
    anchors = np.array([window.anchor for window in windows], dtype=np.int64)
    names = np.array(forecaster.vocabulary.names, dtype=object)

    j, p = np.nonzero(batch.mask)
    return pd.DataFrame(OrderedDict([
        ('window', np.repeat(j, n_targets)),
        ('anchor', np.repeat(anchors[j], n_targets)),
        ('position', np.repeat(p, n_targets)),
        ('variable', np.repeat(names[batch.f[j, p]], n_targets)),
        ('time', np.repeat(times[j, p], n_targets)),
        ('value', np.repeat(values[j, p], n_targets)),
        ('target', np.tile(names, len(j))),
        ('contribution', contributions[j, p].ravel()),
        ('bias', bias[j].ravel()),
    ]), columns=list(CONTRIBUTION_COLUMNS))
