# encoding: utf-8
"""
Per-variable RMSE, over observed targets only::

    RMSE_k = sqrt( sum_j m_jk (pred_jk - y_jk)^2 / sum_j m_jk )

A variable with no observed target is reported as absent, never as 0.
"""
import io
import math
from collections import OrderedDict

import numpy as np
import pandas as pd


class MetricsTable(object):

    """
    Rows of (model, variable, RMSE) and the run metadata.

    :ivar rows: List of ``(model, variable, rmse)``.
    :ivar absent: List of ``(model, variable)`` without any observed target.
    :ivar metadata: Ordered ``name -> value`` (sparsity level, seed,
        config digest, window counts...).
    """

    HEADER = ('model', 'variable', 'rmse')

    def __init__(self, rows=(), absent=(), metadata=None):
        self.rows = list(rows)
        self.absent = list(absent)
        self.metadata = OrderedDict(metadata or ())

    def __eq__(self, other):
        return (isinstance(other, MetricsTable) and self.rows == other.rows and
                self.absent == other.absent and self.metadata == other.metadata)

    def __repr__(self):
        return 'MetricsTable(%d rows, %d absent)' % (len(self.rows), len(self.absent))

    def extend(self, other):
        self.rows.extend(other.rows)
        self.absent.extend(other.absent)
        return self

    def models(self):
        seen = []
        for model, _, _ in self.rows:
            if model not in seen:
                seen.append(model)
        return seen

    def rmse(self, model, variable):
        for m, v, value in self.rows:
            if (m, v) == (model, variable):
                return value
        raise KeyError((model, variable))

    def overall(self, model):
        """
        Mean of the per-variable RMSE of ``model``.
        """
        values = [value for m, _, value in self.rows if m == model]
        if not values:
            return float('nan')
        return math.fsum(values) / len(values)

    def to_frame(self):
        frame = pd.DataFrame(self.rows, columns=list(self.HEADER))
        if self.absent:
            missing = pd.DataFrame([(m, v, np.nan) for m, v in self.absent], columns=list(self.HEADER))
            frame = pd.concat([frame, missing], ignore_index=True)
        return frame

    def to_csv(self):
        """
        CSV text; metadata comes first as ``# name = value`` lines and an
        absent RMSE is an empty field.
        """
        buf = io.StringIO()
        for name, value in self.metadata.items():
            buf.write('# %s = %s\n' % (name, value))
        buf.write(','.join(self.HEADER) + '\n')
        for model, variable, value in self.rows:
            buf.write('%s,%s,%r\n' % (model, variable, value))
        for model, variable in self.absent:
            buf.write('%s,%s,\n' % (model, variable))
        return buf.getvalue()

    def to_text(self):
        lines = ['%s: %s' % item for item in self.metadata.items()]
        width = max([len(v) for _, v, _ in self.rows] + [len(v) for _, v in self.absent] + [8])
        mwidth = max([len(m) for m, _, _ in self.rows] + [len(m) for m, _ in self.absent] + [5])
        lines.append('%-*s  %-*s  %10s' % (mwidth, 'model', width, 'variable', 'rmse'))
        for model, variable, value in self.rows:
            lines.append('%-*s  %-*s  %10.4f' % (mwidth, model, width, variable, value))
        for model, variable in self.absent:
            lines.append('%-*s  %-*s  %10s' % (mwidth, model, width, variable, 'absent'))
        for model in self.models():
            lines.append('%-*s  %-*s  %10.4f' % (mwidth, model, width, '(overall)', self.overall(model)))
        return '\n'.join(lines) + '\n'


def rmse_per_variable(predictions, windows, names, model='model', metadata=None):
    """
    :param predictions: ``(J, K)`` predictions in the units of the data,
        row ``j`` for ``windows[j]``.
    :param names: The K variable names.
    :rtype: MetricsTable
    """
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.array([w.targets for w in windows], dtype=np.float64).reshape(predictions.shape)
    mask = np.array([w.target_mask for w in windows], dtype=bool).reshape(predictions.shape)
    squared = np.where(mask, (predictions - np.where(mask, targets, 0.0)) ** 2, 0.0)
    table = MetricsTable(metadata=metadata)
    for k, name in enumerate(names):
        count = int(mask[:, k].sum())
        if not count:
            table.absent.append((model, name))
            continue
        # fsum is exactly rounded, so the window order does not matter
        table.rows.append((model, name, math.sqrt(math.fsum(squared[:, k]) / count)))
    return table
