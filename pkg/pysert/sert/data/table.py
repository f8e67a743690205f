# encoding: utf-8
"""
Long format observations and their CSV form.

CSV schema::

    timestamp,location,variable,value
    2017-01-01T00:00:00,Tolka,Turbidity,3.2
    2017-01-01T00:00:00,Tolka,Salinity,

A missing value is an empty field; the row is skipped, never imputed.
Timestamps are ISO-8601 on the hour, converted to an integer hour index
counted from the earliest timestamp of the file, or already integer hour
indices (the form written by the simulator), kept as they are.
"""
import io

import numpy as np
import pandas as pd
from twisted.python import log

from pysert.sert.error import DataError
from pysert.sert.output import write_atomic


CSV_SCHEMA = ('timestamp', 'location', 'variable', 'value')

_INTEGER = r'-?\d+'


class LongTable(object):

    """
    Records ``(timestamp, location, variable, value)`` sorted by timestamp,
    at most one per (timestamp, location, variable), all values finite.

    :ivar frame: The records, as a ``pandas.DataFrame``.
    :ivar skipped: Rows dropped at ingestion because of a missing value.
    """

    def __init__(self, frame=None, skipped=0):
        if frame is None:
            frame = pd.DataFrame({name: [] for name in CSV_SCHEMA})
        frame = frame.loc[:, list(CSV_SCHEMA)].astype({
            'timestamp': np.int64, 'location': object, 'variable': object, 'value': np.float64})
        self.frame = frame.sort_values(['timestamp', 'location', 'variable'], kind='mergesort') \
                          .reset_index(drop=True)
        self.skipped = skipped

    @classmethod
    def from_records(cls, records):
        records = list(records)
        return cls(pd.DataFrame(records, columns=list(CSV_SCHEMA)) if records else None)

    def __len__(self):
        return len(self.frame)

    def __eq__(self, other):
        return isinstance(other, LongTable) and self.frame.equals(other.frame)

    def __repr__(self):
        return 'LongTable(%d records, %d locations, %d variables)' % (
            len(self), len(self.locations()), len(self.variables()))

    def records(self):
        return list(self.frame.itertuples(index=False, name=None))

    def locations(self):
        return sorted(self.frame['location'].unique())

    def variables(self):
        return sorted(self.frame['variable'].unique())

    def pairs(self):
        """
        Distinct (location, variable) series.
        """
        unique = self.frame[['location', 'variable']].drop_duplicates()
        return sorted(zip(unique['location'], unique['variable']))

    def span(self):
        """
        Half-open hour range ``[first, last + 1)`` covered by the records.
        """
        if not len(self):
            return 0, 0
        return int(self.frame['timestamp'].min()), int(self.frame['timestamp'].max()) + 1

    def between(self, start, stop):
        ts = self.frame['timestamp']
        return LongTable(self.frame[(ts >= start) & (ts < stop)])

    def check(self):
        if self.frame.duplicated(['timestamp', 'location', 'variable']).any():
            raise DataError(DataError.UNSPECIFIC, 'duplicated (timestamp, location, variable)')
        if not np.isfinite(self.frame['value'].to_numpy()).all():
            raise DataError(DataError.UNSPECIFIC, 'non finite values')

    def pack(self):
        """
        Return the CSV text of the table.
        """
        buf = io.StringIO()
        self.frame.to_csv(buf, index=False, lineterminator='\n')
        return buf.getvalue()

    def write_csv(self, path):
        write_atomic(path, self.pack())


def ingest_csv(path, schema=CSV_SCHEMA):
    """
    Read a long format CSV file.

    Rows with an empty or non numeric value are skipped and counted in
    ``skipped``. For a duplicated (timestamp, location, variable) the last
    row wins.

    :raises DataError: Malformed header, unparseable timestamp (with the
        line number of the offending row).
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
    except pd.errors.EmptyDataError:
        raise DataError(DataError.MALFORMED_HEADER, '%s: no header' % path)
    except (IOError, UnicodeDecodeError) as e:
        raise DataError(DataError.UNSPECIFIC, '%s: %s' % (path, e))
    except pd.errors.ParserError as e:
        raise DataError(DataError.MALFORMED_HEADER, '%s: %s' % (path, e))
    if [c.strip() for c in frame.columns] != list(schema):
        raise DataError(DataError.MALFORMED_HEADER,
                        '%s: expected %s, got %s' % (path, ','.join(schema), ','.join(frame.columns)))
    frame.columns = list(CSV_SCHEMA)
    if not len(frame):
        return LongTable()

    stamps = frame['timestamp'].str.strip()
    if stamps.str.fullmatch(_INTEGER).all():
        hours = stamps.astype(np.int64)
    else:
        hours = _hour_index(stamps, path)

    values = pd.to_numeric(frame['value'].str.strip(), errors='coerce')
    present = values.notna() & np.isfinite(values.fillna(0.0))
    skipped = int((~present).sum())
    if skipped:
        log.msg('WARNING: %s: skipped %d rows with an empty or non numeric value' % (path, skipped))

    result = pd.DataFrame({
        'timestamp': hours[present],
        'location': frame['location'].str.strip()[present],
        'variable': frame['variable'].str.strip()[present],
        'value': values[present],
    })
    duplicated = result.duplicated(['timestamp', 'location', 'variable'], keep='last')
    if duplicated.any():
        log.msg('WARNING: %s: %d duplicated (timestamp, location, variable) rows, keeping the last'
                % (path, int(duplicated.sum())))
        result = result[~duplicated]
    return LongTable(result, skipped=skipped)


def _hour_index(stamps, path):
    parsed = pd.to_datetime(stamps, format='ISO8601', errors='coerce')
    bad = parsed.isna()
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        # +2: header line and 1-based numbering
        raise DataError(DataError.BAD_TIMESTAMP, '%s line %d: %r' % (path, row + 2, stamps.iloc[row]))
    off_hour = parsed != parsed.dt.floor(pd.offsets.Hour())
    if off_hour.any():
        row = int(np.flatnonzero(off_hour.to_numpy())[0])
        raise DataError(DataError.BAD_TIMESTAMP,
                        '%s line %d: %r is not on the hour' % (path, row + 2, stamps.iloc[row]))
    return ((parsed - parsed.min()) // pd.Timedelta(hours=1)).astype(np.int64)
