# encoding: utf-8
"""
Synthetic data.

The sparsity benchmark draws 16 series from::

    Y_t = 2 + 0.4 Y_{t-1} + X_t + s_t,    s_t ~ MVN(0, Sigma),  Sigma = U U^T

with ``U`` uniform on (-1, 1) and ``X_t`` a fixed set of 16 trend and
seasonal terms. ``simulate_fixture`` draws a smaller data set shaped like a
coastal monitoring network (5 buoys, 7 variables, sensor outages).
"""
import numpy as np
import pandas as pd

from pysert.sert.config import substream
from pysert.sert.data.table import LongTable
from pysert.sert.error import UsageError


N_SERIES = 16
SIM_LOCATION = 'sim'
SERIES_NAMES = ['y%02d' % (i + 1) for i in range(N_SERIES)]

JITTER = 1e-8


class SimulationSpec(object):

    """
    Parameters of the 16-series benchmark.
    """

    def __init__(self, n_series=N_SERIES, n_steps=40000, intercept=2.0, ar_coeff=0.4,
                 p1=0.005, p2=0.0005, p3=0.002, seed=0):
        self.n_series  = int(n_series)
        self.n_steps   = int(n_steps)
        self.intercept = float(intercept)
        self.ar_coeff  = float(ar_coeff)
        self.p1        = float(p1)
        self.p2        = float(p2)
        self.p3        = float(p3)
        self.seed      = int(seed)
        self.validate()

    def validate(self):
        if self.n_series != N_SERIES:
            raise UsageError(UsageError.BAD_CONFIG,
                             'the temporal effects define exactly %d series, not %d' % (N_SERIES, self.n_series))
        if self.n_steps < 1:
            raise UsageError(UsageError.BAD_CONFIG, 'n_steps must be positive')

    def replace(self, **changes):
        values = self.as_dict()
        values.update(changes)
        return SimulationSpec(**values)

    def as_dict(self):
        return dict((name, getattr(self, name)) for name in
                    ('n_series', 'n_steps', 'intercept', 'ar_coeff', 'p1', 'p2', 'p3', 'seed'))


def temporal_effects(t, spec):
    """
    The 16 temporal effects at each time of ``t``, shape ``(len(t), 16)``.
    """
    t = np.asarray(t, dtype=np.float64)
    sin1 = np.sin(spec.p1 * t)
    sin2, cos2 = np.sin(spec.p2 * t), np.cos(spec.p2 * t)
    drift = spec.p3 * t
    return np.stack([
        10 * sin1, cos2, drift, -drift + 10 * sin1,
        5 * sin2, 12 * cos2, 7 * sin2, 8 * cos2,
        2 * sin2, 3 * cos2, 12 * sin2, 18 * cos2,
        4 * sin2, 15 * cos2, 11 * sin2, 10 * cos2,
    ], axis=1)


def covariance_from_factor(factor):
    factor = np.asarray(factor, dtype=np.float64)
    return factor @ factor.T


def simulate_covariance(seed, n=N_SERIES):
    """
    ``Sigma = U U^T`` with ``U`` drawn i.i.d. Uniform(-1, 1).

    :param seed: An integer seed (``data`` stream) or a numpy Generator.
    """
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed, 'data')
    return covariance_from_factor(rng.uniform(-1.0, 1.0, (n, n)))


def simulate_values(spec, noise=True, temporal=True):
    """
    The ``(n_steps, 16)`` matrix of the recursion, with
    ``Y_0 = intercept + X_0 + s_0``. ``noise`` and ``temporal`` switch
    ``s_t`` and ``X_t`` off.
    """
    rng = substream(spec.seed, 'data')
    sigma = simulate_covariance(rng, spec.n_series)
    if noise:
        chol = np.linalg.cholesky(sigma + JITTER * np.eye(spec.n_series))
        shocks = rng.standard_normal((spec.n_steps, spec.n_series)) @ chol.T
    else:
        shocks = np.zeros((spec.n_steps, spec.n_series))
    if temporal:
        shocks = shocks + temporal_effects(np.arange(spec.n_steps), spec)
    values = np.empty((spec.n_steps, spec.n_series))
    values[0] = spec.intercept + shocks[0]
    for t in range(1, spec.n_steps):
        values[t] = spec.intercept + spec.ar_coeff * values[t - 1] + shocks[t]
    return values


def matrix_to_frame(values, location, names, start=0):
    """
    Long records of a ``(steps, len(names))`` matrix, row-major.
    """
    steps, width = values.shape
    return pd.DataFrame({
        'timestamp': np.repeat(np.arange(start, start + steps, dtype=np.int64), width),
        'location': location,
        'variable': np.tile(np.asarray(names, dtype=object), steps),
        'value': values.ravel(),
    })


def matrix_to_table(values, location, names, start=0):
    return LongTable(matrix_to_frame(values, location, names, start))


def simulate_series(spec, noise=True, temporal=True):
    """
    The benchmark as a LongTable: one location, 16 variables, ``n_steps``
    hourly records each.
    """
    return matrix_to_table(simulate_values(spec, noise, temporal), SIM_LOCATION, SERIES_NAMES)


def sparsify(table, rate, seed):
    """
    Delete exactly ``round(rate * N)`` records uniformly at random,
    without replacement, over all series jointly.
    """
    if not 0.0 <= rate < 1.0:
        raise UsageError(UsageError.BAD_ARGUMENT, 'sparsity rate %r outside [0, 1)' % (rate,))
    total = len(table)
    removed = int(np.floor(rate * total + 0.5))
    if not removed:
        return LongTable(table.frame.copy(), table.skipped)
    rng = substream(seed, 'sparsify')
    keep = np.ones(total, dtype=bool)
    keep[rng.choice(total, size=removed, replace=False)] = False
    return LongTable(table.frame[keep], table.skipped)


FIXTURE_LOCATIONS = ['buoy_%d' % (i + 1) for i in range(5)]
FIXTURE_VARIABLES = ['Dissolved Oxygen', 'Precipitation', 'Salinity', 'Temperature',
                     'Turbidity', 'Water Level', 'Wind Speed']
SITE_VARIABLES = ('Precipitation', 'Water Level', 'Wind Speed')

HOURS_PER_YEAR = 24 * 365
TIDE_PERIOD = 12.42


def _ar1(rng, steps, coeff, scale):
    shocks = rng.normal(0.0, scale, steps)
    out = np.empty(steps)
    out[0] = shocks[0]
    for t in range(1, steps):
        out[t] = coeff * out[t - 1] + shocks[t]
    return out


def simulate_fixture(seed, n_steps=2000, missing_rate=0.1):
    """
    A small hourly data set shaped like a coastal monitoring network.

    Precipitation, Wind Speed and Water Level are site-level series,
    repeated at every buoy. Each (buoy, variable) series loses
    ``missing_rate`` of its records at random and one outage block of
    ``n_steps // 20`` hours.
    """
    rng = substream(seed, 'data')
    t = np.arange(n_steps, dtype=np.float64)
    rain = np.maximum(0.0, _ar1(rng, n_steps, 0.9, 0.5) - 0.3)
    wind = 5.0 + np.abs(_ar1(rng, n_steps, 0.95, 0.6))
    level = 2.0 * np.cos(2 * np.pi * t / TIDE_PERIOD) + _ar1(rng, n_steps, 0.8, 0.05)
    lagged_rain = np.concatenate([np.zeros(3), rain[:-3]])
    frames = []
    for i, location in enumerate(FIXTURE_LOCATIONS):
        temperature = (12.0 + 5.0 * np.sin(2 * np.pi * t / HOURS_PER_YEAR) +
                       np.sin(2 * np.pi * t / 24) + 0.3 * i + _ar1(rng, n_steps, 0.9, 0.1))
        salinity = 33.0 - 0.1 * i - 0.8 * lagged_rain + 0.3 * level + _ar1(rng, n_steps, 0.9, 0.1)
        turbidity = 5.0 + 0.4 * wind + 0.6 * lagged_rain + _ar1(rng, n_steps, 0.8, 0.3)
        oxygen = 9.0 - 0.2 * (temperature - 12.0) + _ar1(rng, n_steps, 0.9, 0.1)
        columns = {
            'Dissolved Oxygen': oxygen, 'Precipitation': rain, 'Salinity': salinity,
            'Temperature': temperature, 'Turbidity': turbidity, 'Water Level': level,
            'Wind Speed': wind,
        }
        values = np.stack([columns[name] for name in FIXTURE_VARIABLES], axis=1)
        present = rng.random(values.shape) >= missing_rate
        outage = max(1, n_steps // 20)
        for j in range(len(FIXTURE_VARIABLES)):
            start = rng.integers(0, max(1, n_steps - outage))
            present[start:start + outage, j] = False
        frame = matrix_to_frame(values, location, FIXTURE_VARIABLES)
        frames.append(frame[present.ravel()])
    return LongTable(pd.concat(frames, ignore_index=True))
