# encoding: utf-8
"""
The sparsity benchmark.

For each sparsity level and seed: simulate the 16 series, delete a
fraction of the input records, build windows whose inputs come from the
sparse table and whose targets come from the dense one, fit every
trainable model on the training range and report the test RMSE of each
model and of the persistence baseline.
"""
import hashlib
from collections import OrderedDict

from twisted.python import log

from pysert.sert.config import Config
from pysert.sert.data.simulate import simulate_series, sparsify
from pysert.sert.data.window import build_windows, split_steps, training_statistics
from pysert.sert.encoding import VariableVocabulary
from pysert.sert.error import SertError, UsageError
from pysert.sert.evaluation.baseline import naive_forecast, series_means
from pysert.sert.evaluation.metrics import MetricsTable, rmse_per_variable
from pysert.sert.mode import LocationMode, ModelKind
from pysert.sert.model import ModelConfig
from pysert.sert.training import TrainConfig, fit


DEFAULT_LEVELS = (0.0, 0.2, 0.4, 0.6, 0.8)
DEFAULT_MODELS = (ModelKind.SERT, ModelKind.SSTANN, ModelKind.NAIVE)

# one step ahead from the last ten hours, unless the caller sets them
SWEEP_DEFAULTS = OrderedDict([('lookback', 10), ('horizon', 1)])


def config_digest(config):
    return hashlib.sha256(config.pack().encode('utf-8')).hexdigest()[:16]


def sweep_config(config=None):
    """
    The configuration of the sweep: ``config`` with :py:data:`SWEEP_DEFAULTS`
    in place of the global defaults for the keys it does not set.
    """
    config = config if config is not None else Config()
    return config.with_defaults(SWEEP_DEFAULTS)


def run_level(spec, level, seed, models, config):
    """
    One (level, seed) cell of the sweep.

    :rtype: MetricsTable with the test RMSE of every model.
    """
    config = sweep_config(config).update({'seed': seed, 'location_mode': LocationMode.A,
                                                'n_steps': spec.n_steps})
    dense = simulate_series(spec.replace(seed=seed))
    sparse = sparsify(dense, level, seed)
    vocabulary = VariableVocabulary.from_pairs(dense.pairs(), LocationMode.A)
    model_config = ModelConfig.from_config(config, vocabulary)
    train, val, test = split_steps(spec.n_steps, config['test_steps'], config['val_fraction'])
    stats = training_statistics(sparse, vocabulary, train)
    windows = [build_windows(sparse, model_config, split, vocabulary, target_table=dense)
               for split in (train, val, test)]
    train_windows, val_windows, test_windows = windows

    metadata = OrderedDict([
        ('level', level), ('seed', seed), ('config', config_digest(config)),
        ('input_records', len(sparse)),
        ('train_windows', len(train_windows)), ('val_windows', len(val_windows)),
        ('test_windows', len(test_windows)),
        ('rejected_windows', sum(w.rejected for w in windows)),
    ])
    table = MetricsTable(metadata=metadata)
    for model in models:
        log.msg('sweep: level %s, seed %d, model %s' % (level, seed, model))
        if model == ModelKind.NAIVE:
            means = series_means(sparse, train.start, train.stop)
            predictions = naive_forecast(sparse, test_windows, vocabulary, means)
        elif model in ModelKind.TRAINABLE:
            forecaster, _ = fit(model, train_windows, val_windows, model_config,
                                TrainConfig.from_config(config), vocabulary, stats, config)
            predictions = forecaster.predict(test_windows)
        else:
            raise UsageError(UsageError.BAD_ARGUMENT, 'unknown model %r' % (model,))
        table.extend(rmse_per_variable(predictions, test_windows, vocabulary.names, model))
    return table


def sparsity_sweep(spec, levels=DEFAULT_LEVELS, models=DEFAULT_MODELS, seeds=(0,), config=None):
    """
    :param spec: :py:class:`pysert.sert.data.simulate.SimulationSpec`; its
        seed is replaced by each seed of ``seeds``.
    :param config: :py:class:`pysert.sert.config.Config` for the models,
        the defaults when None.
    :return: OrderedDict ``(level, seed) -> MetricsTable``, sorted.
    :raises SertError: The error of the failing cell, with its level and
        seed prepended to the data.
    """
    config = sweep_config(config)
    for level in levels:
        if not 0.0 <= level < 1.0:
            raise UsageError(UsageError.BAD_ARGUMENT, 'sparsity level %r outside [0, 1)' % (level,))
    results = OrderedDict()
    for level in sorted(levels):
        for seed in sorted(seeds):
            try:
                results[(level, seed)] = run_level(spec, level, seed, models, config)
            except SertError as e:
                e.data = 'level %s, seed %d: %s' % (level, seed, e.data)
                e.args = (str(e),)
                raise
    return results
