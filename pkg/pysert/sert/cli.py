# encoding: utf-8
"""
Command line.

::

    pysert simulate --seed 0 --out sim.csv
    pysert train --model sstann --data buoys.csv --set d=32 --out sstann.ckpt
    pysert explain --checkpoint sstann.ckpt --data buoys.csv --out importance.csv

Exit status: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Set ``PYSERT_VERBOSE`` to log to stderr.
"""
import json
import os
import subprocess
import sys
import time
from collections import OrderedDict

from twisted.python import log, usage
from twisted.python.filepath import FilePath

import pysert
from pysert.sert.config import read_config
from pysert.sert.data.simulate import SimulationSpec, simulate_fixture, simulate_series, sparsify
from pysert.sert.data.table import ingest_csv
from pysert.sert.data.window import build_windows, split_timeline, training_statistics
from pysert.sert.encoding import VariableVocabulary
from pysert.sert.error import DataError, SertError, UsageError
from pysert.sert.evaluation import (CAUSAL_PREDICTORS, CAUSAL_TARGETS, contribution_table, importance_index,
                                    naive_forecast, rmse_per_variable, series_means, sparsity_sweep)
from pysert.sert.evaluation.sweep import DEFAULT_LEVELS, DEFAULT_MODELS, config_digest, sweep_config
from pysert.sert.mode import ModelKind
from pysert.sert.model import Forecaster, ModelConfig
from pysert.sert.output import write_atomic
from pysert.sert.training import TrainConfig, fit


def version_string():
    """
    ``git describe`` of the source tree when there is one, the package
    version otherwise.
    """
    here = os.path.dirname(os.path.abspath(__file__))
    try:
        out = subprocess.run(['git', 'describe', '--always', '--dirty'], cwd=here,
                             capture_output=True, text=True, timeout=10)
    except (OSError, subprocess.SubprocessError):
        return pysert.__version__
    if out.returncode or not out.stdout.strip():
        return pysert.__version__
    return out.stdout.strip()


class RunManifest(object):

    """
    Everything needed to replay a command: the fully resolved
    configuration, the seeds, the paths read and written.
    """

    SUFFIX = '.manifest.json'

    def __init__(self, command, config=None, seeds=None, inputs=None, outputs=None):
        self.command  = command
        self.config   = config
        self.seeds    = OrderedDict(seeds or ())
        self.inputs   = OrderedDict(inputs or ())
        self.outputs  = OrderedDict(outputs or ())
        self.version  = version_string()
        self.started  = time.time()
        self.duration = None

    def as_dict(self):
        return OrderedDict([
            ('command', self.command),
            ('config', self.config.as_dict() if self.config is not None else None),
            ('seeds', self.seeds),
            ('inputs', self.inputs),
            ('outputs', self.outputs),
            ('version', self.version),
            ('duration', self.duration),
        ])

    def pack(self):
        return json.dumps(self.as_dict(), indent=2) + '\n'

    def write(self, path):
        """
        Stamp the duration and write the manifest next to ``path``.
        """
        self.duration = round(time.time() - self.started, 3)
        write_atomic(path + self.SUFFIX, self.pack())


def parse_list(kind):
    def parse(text):
        try:
            return [kind(item.strip()) for item in text.split(',') if item.strip()]
        except ValueError:
            raise ValueError('cannot read %r as a list of %s' % (text, kind.__name__))
    return parse


class ConfigOptions(usage.Options):

    """
    Options shared by the commands that resolve a configuration.
    """

    optParameters = [
        ['config', 'c', None, 'Configuration file (key = value lines).'],
        ['seed', None, None, 'Seed of every random stream.', int],
    ]

    def __init__(self):
        usage.Options.__init__(self)
        self.overrides = OrderedDict()

    def opt_set(self, value):
        """
        Override one configuration key, as key=value. Repeatable.
        """
        if '=' not in value:
            raise usage.UsageError('--set expects key=value, got %r' % value)
        key, value = value.split('=', 1)
        self.overrides[key.strip()] = value.strip()

    def overridden(self):
        overrides = OrderedDict(self.overrides)
        if self['seed'] is not None:
            overrides['seed'] = self['seed']
        return overrides

    def resolve(self):
        return read_config(self['config'], self.overridden())

    def require(self, *names):
        for name in names:
            if self[name] is None:
                raise usage.UsageError('--%s is required' % name)


class SimulateOptions(ConfigOptions):

    optParameters = [
        ['steps', None, None, 'Number of hourly steps (n_steps).', int],
        ['out', 'o', None, 'Output CSV file.'],
    ]

    def postOptions(self):
        self.require('out')

    def overridden(self):
        overrides = ConfigOptions.overridden(self)
        if self['steps'] is not None:
            overrides['n_steps'] = self['steps']
        return overrides


class FixtureOptions(SimulateOptions):

    optParameters = [
        ['missing', None, 0.1, 'Fraction of records dropped at random.', float],
    ]


class SparsifyOptions(ConfigOptions):

    optParameters = [
        ['data', 'd', None, 'Input CSV file.'],
        ['rate', 'r', None, 'Fraction of records to delete, in [0, 1).', float],
        ['out', 'o', None, 'Output CSV file.'],
    ]

    def postOptions(self):
        self.require('data', 'rate', 'out')


class IngestOptions(usage.Options):

    optParameters = [
        ['data', 'd', None, 'Input CSV file.'],
        ['out', 'o', None, 'Output CSV file, canonical long format.'],
    ]

    def postOptions(self):
        for name in ('data', 'out'):
            if self[name] is None:
                raise usage.UsageError('--%s is required' % name)


class TrainOptions(ConfigOptions):

    optParameters = [
        ['model', 'm', None, 'Model kind: sert or sstann.'],
        ['data', 'd', None, 'Input CSV file.'],
        ['out', 'o', None, 'Checkpoint file.'],
    ]

    def postOptions(self):
        self.require('model', 'data', 'out')
        if self['model'] not in ModelKind.TRAINABLE:
            raise usage.UsageError('--model must be one of %s' % ', '.join(ModelKind.TRAINABLE))


class EvaluateOptions(usage.Options):

    optParameters = [
        ['checkpoint', 'k', None, 'Checkpoint file.'],
        ['data', 'd', None, 'Input CSV file.'],
        ['out', 'o', None, 'Metrics CSV file.'],
    ]

    def postOptions(self):
        for name in ('checkpoint', 'data', 'out'):
            if self[name] is None:
                raise usage.UsageError('--%s is required' % name)


class ExplainOptions(EvaluateOptions):

    optParameters = [
        ['predictors', None, None, 'Comma separated predictor variables (default: all).', parse_list(str)],
        ['targets', None, None, 'Comma separated target variables (default: all).', parse_list(str)],
        ['split', None, 'test', 'Windows analyzed: train, validation, test or all.'],
    ]

    optFlags = [
        ['causal', None, 'Physical drivers as predictors and water quality as targets.'],
    ]

    def postOptions(self):
        EvaluateOptions.postOptions(self)
        if self['causal']:
            if self['predictors'] or self['targets']:
                raise usage.UsageError('--causal replaces --predictors and --targets')
            self['predictors'] = list(CAUSAL_PREDICTORS)
            self['targets'] = list(CAUSAL_TARGETS)
        if self['split'] not in ('train', 'validation', 'test', 'all'):
            raise usage.UsageError('--split must be train, validation, test or all')


class SweepOptions(ConfigOptions):

    optParameters = [
        ['levels', None, list(DEFAULT_LEVELS), 'Comma separated sparsity levels.', parse_list(float)],
        ['models', None, list(DEFAULT_MODELS), 'Comma separated models.', parse_list(str)],
        ['seeds', None, None, 'Comma separated seeds (default: the config seed).', parse_list(int)],
        ['steps', None, None, 'Number of simulated steps (n_steps).', int],
        ['out', 'o', None, 'Output directory of the metrics CSV files.'],
    ]

    def postOptions(self):
        self.require('out')
        for model in self['models']:
            if model not in DEFAULT_MODELS:
                raise usage.UsageError('unknown model %r' % model)

    def overridden(self):
        overrides = ConfigOptions.overridden(self)
        if self['steps'] is not None:
            overrides['n_steps'] = self['steps']
        return overrides


class Options(usage.Options):

    synopsis = 'Usage: pysert <command> [options]'

    subCommands = [
        ['simulate', None, SimulateOptions, 'Write the 16-series synthetic benchmark.'],
        ['fixture', None, FixtureOptions, 'Write a synthetic buoy network data set.'],
        ['sparsify', None, SparsifyOptions, 'Delete a fraction of the records of a CSV file.'],
        ['ingest', None, IngestOptions, 'Normalize a CSV file to the canonical long format.'],
        ['train', None, TrainOptions, 'Fit a SERT or SST-ANN model.'],
        ['evaluate', None, EvaluateOptions, 'Per-variable test RMSE of a checkpoint and of persistence.'],
        ['sweep', None, SweepOptions, 'Run the sparsity benchmark.'],
        ['explain', None, ExplainOptions, 'Variable importance of an SST-ANN checkpoint.'],
    ]

    def postOptions(self):
        if self.subCommand is None:
            raise usage.UsageError('a command is required')


def split_table(table, config):
    start, stop = table.span()
    return split_timeline(start, stop, config['train_fraction'], config['val_fraction'])


def load_table(path):
    table = ingest_csv(path)
    if not len(table):
        raise DataError(DataError.EMPTY_DATASET, '%s holds no record' % path)
    return table


def cmd_simulate(opts):
    config = opts.resolve()
    manifest = RunManifest('simulate', config, {'data': config['seed']}, outputs={'data': opts['out']})
    spec = SimulationSpec(n_steps=config['n_steps'], seed=config['seed'])
    simulate_series(spec).write_csv(opts['out'])
    manifest.write(opts['out'])


def cmd_fixture(opts):
    config = opts.resolve()
    manifest = RunManifest('fixture', config, {'data': config['seed']}, outputs={'data': opts['out']})
    steps = config['n_steps'] if opts['steps'] is not None else 2000
    simulate_fixture(config['seed'], steps, opts['missing']).write_csv(opts['out'])
    manifest.write(opts['out'])


def cmd_sparsify(opts):
    config = opts.resolve()
    manifest = RunManifest('sparsify', config, {'sparsify': config['seed']},
                           {'data': opts['data']}, {'data': opts['out']})
    table = load_table(opts['data'])
    result = sparsify(table, opts['rate'], config['seed'])
    log.msg('sparsify: %d of %d records kept' % (len(result), len(table)))
    result.write_csv(opts['out'])
    manifest.write(opts['out'])


def cmd_ingest(opts):
    manifest = RunManifest('ingest', inputs={'data': opts['data']}, outputs={'data': opts['out']})
    table = load_table(opts['data'])
    sys.stdout.write('%r, %d rows skipped\n' % (table, table.skipped))
    table.write_csv(opts['out'])
    manifest.write(opts['out'])


def cmd_train(opts):
    config = opts.resolve()
    out = opts['out']
    kind = opts['model']
    outputs = OrderedDict([('checkpoint', out), ('metrics', out + '.metrics.csv')])
    if kind == ModelKind.SSTANN:
        outputs['contributions'] = out + '.contributions.csv'
        outputs['importance'] = out + '.importance.csv'
    manifest = RunManifest('train', config, OrderedDict((s, config['seed']) for s in ('init', 'batching', 'dropout')),
                           {'data': opts['data']}, outputs)

    table = load_table(opts['data'])
    vocabulary = VariableVocabulary.from_pairs(table.pairs(), config['location_mode'])
    model_config = ModelConfig.from_config(config, vocabulary)
    train_config = TrainConfig.from_config(config)
    splits = split_table(table, config)
    stats = training_statistics(table, vocabulary, splits[0])
    train, val, test = [build_windows(table, model_config, split, vocabulary) for split in splits]

    forecaster, _ = fit(kind, train, val, model_config, train_config, vocabulary, stats, config,
                        checkpoint_path=out, metrics_path=outputs['metrics'])
    forecaster.save(out)
    if len(test):
        metrics = rmse_per_variable(forecaster.predict(test), test, vocabulary.names, kind)
        log.msg('test RMSE of %s: %r' % (kind, metrics.overall(kind)))
    if kind == ModelKind.SSTANN:
        windows = test if len(test) else val
        metadata = OrderedDict([('split', 'test' if len(test) else 'validation'), ('windows', len(windows))])
        header = ''.join('# %s = %s\n' % item for item in metadata.items())
        frame = contribution_table(forecaster, windows)
        write_atomic(outputs['contributions'], header + frame.to_csv(index=False, float_format='%.17g'))
        report = importance_index(forecaster, windows, metadata=metadata)
        write_atomic(outputs['importance'], report.to_csv())
    manifest.write(out)


def checkpoint_windows(forecaster, table, split):
    """
    Windows of ``table`` for a checkpoint, with the splits of the run that
    produced it.
    """
    config = forecaster.run_config or read_config(None)
    vocabulary = VariableVocabulary.from_pairs(table.pairs(), forecaster.config.location_mode)
    forecaster.check_vocabulary(vocabulary)
    splits = split_table(table, config)
    if split == 'all':
        windows = []
        for part in splits:
            windows.extend(build_windows(table, forecaster.config, part, vocabulary))
    else:
        part = [s for s in splits if s.name == split][0]
        windows = build_windows(table, forecaster.config, part, vocabulary)
    if not len(windows):
        raise DataError(DataError.EMPTY_DATASET, 'no %s window' % split)
    return windows, splits, config


def cmd_evaluate(opts):
    forecaster = Forecaster.load(opts['checkpoint'])
    table = load_table(opts['data'])
    windows, splits, config = checkpoint_windows(forecaster, table, 'test')
    manifest = RunManifest('evaluate', config, inputs={'checkpoint': opts['checkpoint'], 'data': opts['data']},
                           outputs={'metrics': opts['out']})
    names = forecaster.vocabulary.names
    metadata = OrderedDict([('config', config_digest(config)), ('test_windows', len(windows))])
    metrics = rmse_per_variable(forecaster.predict(windows), windows, names, forecaster.kind, metadata)
    means = series_means(table, splits[0].start, splits[0].stop)
    baseline = naive_forecast(table, windows, forecaster.vocabulary, means)
    metrics.extend(rmse_per_variable(baseline, windows, names, ModelKind.NAIVE))
    write_atomic(opts['out'], metrics.to_csv())
    sys.stdout.write(metrics.to_text())
    manifest.write(opts['out'])


def cmd_explain(opts):
    forecaster = Forecaster.load(opts['checkpoint'])
    if forecaster.kind != ModelKind.SSTANN:
        raise UsageError(UsageError.MODEL_MISMATCH,
                         '%s is a %s checkpoint; only sstann predictions split exactly into '
                         'per-triplet contributions' % (opts['checkpoint'], forecaster.kind))
    table = load_table(opts['data'])
    windows, _, config = checkpoint_windows(forecaster, table, opts['split'])
    out = opts['out']
    manifest = RunManifest('explain', config, inputs={'checkpoint': opts['checkpoint'], 'data': opts['data']},
                           outputs={'importance': out, 'text': out + '.txt'})
    metadata = OrderedDict([('split', opts['split']), ('windows', len(windows))])
    report = importance_index(forecaster, windows, opts['predictors'], opts['targets'], metadata)
    write_atomic(out, report.to_csv())
    write_atomic(out + '.txt', report.to_text())
    sys.stdout.write(report.to_text())
    manifest.write(out)


def cmd_sweep(opts):
    config = sweep_config(opts.resolve())
    seeds = opts['seeds'] or [config['seed']]
    directory = FilePath(opts['out'])
    manifest = RunManifest('sweep', config, OrderedDict(('seed %d' % s, s) for s in seeds),
                           outputs={'directory': directory.path})
    spec = SimulationSpec(n_steps=config['n_steps'])
    results = sparsity_sweep(spec, opts['levels'], opts['models'], seeds, config)
    for (level, seed), table in results.items():
        path = directory.child('metrics_level%s_seed%d.csv' % (level, seed)).path
        manifest.outputs['level %s seed %d' % (level, seed)] = path
        write_atomic(path, table.to_csv())
        sys.stdout.write(table.to_text() + '\n')
    manifest.write(directory.path)


COMMANDS = {
    'simulate': cmd_simulate,
    'fixture': cmd_fixture,
    'sparsify': cmd_sparsify,
    'ingest': cmd_ingest,
    'train': cmd_train,
    'evaluate': cmd_evaluate,
    'sweep': cmd_sweep,
    'explain': cmd_explain,
}


def verbose():
    return os.environ.get('PYSERT_VERBOSE', '') not in ('', '0')


def main(argv=None):
    """
    Run one command and return the exit status.
    """
    if verbose():
        log.startLogging(sys.stderr, setStdout=False)
    options = Options()
    try:
        options.parseOptions(argv)
    except usage.UsageError as e:
        sys.stderr.write('%s\npysert: %s\n' % (options, e))
        return 1
    try:
        COMMANDS[options.subCommand](options.subOptions)
    except SertError as e:
        sys.stderr.write('pysert %s: %s\n' % (options.subCommand, e))
        return e.error_code
    except Exception as e:
        log.err(None, 'pysert %s failed' % options.subCommand)
        sys.stderr.write('pysert %s: unexpected error: %r\n' % (options.subCommand, e))
        return 1
    return 0


def run():
    sys.exit(main())
