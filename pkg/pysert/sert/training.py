# encoding: utf-8
"""
Fitting a forecaster.

The objective is the masked mean squared error over a batch of ``J``
windows::

    L = 1/J * sum_j sum_k m_jk (pred_jk - y_jk)^2

Unobserved targets (``m_jk = 0``) contribute exactly nothing, to the loss
and to every gradient. The sum is divided by ``J`` and not by the number
of observed targets.
"""
import time
from collections import OrderedDict

import numpy as np
from twisted.python import log

from pysert.sert.config import substream
from pysert.sert.error import DataError, NumericalError, UsageError
from pysert.sert.model import Forecaster
from pysert.sert.output import write_atomic
from pysert.sert.tensor import (backward, central_difference, div, kink_trace, mul,
                                relative_error, same_kinks, sub, tensor_sum, where)


class TrainConfig(object):

    """
    Optimizer and stopping rule.

    :param float learning_rate: Adam step size. Zero is accepted and
        leaves every parameter untouched.
    :param int batch_size: Windows per mini-batch.
    :param int max_epochs: Upper bound on the number of epochs.
    :param int patience: Epochs without validation improvement before
        stopping.
    :param float clip_norm: Global gradient norm limit.
    :param int seed: Seed of the ``init``, ``batching`` and ``dropout``
        streams.
    """

    FIELDS = ('learning_rate', 'batch_size', 'max_epochs', 'patience', 'clip_norm', 'seed')

    def __init__(self, learning_rate=1e-3, batch_size=32, max_epochs=100, patience=5,
                 clip_norm=5.0, seed=0):
        self.learning_rate = float(learning_rate)
        self.batch_size    = int(batch_size)
        self.max_epochs    = int(max_epochs)
        self.patience      = int(patience)
        self.clip_norm     = float(clip_norm)
        self.seed          = int(seed)
        self.validate()

    def __repr__(self):
        return 'TrainConfig(%s)' % ', '.join('%s=%r' % item for item in self.as_dict().items())

    def validate(self):
        if self.learning_rate < 0:
            raise UsageError(UsageError.BAD_CONFIG, 'learning_rate must not be negative')
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise UsageError(UsageError.BAD_CONFIG, 'batch_size, max_epochs and patience must be positive')
        if self.patience > self.max_epochs:
            raise UsageError(UsageError.BAD_CONFIG,
                             'patience (%d) exceeds max_epochs (%d)' % (self.patience, self.max_epochs))
        if self.clip_norm <= 0:
            raise UsageError(UsageError.BAD_CONFIG, 'clip_norm must be positive')

    def replace(self, **changes):
        values = self.as_dict()
        values.update(changes)
        return TrainConfig(**values)

    def as_dict(self):
        return OrderedDict((name, getattr(self, name)) for name in self.FIELDS)

    @classmethod
    def from_config(cls, config):
        return cls(**dict((name, config[name]) for name in cls.FIELDS))


class LossReport(object):

    """
    One epoch. Two reports are equal when their epoch and losses are;
    the wall clock time is left out.
    """

    HEADER = 'epoch,train_loss,val_loss,sec_per_epoch\n'

    def __init__(self, epoch, train_loss, val_loss, seconds=0.0):
        self.epoch      = int(epoch)
        self.train_loss = float(train_loss)
        self.val_loss   = float(val_loss)
        self.seconds    = float(seconds)

    def __eq__(self, other):
        return (isinstance(other, LossReport) and self.epoch == other.epoch and
                self.train_loss == other.train_loss and self.val_loss == other.val_loss)

    def __repr__(self):
        return 'LossReport(epoch=%d, train_loss=%.6g, val_loss=%.6g, seconds=%.2f)' % (
            self.epoch, self.train_loss, self.val_loss, self.seconds)

    def pack(self):
        return '%d,%r,%r,%.3f\n' % (self.epoch, self.train_loss, self.val_loss, self.seconds)


def pack_reports(reports):
    """
    Return the metrics CSV text of a list of LossReport.
    """
    return LossReport.HEADER + ''.join(report.pack() for report in reports)


def masked_mse(pred, target, mask):
    """
    :param pred: Tensor ``(J, K)``.
    :param target: Array ``(J, K)``; entries where ``mask`` is false are
        never read.
    :param mask: Booleans ``(J, K)``.
    :return: Scalar tensor.
    """
    mask = np.asarray(mask, dtype=bool)
    if pred.shape != mask.shape or np.shape(target) != mask.shape:
        raise NumericalError(NumericalError.SHAPE_MISMATCH,
                             'pred %s, target %s, mask %s' % (pred.shape, np.shape(target), mask.shape))
    size = pred.shape[0]
    if not size:
        raise DataError(DataError.EMPTY_DATASET, 'masked_mse of an empty batch')
    diff = sub(pred, np.where(mask, target, 0.0))
    return div(tensor_sum(where(mask, mul(diff, diff))), float(size))


class Adam(object):

    """
    Adam on a :py:class:`pysert.sert.tensor.ParameterStore`, using the
    ``grad`` accumulated on each parameter.

    A zero gradient leaves the parameters unchanged only while the moment
    estimates are zero, that is before any nonzero gradient was seen.
    Afterwards the first moment keeps moving them.
    """

    def __init__(self, params, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = OrderedDict((name, np.zeros_like(p.data)) for name, p in params.items())
        self.v = OrderedDict((name, np.zeros_like(p.data)) for name, p in params.items())

    def step(self):
        self.t += 1
        first = 1.0 - self.beta1 ** self.t
        second = 1.0 - self.beta2 ** self.t
        for name, p in self.params.items():
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * p.grad
            v *= self.beta2
            v += (1.0 - self.beta2) * p.grad * p.grad
            p.data -= self.learning_rate * (m / first) / (np.sqrt(v / second) + self.eps)


def clip_gradients(params, max_norm):
    """
    Scale every gradient down so that their joint L2 norm is at most
    ``max_norm``. Return the norm before clipping.
    """
    norm = float(np.sqrt(sum(float(np.sum(p.grad * p.grad)) for p in params.tensors())))
    if norm > max_norm:
        scale = max_norm / norm
        for p in params.tensors():
            p.grad *= scale
    return norm


def evaluate_loss(forecaster, batch, batch_size=256):
    """
    Masked MSE of ``forecaster`` over a whole TripletBatch, dropout off.
    """
    total = 0.0
    for i in range(0, len(batch), batch_size):
        part = batch.select(slice(i, i + batch_size))
        pred, _ = forecaster.forward(part)
        total += float(masked_mse(pred, part.targets, part.target_mask).data) * len(part)
    return total / len(batch)


def fit(kind, train_windows, val_windows, model_config, train_config, vocabulary, stats,
        run_config=None, checkpoint_path=None, metrics_path=None):
    """
    Train a forecaster with Adam on shuffled mini-batches, stopping early
    on the validation masked MSE.

    :return: ``(forecaster, reports)``. The forecaster holds the
        parameters of the best validation epoch; ``reports`` has one
        LossReport per epoch run.
    :raises NumericalError: A non finite loss.
    """
    if not len(train_windows):
        raise DataError(DataError.EMPTY_DATASET, 'no training window')
    if not len(val_windows):
        raise DataError(DataError.EMPTY_DATASET, 'no validation window')
    forecaster = Forecaster.create(kind, model_config, vocabulary, stats, train_config.seed, run_config)
    params = forecaster.params
    train_batch = forecaster.batch(train_windows)
    val_batch = forecaster.batch(val_windows)
    optimizer = Adam(params, train_config.learning_rate)
    shuffle = substream(train_config.seed, 'batching')
    noise = substream(train_config.seed, 'dropout')
    log.msg('fit %s: %d parameters, %d training and %d validation windows'
            % (kind, params.size(), len(train_batch), len(val_batch)))

    reports = []
    best, best_state, stale = np.inf, params.state(), 0
    for epoch in range(1, train_config.max_epochs + 1):
        started = time.perf_counter()
        order = shuffle.permutation(len(train_batch))
        total = 0.0
        for i in range(0, len(order), train_config.batch_size):
            part = train_batch.select(order[i:i + train_config.batch_size])
            params.zero_grads()
            pred, _ = forecaster.forward(part, noise)
            loss = masked_mse(pred, part.targets, part.target_mask)
            value = float(loss.data)
            if not np.isfinite(value):
                raise NumericalError(NumericalError.NON_FINITE_LOSS,
                                     '%s epoch %d, batch %d: loss %r' % (kind, epoch, i // train_config.batch_size, value))
            backward(loss)
            clip_gradients(params, train_config.clip_norm)
            optimizer.step()
            total += value * len(part)
        val_loss = evaluate_loss(forecaster, val_batch)
        if not np.isfinite(val_loss):
            raise NumericalError(NumericalError.NON_FINITE_LOSS,
                                 '%s epoch %d: validation loss %r' % (kind, epoch, val_loss))
        report = LossReport(epoch, total / len(train_batch), val_loss, time.perf_counter() - started)
        reports.append(report)
        log.msg('%s %r' % (kind, report))
        if metrics_path is not None:
            write_atomic(metrics_path, pack_reports(reports))

        if val_loss < best:
            best, best_state, stale = val_loss, params.state(), 0
            if checkpoint_path is not None:
                forecaster.save(checkpoint_path)
                log.msg('checkpoint written to %s (epoch %d)' % (checkpoint_path, epoch))
        else:
            stale += 1
            if stale >= train_config.patience:
                log.msg('early stop after epoch %d, best validation loss %r' % (epoch, best))
                break

    params.load_state(best_state)
    return forecaster, reports


def gradcheck(kind, windows, model_config, vocabulary, stats, seed, n_coordinates=200, step=1e-3):
    """
    Compare the reverse mode gradient of the masked MSE with fourth order
    central finite differences.

    Every parameter coordinate is checked when there are at most
    ``n_coordinates`` of them, otherwise a subsample drawn from the
    ``gradcheck`` stream. Coordinates where a ReLU changes side between
    the evaluations are left out.

    :return: The largest relative error seen.
    """
    forecaster = Forecaster.create(kind, model_config, vocabulary, stats, seed)
    params = forecaster.params
    batch = forecaster.batch(windows)

    def loss():
        pred, _ = forecaster.forward(batch)
        return masked_mse(pred, batch.targets, batch.target_mask)

    params.zero_grads()
    backward(loss())

    coordinates = [(name, index) for name, tensor in params.items() for index in np.ndindex(tensor.shape)]
    if len(coordinates) > n_coordinates:
        rng = substream(seed, 'gradcheck')
        picked = np.sort(rng.choice(len(coordinates), size=n_coordinates, replace=False))
        coordinates = [coordinates[i] for i in picked]

    worst, skipped = 0.0, 0
    for name, index in coordinates:
        tensor = params[name]
        traces = []

        def value():
            with kink_trace() as trace:
                result = float(loss().data)
            traces.append(trace)
            return result

        numeric = central_difference(value, tensor.data, index, step, order=4)
        if not all(same_kinks(traces[0], trace) for trace in traces[1:]):
            skipped += 1
            continue
        worst = max(worst, relative_error(float(tensor.grad[index]), numeric))
    if skipped:
        log.msg('gradcheck %s: %d coordinates across a ReLU kink left out' % (kind, skipped))
    return worst
