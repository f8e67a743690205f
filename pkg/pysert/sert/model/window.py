# encoding: utf-8
"""
Fixed-size model input.

Windows hold a variable number of triplets. The flatten head needs a fixed
size, so every window is padded to ``n_max`` positions. Padded positions
have a false mask, a zero embedding, and are ignored by attention.
"""
import numpy as np

from pysert.sert.encoding import cve, embed_location, normalize_inputs
from pysert.sert.error import UsageError
from pysert.sert.mode import LocationMode
from pysert.sert.tensor import add, take, where


class TripletBatch(object):

    """
    Padded arrays for ``B`` windows.

    :ivar f: ``(B, n_max)`` variable ids.
    :ivar t_norm: ``(B, n_max)`` normalized times.
    :ivar v_norm: ``(B, n_max)`` normalized values.
    :ivar mask: ``(B, n_max)`` true on real triplets.
    :ivar location: ``(B,)`` location ids (zeros in mode A).
    :ivar targets: ``(B, K)`` normalized targets, 0 where unobserved.
    :ivar target_mask: ``(B, K)`` true on observed targets.
    """

    FIELDS = ('f', 't_norm', 'v_norm', 'mask', 'location', 'targets', 'target_mask')

    def __init__(self, f, t_norm, v_norm, mask, location, targets, target_mask):
        self.f           = f
        self.t_norm      = t_norm
        self.v_norm      = v_norm
        self.mask        = mask
        self.location    = location
        self.targets     = targets
        self.target_mask = target_mask

    def __len__(self):
        return len(self.f)

    def select(self, indices):
        return TripletBatch(*[getattr(self, name)[indices] for name in self.FIELDS])


class PaddedWindow(object):

    """
    Embedded batch handed to the forecasters.

    :ivar embeddings: Tensor ``(B, n_max, d)``, zero on padded positions.
    :ivar mask: ``(B, n_max)`` booleans, true on real triplets.
    :ivar location: Tensor ``(B, d)`` of location embeddings, mode B only.
    """

    def __init__(self, embeddings, mask, location=None):
        self.embeddings = embeddings
        self.mask       = np.asarray(mask, dtype=bool)
        self.location   = location

    def check(self, config):
        shape = self.embeddings.shape
        if len(shape) != 3 or shape[1:] != (config.n_max, config.d) or self.mask.shape != shape[:2]:
            raise UsageError(UsageError.SHAPE_MISMATCH,
                             'window %s for n_max=%d, d=%d' % (shape, config.n_max, config.d))
        if config.location_mode == LocationMode.B:
            if self.location is None or self.location.shape != (shape[0], config.d):
                raise UsageError(UsageError.SHAPE_MISMATCH, 'mode B needs a (B, d) location embedding')


def pad_windows(windows, config, stats):
    """
    Turn :py:class:`pysert.sert.data.window.SampleWindow` objects into a
    :py:class:`TripletBatch`. Windows longer than ``n_max`` keep their most
    recent triplets.
    """
    size, n_max, n_targets = len(windows), config.n_max, config.n_targets
    f = np.zeros((size, n_max), dtype=np.intp)
    t_norm = np.zeros((size, n_max))
    v_norm = np.zeros((size, n_max))
    mask = np.zeros((size, n_max), dtype=bool)
    location = np.zeros(size, dtype=np.intp)
    targets = np.zeros((size, n_targets))
    target_mask = np.zeros((size, n_targets), dtype=bool)
    for j, window in enumerate(windows):
        if len(window.targets) != n_targets:
            raise UsageError(UsageError.SHAPE_MISMATCH,
                             'window with %d targets, model has %d' % (len(window.targets), n_targets))
        n = min(len(window.f), n_max)
        tt, ff, vv = window.t[-n:], window.f[-n:], window.v[-n:]
        f[j, :n] = ff
        t_norm[j, :n], v_norm[j, :n] = normalize_inputs(tt, vv, ff, stats, config.lookback)
        mask[j, :n] = True
        location[j] = window.location or 0
        observed = np.asarray(window.target_mask, dtype=bool)
        index = np.arange(n_targets)
        targets[j] = np.where(observed, (np.asarray(window.targets) - stats.mean[index]) / stats.std[index], 0.0)
        target_mask[j] = observed
    return TripletBatch(f, t_norm, v_norm, mask, location, targets, target_mask)


def embed_batch(batch, params, config, vocabulary):
    """
    Triplet embeddings ``e^f + e^t + e^v`` of a batch, as a
    :py:class:`PaddedWindow`.
    """
    embeddings = add(add(take(params['variable_embedding'], batch.f),
                         cve(batch.t_norm, params, 'cve_time')),
                     cve(batch.v_norm, params, 'cve_value'))
    embeddings = where(batch.mask[..., None], embeddings)
    location = None
    if config.location_mode == LocationMode.B:
        location = embed_location(batch.location, vocabulary, params)
    return PaddedWindow(embeddings, batch.mask, location)
