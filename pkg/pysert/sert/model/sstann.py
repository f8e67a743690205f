# encoding: utf-8
"""
SST-ANN: triplet embeddings mapped straight to the K outputs.

Position ``i`` has its own output weights ``W[i]`` of shape ``(d, K)``, so
every prediction splits exactly into one contribution per triplet::

    y_k = sum_i c_ik + b_k,    c_ik = W[i, :, k] . e_i

In mode B the location embedding adds a per-location term to the bias.
"""
import math

import numpy as np

from pysert.sert.mode import LocationMode
from pysert.sert.tensor import add, matmul, reshape, tensor_sum, where


def init_sstann(params, config, rng):
    bound = 1.0 / math.sqrt(config.n_max * config.d)
    params.add('head.weight', rng.uniform(-bound, bound, (config.n_max, config.d, config.n_targets)))
    if config.location_mode == LocationMode.B:
        params.add('head.location_weight',
                   rng.uniform(-bound, bound, (config.d, config.n_targets)))
    params.add('head.bias', np.zeros(config.n_targets))


def sstann_bias(window, params, config):
    """
    The ``b`` of the decomposition, ``(B, K)``: the head bias, plus the
    location term in mode B.
    """
    size = window.embeddings.shape[0]
    bias = params['head.bias']
    if config.location_mode == LocationMode.B:
        return add(matmul(window.location, params['head.location_weight']), bias)
    return add(np.zeros((size, config.n_targets)), bias)


def sstann_forward(window, params, config):
    """
    :return: ``(predictions (B, K), contributions (B, n_max, K))``;
        padded positions contribute exactly zero.
    """
    window.check(config)
    size = window.embeddings.shape[0]
    embeddings = where(window.mask[..., None], window.embeddings)
    rows = reshape(embeddings, (size, config.n_max, 1, config.d))
    contributions = reshape(matmul(rows, params['head.weight']), (size, config.n_max, config.n_targets))
    predictions = add(tensor_sum(contributions, axis=1), sstann_bias(window, params, config))
    return predictions, contributions
