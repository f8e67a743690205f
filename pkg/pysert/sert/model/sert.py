# encoding: utf-8
"""
SERT: triplet embeddings, ``k`` transformer encoder blocks, flatten, and a
one hidden layer ReLU head::

    +------------------+     +-----------------+     +---------+     +------+
    | triplet encoding | --> | encoder block xk | --> | flatten | --> | head | --> K
    +------------------+     +-----------------+     +---------+     +------+
                                                          ^
                                         location embedding (mode B)

Encoder blocks are pre-norm::

    x = x + Attention(LayerNorm(x))
    x = x + FFN(LayerNorm(x))

The query/key/value projections of all heads are stored side by side in
one ``d x d`` matrix per role; head ``i`` uses columns
``[i * d/h, (i + 1) * d/h)``.
"""
import math

import numpy as np

from pysert.sert.error import DataError
from pysert.sert.mode import LocationMode
from pysert.sert.tensor import (add, concat, div, dropout, layernorm_lastdim, matmul, relu,
                                reshape, softmax_lastdim, transpose, where)


def head_width(config):
    width = config.n_max * config.d
    if config.location_mode == LocationMode.B:
        width += config.d
    return width


def init_sert(params, config, rng):
    d = config.d
    inner = 4 * d
    for i in range(config.k):
        prefix = 'block%d' % i
        bound = 1.0 / math.sqrt(d)
        for role in ('query', 'key', 'value', 'output'):
            params.add('%s.attention.%s' % (prefix, role), rng.uniform(-bound, bound, (d, d)))
        for norm in ('norm1', 'norm2'):
            params.add('%s.%s.gain' % (prefix, norm), np.ones(d))
            params.add('%s.%s.bias' % (prefix, norm), np.zeros(d))
        params.add(prefix + '.ffn.weight1', rng.uniform(-bound, bound, (d, inner)))
        params.add(prefix + '.ffn.bias1', np.zeros(inner))
        params.add(prefix + '.ffn.weight2', rng.uniform(-0.5 * bound, 0.5 * bound, (inner, d)))
        params.add(prefix + '.ffn.bias2', np.zeros(d))
    width = head_width(config)
    params.add('head.hidden_weight', rng.uniform(-1.0 / math.sqrt(width), 1.0 / math.sqrt(width), (width, d)))
    params.add('head.hidden_bias', np.zeros(d))
    params.add('head.output_weight', rng.uniform(-1.0 / math.sqrt(d), 1.0 / math.sqrt(d), (d, config.n_targets)))
    params.add('head.output_bias', np.zeros(config.n_targets))


def attention_block(x, mask, params, prefix, config, rng=None, return_weights=False):
    """
    One encoder block over ``x`` of shape ``(B, N, d)``.

    :param mask: ``(B, N)`` booleans; false keys get zero attention.
    :param rng: Dropout generator, None at inference.
    :return: The block output, and the attention weights
        ``(B, heads, N, N)`` when ``return_weights`` is set.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any(axis=-1).all():
        raise DataError(DataError.EMPTY_DATASET, 'window without any triplet')
    size, n, d = x.shape
    heads, width = config.n_heads, config.head_dim

    def split(t):
        return transpose(reshape(t, (size, n, heads, width)), 0, 2, 1, 3)

    normed = layernorm_lastdim(x, params[prefix + '.norm1.gain'], params[prefix + '.norm1.bias'])
    query = split(matmul(normed, params[prefix + '.attention.query']))
    key = split(matmul(normed, params[prefix + '.attention.key']))
    value = split(matmul(normed, params[prefix + '.attention.value']))

    scores = div(matmul(query, transpose(key, 0, 1, 3, 2)), math.sqrt(width))
    weights = softmax_lastdim(scores, mask[:, None, None, :])
    context = reshape(transpose(matmul(weights, value), 0, 2, 1, 3), (size, n, d))
    x = add(x, dropout(matmul(context, params[prefix + '.attention.output']), config.dropout, rng))

    normed = layernorm_lastdim(x, params[prefix + '.norm2.gain'], params[prefix + '.norm2.bias'])
    hidden = relu(add(matmul(normed, params[prefix + '.ffn.weight1']), params[prefix + '.ffn.bias1']))
    hidden = add(matmul(hidden, params[prefix + '.ffn.weight2']), params[prefix + '.ffn.bias2'])
    x = add(x, dropout(hidden, config.dropout, rng))
    if return_weights:
        return x, weights
    return x


def sert_forward(window, params, config, rng=None):
    """
    Predictions ``(B, K)`` of SERT for a :py:class:`PaddedWindow`.
    Deterministic when ``rng`` is None.
    """
    window.check(config)
    mask = window.mask
    x = where(mask[..., None], window.embeddings)
    for i in range(config.k):
        x = attention_block(x, mask, params, 'block%d' % i, config, rng)
    x = where(mask[..., None], x)
    flat = reshape(x, (x.shape[0], config.n_max * config.d))
    if config.location_mode == LocationMode.B:
        flat = concat([flat, window.location], axis=-1)
    hidden = relu(add(matmul(flat, params['head.hidden_weight']), params['head.hidden_bias']))
    return add(matmul(hidden, params['head.output_weight']), params['head.output_bias'])
