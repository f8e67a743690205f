# encoding: utf-8
"""
Dense float64 arrays with reverse-mode automatic differentiation.

Every operation evaluates eagerly and records, on its result, the tensors
it was computed from and a function mapping the gradient of the result to
the gradients of those inputs. :py:func:`backward` walks that record in
reverse topological order. Only leaves (tensors created directly, such as
parameters) keep an accumulated ``grad``.

A graph belongs to one thread. Distinct graphs may be built concurrently.
"""
import threading
from contextlib import contextmanager

import numpy as np

from pysert.sert.error import NumericalError, UsageError


DTYPE = np.float64

_local = threading.local()


class Tensor(object):

    """
    An n-dimensional array of 64-bit floats, stored row-major.

    :param data: Anything numpy can turn into an array.
    :param bool requires_grad: Whether gradients flow to this tensor.
    """

    def __init__(self, data, requires_grad=False, parents=(), backward=None, op=''):
        self.data = np.array(data, dtype=DTYPE)
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(self.data) if self.requires_grad else None
        self.parents = tuple(parents)
        self.op = op
        self._backward = backward

    @classmethod
    def result(cls, data, parents, backward, op):
        """
        Build the output of an operation. The graph is only recorded
        when one of the inputs needs a gradient.
        """
        out = cls.__new__(cls)
        out.data = np.asarray(data, dtype=DTYPE)
        out.requires_grad = any(p.requires_grad for p in parents)
        out.grad = None
        out.op = op
        if out.requires_grad:
            out.parents = tuple(parents)
            out._backward = backward
        else:
            out.parents = ()
            out._backward = None
        return out

    def __repr__(self):
        return 'Tensor(shape=%s, op=%r, requires_grad=%s)' % (
            self.shape, self.op, self.requires_grad)

    def __len__(self):
        return len(self.data)

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def numpy(self):
        return self.data.copy()

    def zero_grad(self):
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self, axis=None, keepdims=False):
        return tensor_sum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        return reshape(self, *shape)

    def transpose(self, *axes):
        return transpose(self, *axes)

    def tanh(self):
        return tanh(self)

    def relu(self):
        return relu(self)


def as_tensor(x):
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def _unbroadcast(grad, shape):
    """
    Sum ``grad`` back down to ``shape`` after numpy broadcasting.
    """
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(*shapes):
    try:
        return np.broadcast_shapes(*shapes)
    except ValueError:
        raise NumericalError(NumericalError.SHAPE_MISMATCH,
                             'cannot broadcast %s' % ' and '.join(str(s) for s in shapes))


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a.shape, b.shape)

    def backward(grad):
        return _unbroadcast(grad, a.shape), _unbroadcast(grad, b.shape)
    return Tensor.result(a.data + b.data, (a, b), backward, 'add')


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a.shape, b.shape)

    def backward(grad):
        return _unbroadcast(grad, a.shape), _unbroadcast(-grad, b.shape)
    return Tensor.result(a.data - b.data, (a, b), backward, 'sub')


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a.shape, b.shape)

    def backward(grad):
        return (_unbroadcast(grad * b.data, a.shape),
                _unbroadcast(grad * a.data, b.shape))
    return Tensor.result(a.data * b.data, (a, b), backward, 'mul')


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a.shape, b.shape)

    def backward(grad):
        return (_unbroadcast(grad / b.data, a.shape),
                _unbroadcast(-grad * a.data / (b.data * b.data), b.shape))
    return Tensor.result(a.data / b.data, (a, b), backward, 'div')


def matmul(a, b):
    """
    Matrix product over the last two extents. Leading extents broadcast,
    so a ``(B, N, 1, d)`` tensor multiplies a ``(N, d, K)`` one.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise NumericalError(NumericalError.SHAPE_MISMATCH,
                             'matmul %s by %s' % (a.shape, b.shape))
    _broadcast_shape(a.shape[:-2], b.shape[:-2])

    def backward(grad):
        grad_a = np.matmul(grad, np.swapaxes(b.data, -1, -2))
        grad_b = np.matmul(np.swapaxes(a.data, -1, -2), grad)
        return _unbroadcast(grad_a, a.shape), _unbroadcast(grad_b, b.shape)
    return Tensor.result(np.matmul(a.data, b.data), (a, b), backward, 'matmul')


def tensor_sum(a, axis=None, keepdims=False):
    a = as_tensor(a)

    def backward(grad):
        if axis is not None and not keepdims:
            grad = np.expand_dims(grad, axis)
        return (np.array(np.broadcast_to(grad, a.shape)),)
    return Tensor.result(a.data.sum(axis=axis, keepdims=keepdims), (a,), backward, 'sum')


def mean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    if axis is None:
        count = a.data.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = int(np.prod([a.shape[i] for i in axes]))
    return div(tensor_sum(a, axis, keepdims), float(count))


def reshape(a, *shape):
    a = as_tensor(a)
    if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
        shape = tuple(shape[0])
    try:
        data = a.data.reshape(shape)
    except ValueError:
        raise NumericalError(NumericalError.SHAPE_MISMATCH,
                             'reshape %s to %s' % (a.shape, shape))

    def backward(grad):
        return (grad.reshape(a.shape),)
    return Tensor.result(data, (a,), backward, 'reshape')


def transpose(a, *axes):
    a = as_tensor(a)
    if not axes:
        axes = tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(axes))

    def backward(grad):
        return (grad.transpose(inverse),)
    return Tensor.result(a.data.transpose(axes), (a,), backward, 'transpose')


def tanh(a):
    a = as_tensor(a)
    y = np.tanh(a.data)

    def backward(grad):
        return (grad * (1.0 - y * y),)
    return Tensor.result(y, (a,), backward, 'tanh')


def relu(a):
    a = as_tensor(a)
    active = a.data > 0
    traces = getattr(_local, 'kink_traces', None)
    if traces:
        traces[-1].append(active.copy())

    def backward(grad):
        return (grad * active,)
    return Tensor.result(np.where(active, a.data, 0.0), (a,), backward, 'relu')


def where(mask, a):
    """
    Keep ``a`` where ``mask`` is true and put exact zeros elsewhere.
    Nothing flows back through the zeroed entries.
    """
    a = as_tensor(a)
    mask = np.asarray(mask, dtype=bool)
    _broadcast_shape(mask.shape, a.shape)

    def backward(grad):
        return (_unbroadcast(np.where(mask, grad, 0.0), a.shape),)
    return Tensor.result(np.where(mask, a.data, 0.0), (a,), backward, 'where')


def softmax_lastdim(a, mask=None):
    """
    Softmax over the last extent. Entries where ``mask`` is false get a
    weight of exactly zero and do not influence the other entries.
    """
    a = as_tensor(a)
    z = a.data
    if mask is not None:
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), z.shape)
        z = np.where(mask, z, -np.inf)
    top = np.max(z, axis=-1, keepdims=True)
    top = np.where(np.isneginf(top), 0.0, top)
    e = np.exp(z - top)
    total = e.sum(axis=-1, keepdims=True)
    with np.errstate(invalid='ignore', divide='ignore'):
        y = np.where(total > 0, e / total, 0.0)

    def backward(grad):
        return (y * (grad - (grad * y).sum(axis=-1, keepdims=True)),)
    return Tensor.result(y, (a,), backward, 'softmax')


def layernorm_lastdim(a, gain, bias, eps=1e-5):
    a, gain, bias = as_tensor(a), as_tensor(gain), as_tensor(bias)
    centered = a.data - a.data.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
    normed = centered * inv_std

    def backward(grad):
        grad_normed = grad * gain.data
        grad_a = inv_std * (
            grad_normed
            - grad_normed.mean(axis=-1, keepdims=True)
            - normed * (grad_normed * normed).mean(axis=-1, keepdims=True))
        return (grad_a,
                _unbroadcast(grad * normed, gain.shape),
                _unbroadcast(grad, bias.shape))
    return Tensor.result(normed * gain.data + bias.data, (a, gain, bias), backward, 'layernorm')


def take(table, indices):
    """
    Row lookup: ``table[indices]`` for an integer array of any shape.
    """
    table = as_tensor(table)
    indices = np.asarray(indices, dtype=np.intp)

    def backward(grad):
        grad_table = np.zeros_like(table.data)
        np.add.at(grad_table, indices, grad)
        return (grad_table,)
    return Tensor.result(table.data[indices], (table,), backward, 'take')


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise NumericalError(NumericalError.SHAPE_MISMATCH,
                             'concat %s' % [t.shape for t in tensors])
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(grad):
        return tuple(np.split(grad, bounds, axis=axis))
    return Tensor.result(data, tensors, backward, 'concat')


def dropout(a, rate, rng=None):
    """
    Inverted dropout. Identity when ``rng`` is None (evaluation) or the
    rate is zero.
    """
    if rng is None or rate <= 0:
        return as_tensor(a)
    keep = rng.random(a.shape) >= rate
    return mul(a, keep / (1.0 - rate))


def _topological(root):
    order = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss):
    """
    Accumulate d(loss)/d(leaf) into the ``grad`` of every leaf tensor
    that requires a gradient. Calling it twice accumulates twice.

    :param Tensor loss: A tensor holding a single value.
    """
    if loss.data.size != 1:
        raise NumericalError(NumericalError.NOT_SCALAR, 'loss of shape %s' % (loss.shape,))
    if not loss.requires_grad:
        return
    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(_topological(loss)):
        grad = grads.pop(id(node), None)
        if grad is None:
            continue
        if not node.parents:
            node.grad = node.grad + grad if node.grad is not None else grad.copy()
            continue
        for parent, parent_grad in zip(node.parents, node._backward(grad)):
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + parent_grad
            else:
                grads[key] = parent_grad


@contextmanager
def kink_trace():
    """
    Record the sign pattern of every ReLU evaluated inside the block.
    Finite differences across a pattern change are not trustworthy.
    """
    traces = getattr(_local, 'kink_traces', None)
    if traces is None:
        traces = _local.kink_traces = []
    trace = []
    traces.append(trace)
    try:
        yield trace
    finally:
        traces.pop()


def same_kinks(first, second):
    if len(first) != len(second):
        return False
    return all(np.array_equal(a, b) for a, b in zip(first, second))


def central_difference(f, array, index, step=1e-3, order=2):
    """
    Central difference of ``f`` along one coordinate of ``array``, which is
    restored afterwards.

    ``order=2`` is ``(f(x + s) - f(x - s)) / 2s``. ``order=4`` adds the
    points at ``x +- 2s`` and cancels the ``s**2`` error term.
    """
    if order not in (2, 4):
        raise UsageError(UsageError.BAD_ARGUMENT, 'difference order %r, expected 2 or 4' % (order,))
    original = array[index]

    def at(offset):
        array[index] = original + offset * step
        return f()

    try:
        if order == 2:
            return (at(1) - at(-1)) / (2.0 * step)
        return (8.0 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12.0 * step)
    finally:
        array[index] = original


def relative_error(analytic, numeric, floor=1e-8):
    """
    ``|a - n| / max(|a|, |n|)``. The floor keeps the ratio finite when both
    values are zero.
    """
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)
