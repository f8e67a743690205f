# encoding: utf-8
"""
Named store of trainable tensors and its binary form.
"""
import struct
from collections import OrderedDict

import numpy as np

from pysert.sert.error import DataError, UsageError
from pysert.sert.tensor.tensor import Tensor


class ParameterStore(object):

    """
    The single home of every learned weight, iterated in insertion order.

    Binary format::

        +---------------------------------------------------+
        |   Marker "PYSERTPS" (8 octets)                    |
        +---------------------------------------------------+
        |   Parameter count (4 octets)                      |
        +---------------------------------------------------+
        |   Parameters (variable)                           |
        +---------------------------------------------------+

    Each parameter is encoded as::

        +---------------------------------------------------+
        |   Name length (2 octets)                          |
        +---------------------------------------------------+
        |   Name, UTF-8 (variable)                          |
        +---------------------------------------------------+
        |   Rank (1 octet)                                  |
        +---------------------------------------------------+
        |   Extents (4 octets each)                         |
        +---------------------------------------------------+
        |   Values, big-endian float64 (8 octets each)      |
        +---------------------------------------------------+
    """

    MARKER = b'PYSERTPS'

    def __init__(self):
        self.params = OrderedDict()

    def __len__(self):
        return len(self.params)

    def __iter__(self):
        return iter(self.params)

    def __contains__(self, name):
        return name in self.params

    def __getitem__(self, name):
        try:
            return self.params[name]
        except KeyError:
            raise UsageError(UsageError.SHAPE_MISMATCH, 'no parameter %r' % name)

    def __eq__(self, other):
        if not isinstance(other, ParameterStore) or list(self) != list(other):
            return False
        return all(np.array_equal(self[name].data, other[name].data) for name in self)

    def add(self, name, data):
        """
        Register a new parameter and return its tensor.
        """
        if name in self.params:
            raise UsageError(UsageError.BAD_ARGUMENT, 'duplicate parameter %r' % name)
        tensor = Tensor(data, requires_grad=True)
        self.params[name] = tensor
        return tensor

    def items(self):
        return self.params.items()

    def tensors(self):
        return list(self.params.values())

    def size(self):
        return sum(t.data.size for t in self.params.values())

    def zero_grads(self):
        for tensor in self.params.values():
            tensor.zero_grad()

    def state(self):
        return OrderedDict((name, t.data.copy()) for name, t in self.params.items())

    def load_state(self, state):
        """
        Overwrite parameter values in place from a ``name -> array`` map
        with the same names and shapes.
        """
        if list(state) != list(self.params):
            raise DataError(DataError.BAD_CHECKPOINT, 'parameter names differ')
        for name, values in state.items():
            if values.shape != self.params[name].shape:
                raise DataError(DataError.BAD_CHECKPOINT,
                                '%s: shape %s, expected %s' % (name, values.shape, self.params[name].shape))
            self.params[name].data[...] = values

    def pack(self):
        result = self.MARKER
        result += struct.pack('!I', len(self.params))
        for name, tensor in self.params.items():
            encoded = name.encode('utf-8')
            result += struct.pack('!H', len(encoded))
            result += encoded
            result += struct.pack('!B', tensor.ndim)
            result += struct.pack('!%dI' % tensor.ndim, *tensor.shape)
            result += tensor.data.astype('>f8').tobytes()
        return result

    @classmethod
    def unpack(cls, msg):
        """
        Factory function.
        Return the ParameterStore encoded by ``msg``.
        """
        msg = bytes(msg)
        if msg[:8] != cls.MARKER:
            raise DataError(DataError.BAD_CHECKPOINT, 'bad parameter marker')
        store = cls()
        try:
            count, = struct.unpack('!I', msg[8:12])
            offset = 12
            for _ in range(count):
                length, = struct.unpack('!H', msg[offset:offset + 2])
                offset += 2
                name = msg[offset:offset + length].decode('utf-8')
                offset += length
                rank, = struct.unpack('!B', msg[offset:offset + 1])
                offset += 1
                shape = struct.unpack('!%dI' % rank, msg[offset:offset + 4 * rank])
                offset += 4 * rank
                size = int(np.prod(shape))
                if offset + 8 * size > len(msg):
                    raise DataError(DataError.BAD_CHECKPOINT, '%s: truncated values' % name)
                values = np.frombuffer(msg[offset:offset + 8 * size], dtype='>f8')
                offset += 8 * size
                store.add(name, values.astype(np.float64).reshape(shape))
        except (struct.error, UnicodeDecodeError) as e:
            raise DataError(DataError.BAD_CHECKPOINT, 'truncated parameters (%s)' % e)
        if offset != len(msg):
            raise DataError(DataError.BAD_CHECKPOINT, '%d trailing octets' % (len(msg) - offset))
        return store
