# encoding: utf-8
"""
Errors raised by pySERT.

Every error carries a code and a subcode. The code is also the exit status
of the command line.
"""


class SertError(Exception):

    """
    Base of every pySERT error.

    Error Code:

        Identifies the family of the error. It is used as the process
        exit status by :py:mod:`pysert.sert.cli`.

    Error subcode:

        Gives more specific information about the nature of the error.
        If no appropriate subcode exists, zero (Unspecific) is used.

    Data:

        Free text used to diagnose the reason of the error (a row
        number, the violated constraint, a file name...).
    """

    KIND = 'Generic'

    UNSPECIFIC = 0

    str_subcode = {
        UNSPECIFIC : 'Unspecific.',
    }

    def __init__(self, error_code, error_subcode=0, data=None):
        """
        :param int error_code: The error code.
        :param int error_subcode: The error subcode.
        :param str data: The data.
        """
        self.error_code    = error_code
        self.error_subcode = error_subcode
        self.data          = data or ''
        super(SertError, self).__init__(str(self))

    def __str__(self):
        result = 'pySERT Error ('
        result += '%s, ' % self.KIND
        result += '%s' % self.str_subcode.get(self.error_subcode, 'Unknown subcode.')
        if self.data:
            result += ', Data %s' % self.data
        result += ')'
        return result


class UsageError(SertError):

    """
    Error with code 1, bad usage (arguments, configuration, model kind).
    """

    KIND = 'USAGE'

    UNSPECIFIC     = 0
    BAD_CONFIG     = 1
    BAD_ARGUMENT   = 2
    MODEL_MISMATCH = 3
    SHAPE_MISMATCH = 4

    str_subcode = {
        UNSPECIFIC     : 'Unspecific.',
        BAD_CONFIG     : 'Bad Configuration.',
        BAD_ARGUMENT   : 'Bad Argument.',
        MODEL_MISMATCH : 'Model Mismatch.',
        SHAPE_MISMATCH : 'Shape Mismatch.',
    }

    def __init__(self, error_subcode=0, data=None):
        super(UsageError, self).__init__(1, error_subcode, data)


class DataError(SertError):

    """
    Error with code 2, the input data (CSV, windows, checkpoint) is not usable.
    """

    KIND = 'DATA'

    UNSPECIFIC          = 0
    MALFORMED_HEADER    = 1
    BAD_TIMESTAMP       = 2
    UNKNOWN_VARIABLE    = 3
    UNKNOWN_LOCATION    = 4
    EMPTY_DATASET       = 5
    BAD_CHECKPOINT      = 6
    VOCABULARY_MISMATCH = 7

    str_subcode = {
        UNSPECIFIC          : 'Unspecific.',
        MALFORMED_HEADER    : 'Malformed Header.',
        BAD_TIMESTAMP       : 'Bad Timestamp.',
        UNKNOWN_VARIABLE    : 'Unknown Variable.',
        UNKNOWN_LOCATION    : 'Unknown Location.',
        EMPTY_DATASET       : 'Empty Dataset.',
        BAD_CHECKPOINT      : 'Bad Checkpoint.',
        VOCABULARY_MISMATCH : 'Vocabulary Mismatch.',
    }

    def __init__(self, error_subcode=0, data=None):
        super(DataError, self).__init__(2, error_subcode, data)


class NumericalError(SertError):

    """
    Error with code 3, a numerical failure (non finite loss, bad shapes
    reaching the tensor core).
    """

    KIND = 'NUMERICAL'

    UNSPECIFIC      = 0
    NON_FINITE_LOSS = 1
    NOT_SCALAR      = 2
    SHAPE_MISMATCH  = 3

    str_subcode = {
        UNSPECIFIC      : 'Unspecific.',
        NON_FINITE_LOSS : 'Non Finite Loss.',
        NOT_SCALAR      : 'Not A Scalar.',
        SHAPE_MISMATCH  : 'Shape Mismatch.',
    }

    def __init__(self, error_subcode=0, data=None):
        super(NumericalError, self).__init__(3, error_subcode, data)
