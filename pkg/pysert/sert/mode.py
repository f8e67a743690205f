class LocationMode(object):

    # location folded into the variable name, "{location}.{variable}"
    A = 'A'
    # bare variable names, separate location embedding
    B = 'B'

    ALL = (A, B)


class ModelKind(object):

    SERT   = 'sert'
    SSTANN = 'sstann'
    NAIVE  = 'naive'

    TRAINABLE = (SERT, SSTANN)
