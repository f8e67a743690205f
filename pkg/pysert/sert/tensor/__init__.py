from pysert.sert.tensor.tensor import *
from pysert.sert.tensor.parameter import ParameterStore
