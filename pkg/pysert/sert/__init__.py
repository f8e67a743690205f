from pysert.sert.mode import LocationMode, ModelKind
from pysert.sert.error import *
from pysert.sert.config import Config, read_config, substream
from pysert.sert.encoding import NormalizationStats, Triplet, VariableVocabulary, canonicalize
from pysert.sert.model import Forecaster, ModelConfig
from pysert.sert.data import LongTable, SampleWindow, SimulationSpec, build_windows, ingest_csv
from pysert.sert.training import TrainConfig, fit, gradcheck, masked_mse
