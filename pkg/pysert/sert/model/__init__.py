from pysert.sert.model.config import ModelConfig
from pysert.sert.model.window import PaddedWindow, TripletBatch, embed_batch, pad_windows
from pysert.sert.model.sert import attention_block, init_sert, sert_forward
from pysert.sert.model.sstann import init_sstann, sstann_bias, sstann_forward
from pysert.sert.model.forecaster import Forecaster
