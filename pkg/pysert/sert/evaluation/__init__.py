from pysert.sert.evaluation.baseline import filled_matrix, forward_fill, naive_forecast, series_means
from pysert.sert.evaluation.metrics import MetricsTable, rmse_per_variable
from pysert.sert.evaluation.importance import (CAUSAL_PREDICTORS, CAUSAL_TARGETS, CONTRIBUTION_COLUMNS,
                                              ImportanceReport, contribution_table, importance_index)
from pysert.sert.evaluation.sweep import (DEFAULT_LEVELS, DEFAULT_MODELS, SWEEP_DEFAULTS, run_level,
                                         sparsity_sweep, sweep_config)
