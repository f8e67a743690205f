from pysert.sert.data.table import CSV_SCHEMA, LongTable, ingest_csv
from pysert.sert.data.simulate import (SimulationSpec, matrix_to_table, simulate_covariance,
                                       simulate_fixture, simulate_series, simulate_values, sparsify)
from pysert.sert.data.window import (SampleWindow, Split, WindowSet, build_windows, split_steps,
                                     split_timeline, training_statistics)
