"""Recurrence matrices, separation checks, reconstruction from recurrences,
return-time statistics and recurrence-based invariants."""

from .applications import SurrogateSpec, sync_index, twin_surrogate
from .core import (
    CalibrationError,
    DegenerateInputError,
    FormatError,
    GenerationError,
    InputError,
    InsufficientDataError,
    Metric,
    RecurrenceError,
    RecurrenceMatrix,
    Trajectory,
    metric_distance,
)
from .recmat import (
    EpsilonCalibration,
    build_matrix,
    calibrate_epsilon,
    export_pgm,
    load_matrix,
    save_matrix,
)
from .reconstruct import ReconstructionResult, embed, proxy_distances, reconstruct, validate
from .rqa import correlation_sum, diagonal_histogram, estimate_k2, recurrence_rate
from .stats import (
    first_return_time,
    return_times,
    test_exponential,
    test_independence,
    test_poisson_counts,
)
from .systems import SystemSpec, delay_embed, generate, load_csv, save_csv
from .verify import SeparationReport, check_separation, collapse_twins

__version__ = "0.1.0"
