"""Max-statistic permutation testing with two engines.

`run_naive` evaluates every voxel statistic for every permutation and is the
accuracy reference.  `run_rapid` learns a low-rank-plus-residual model of the
permutation statistic matrix from a few fully computed columns, then
synthesizes the remaining columns from a small sample of their entries.
"""

__version__ = "0.1.0"

from .errors import (
    DataFormatError,
    DegenerateVoxelError,
    IllConditionedBasisError,
    NumericalError,
    UsageError,
)
from .lrmc import (
    Basis,
    ObservedColumn,
    complete_column,
    fit_coefficients,
    init_basis,
    min_sample_rate,
    spectrum,
    track_update,
    train_basis,
)
from .matio import (
    load_matrix,
    read_array,
    read_matrix,
    read_matrix_csv,
    write_array,
    write_matrix,
    write_matrix_csv,
)
from .metrics import (
    HistogramPair,
    RiskResult,
    ThresholdRow,
    build_histogram_pair,
    kl_divergence,
    resampling_risk,
    threshold_table,
)
from .model import (
    DataMatrix,
    MaxNull,
    PermutationPlan,
    RunConfig,
    permute_columns,
    relabel,
)
from .naive import StatMatrix, run_naive
from .rapid import SubspaceModel, recover, run_rapid, train
from .simgen import SimSpec, gen_sim1, gen_sim2, grid_specs
from .teststat import (
    StatColumn,
    column_max,
    pvalue,
    reject_set,
    stat_map,
    threshold_at,
    tstat_full,
    tstat_subset,
)

__all__ = [
    "__version__",
    "Basis",
    "DataFormatError",
    "DataMatrix",
    "DegenerateVoxelError",
    "HistogramPair",
    "IllConditionedBasisError",
    "MaxNull",
    "NumericalError",
    "ObservedColumn",
    "PermutationPlan",
    "RiskResult",
    "RunConfig",
    "SimSpec",
    "StatColumn",
    "StatMatrix",
    "SubspaceModel",
    "ThresholdRow",
    "UsageError",
    "build_histogram_pair",
    "column_max",
    "complete_column",
    "fit_coefficients",
    "gen_sim1",
    "gen_sim2",
    "grid_specs",
    "init_basis",
    "kl_divergence",
    "load_matrix",
    "min_sample_rate",
    "permute_columns",
    "pvalue",
    "read_array",
    "read_matrix",
    "read_matrix_csv",
    "recover",
    "reject_set",
    "relabel",
    "resampling_risk",
    "run_naive",
    "run_rapid",
    "spectrum",
    "stat_map",
    "threshold_at",
    "threshold_table",
    "track_update",
    "train",
    "train_basis",
    "tstat_full",
    "tstat_subset",
    "write_array",
    "write_matrix",
    "write_matrix_csv",
]
