"""Matern maximum likelihood estimation and kriging with tile low-rank
compressed covariance matrices."""

from ._backend import USING_NUMBA
from .geometry import (
    Euclidean,
    GreatCircle,
    Location,
    LocationSet,
    distance,
    generate_locations,
    pairwise_distance_block,
)
from .kernels import MaternParams, bessel_k, gamma_fn, matern
from .tilestore import (
    Footprint,
    LowRankTile,
    TileGrid,
    TLRMatrix,
    assemble_covariance,
    footprint,
)
from .compression import compress_tile, recompress
from .linalg import (
    CholeskyFactor,
    NotPositiveDefiniteError,
    dense_cholesky,
    potrf_tile,
    quadratic_form,
    solve_cholesky,
    tlr_cholesky,
)
from .stats import (
    EstimationError,
    EstimationResult,
    LikelihoodConfig,
    log_likelihood,
    mc_experiment,
    mle_fit,
    sample_measurements,
)
from .predict import PredictionProblem, holdout_experiment, mse, predict
from .dataio import DataError, Dataset, load_dataset, partition_regions

__version__ = "0.1.0"

__all__ = [
    "USING_NUMBA",
    "Euclidean", "GreatCircle", "Location", "LocationSet",
    "distance", "generate_locations", "pairwise_distance_block",
    "MaternParams", "bessel_k", "gamma_fn", "matern",
    "Footprint", "LowRankTile", "TileGrid", "TLRMatrix",
    "assemble_covariance", "footprint",
    "compress_tile", "recompress",
    "CholeskyFactor", "NotPositiveDefiniteError", "dense_cholesky",
    "potrf_tile", "quadratic_form", "solve_cholesky", "tlr_cholesky",
    "EstimationError", "EstimationResult", "LikelihoodConfig",
    "log_likelihood", "mc_experiment", "mle_fit", "sample_measurements",
    "PredictionProblem", "holdout_experiment", "mse", "predict",
    "DataError", "Dataset", "load_dataset", "partition_regions",
]
