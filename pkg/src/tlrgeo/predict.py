"""Conditional-mean (kriging) prediction and MSE scoring.

With zero-mean jointly Gaussian (Z1, Z2), the best predictor of the
unknown block given observations is Z1 = S12 S22^{-1} Z2.  S22 is
assembled and factorized once in the configured mode; the cross
covariance S12 (m x n) is small and always dense.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels, linalg, tilestore
from .geometry import LocationSet, cross_distance_range
from .kernels import MaternParams
from .tilestore import TileGrid, assemble_covariance


@dataclass(frozen=True)
class PredictionProblem:
    known: LocationSet
    z: np.ndarray
    unknown: LocationSet
    theta: MaternParams
    mode: str = "dense"
    accuracy: float | None = None
    nb: int | None = None

    def __post_init__(self):
        if type(self.known.metric) is not type(self.unknown.metric) \
                or self.known.metric != self.unknown.metric:
            raise ValueError("known and unknown sets use different metrics")
        z = np.asarray(self.z, dtype=float)
        if z.shape != (len(self.known),):
            raise ValueError(
                f"measurement shape {z.shape} does not match {len(self.known)} locations"
            )
        if self.mode not in ("dense", "tlr"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "tlr" and self.accuracy is None:
            raise ValueError("tlr mode requires an accuracy threshold")

    def tile_size(self) -> int:
        if self.nb is not None:
            return self.nb
        return (tilestore.DEFAULT_NB_DENSE if self.mode == "dense"
                else tilestore.DEFAULT_NB_TLR)


def _shared_profile(p: PredictionProblem):
    """One kernel profile covering both S22 and S12 distance ranges,
    so coincident point pairs get bitwise-identical covariance entries."""
    n = len(p.known)
    if n < tilestore.PROFILE_MIN_N:
        return None
    lo, hi = p.known.distance_range()
    clo, chi = cross_distance_range(p.known, p.unknown)
    lo, hi = min(lo, clo), max(hi, chi)
    if not (0.0 < lo < math.inf):
        return None
    return kernels.build_profile(p.theta, lo, hi)


def predict(p: PredictionProblem, with_variance: bool = False):
    """Conditional mean of the unknown measurements; optionally also the
    conditional covariance (dense mode only)."""
    if with_variance and p.mode != "dense":
        raise ValueError("conditional variance is available in dense mode only")
    n = len(p.known)
    prof = _shared_profile(p)
    grid = TileGrid(n, min(p.tile_size(), n))
    s22 = assemble_covariance(p.known, p.theta, grid, p.mode, p.accuracy,
                              profile=prof if prof is not None else "never")
    f = linalg.cholesky(s22)
    w = linalg.solve_cholesky(f, np.asarray(p.z, dtype=float))
    s12 = kernels.matern_block(p.unknown.kernel_view(), p.known.kernel_view(),
                               p.theta, prof)
    pred = s12 @ w
    if not with_variance:
        return pred
    s11 = kernels.matern_block(p.unknown.kernel_view(), p.unknown.kernel_view(),
                               p.theta, prof)
    if p.theta.nugget:
        s11[np.diag_indices_from(s11)] += p.theta.nugget
    v = linalg.solve_cholesky(f, s12.T)
    return pred, s11 - s12 @ v


def mse(truth: np.ndarray, pred: np.ndarray) -> float:
    """Mean squared error (1/m) sum (Y_i - Yhat_i)^2."""
    truth = np.asarray(truth, dtype=float)
    pred = np.asarray(pred, dtype=float)
    if truth.shape != pred.shape or truth.ndim != 1:
        raise ValueError(f"length mismatch: {truth.shape} vs {pred.shape}")
    d = truth - pred
    return float(d @ d) / truth.size


def holdout_experiment(locs: LocationSet, z: np.ndarray, theta: MaternParams,
                       m: int, modes, seed: int,
                       nb: int | None = None) -> dict[str, float]:
    """Hold out m random locations, predict them from the rest, score MSE.

    The held-out indices are sampled without replacement from a seeded
    generator, so the experiment is deterministic per seed.
    """
    from .stats import mode_label, parse_mode

    n = len(locs)
    z = np.asarray(z, dtype=float)
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    unknown_idx = np.sort(rng.choice(n, size=m, replace=False))
    mask = np.zeros(n, dtype=bool)
    mask[unknown_idx] = True
    known = LocationSet(locs.coords[~mask], locs.metric)
    unknown = LocationSet(locs.coords[mask], locs.metric)
    out = {}
    for spec in modes:
        mode, acc = parse_mode(spec) if isinstance(spec, str) else spec
        label = mode_label(mode, acc)
        problem = PredictionProblem(known, z[~mask], unknown, theta,
                                    mode, acc, nb)
        out[label] = mse(z[mask], predict(problem))
    return out
