"""Gaussian log-likelihood, synthetic data generation and MLE fitting.

The field has zero mean, so the log-likelihood of a measurement vector z
observed at n locations is

    l(theta) = -(n/2) log(2 pi) - (1/2) log|Sigma(theta)|
               - (1/2) z^T Sigma(theta)^{-1} z

evaluated through one tile Cholesky factorization per call.  Estimation
maximizes l over (theta1, theta2, theta3) inside a bounding box with a
bounded Nelder-Mead simplex search; the nugget is held fixed.
"""

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import linalg, tilestore
from .geometry import LocationSet, generate_locations
from .kernels import MaternParams
from .linalg import NotPositiveDefiniteError
from .tilestore import TileGrid, assemble_covariance

DEFAULT_BOUNDS = ((0.01, 5.0), (0.001, 3.0), (0.1, 3.0))

LOG_2PI = math.log(2.0 * math.pi)


class EstimationError(Exception):
    """Every objective evaluation failed (e.g. persistently non-SPD)."""

    def __init__(self, last_theta):
        self.last_theta = tuple(last_theta)
        super().__init__(
            f"no likelihood evaluation succeeded; last theta tried {self.last_theta}"
        )


@dataclass(frozen=True)
class LikelihoodConfig:
    """Controls for likelihood evaluation and the simplex search."""

    mode: str = "dense"
    accuracy: float | None = None
    nb: int | None = None
    nugget: float = 0.0
    bounds: tuple = DEFAULT_BOUNDS
    theta0: tuple | None = None
    max_iterations: int = 100
    tol: float = 1e-9
    profile: object = "auto"

    def __post_init__(self):
        if self.mode not in ("dense", "tlr"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "tlr" and self.accuracy is None:
            raise ValueError("tlr mode requires an accuracy threshold")
        for lo, hi in self.bounds:
            if not (0.0 < lo < hi):
                raise ValueError(f"invalid bounds ({lo}, {hi})")

    def tile_size(self) -> int:
        if self.nb is not None:
            return self.nb
        return tilestore.DEFAULT_NB_DENSE if self.mode == "dense" else tilestore.DEFAULT_NB_TLR

    def label(self) -> str:
        return mode_label(self.mode, self.accuracy)


@dataclass(frozen=True)
class TraceEntry:
    index: int
    theta: tuple
    loglik: float
    seconds: float


@dataclass
class EstimationResult:
    theta_hat: MaternParams
    loglik: float
    iterations: int
    converged: bool
    trace: list[TraceEntry] = field(repr=False)
    mode: str = "dense"
    accuracy: float | None = None

    @property
    def total_seconds(self) -> float:
        return sum(t.seconds for t in self.trace)


def _factorize(locs, z, p, cfg):
    grid = TileGrid(len(locs), min(cfg.tile_size(), len(locs)))
    cov = assemble_covariance(locs, p, grid, cfg.mode, cfg.accuracy,
                              profile=cfg.profile)
    return linalg.cholesky(cov)


def log_likelihood(locs: LocationSet, z: np.ndarray, p: MaternParams,
                   cfg: LikelihoodConfig = LikelihoodConfig()) -> float:
    """Gaussian log-likelihood of z under Sigma(p); one factorization."""
    z = np.asarray(z, dtype=float)
    n = len(locs)
    if z.shape != (n,):
        raise ValueError(f"measurement vector shape {z.shape} does not match n={n}")
    f = _factorize(locs, z, p, cfg)
    quad = linalg.quadratic_form(f, z)
    return -0.5 * (n * LOG_2PI + f.log_det + quad)


def sample_measurements(locs: LocationSet, p_true: MaternParams, seed: int) -> np.ndarray:
    """Draw one zero-mean field realization: z = L w, w standard normal.

    The factorization is always the dense one so that every mode under
    study consumes identical data.
    """
    n = len(locs)
    grid = TileGrid(n, min(tilestore.DEFAULT_NB_DENSE, n))
    cov = assemble_covariance(locs, p_true, grid, "dense")
    f = linalg.dense_cholesky(cov)
    w = np.random.default_rng(seed).standard_normal(n)
    out = np.zeros(n)
    for i in range(grid.t):
        r0, r1 = grid.bounds(i)
        out[r0:r1] = f.diag[i] @ w[r0:r1]
        for j in range(i):
            c0, c1 = grid.bounds(j)
            out[r0:r1] += f.lower[(i, j)] @ w[c0:c1]
    return out


def empirical_theta0(z: np.ndarray, bounds=DEFAULT_BOUNDS) -> tuple:
    """Variance-matched starting point: empirical variance for theta1,
    log-midpoints of the bounds for range and smoothness."""
    (l1, u1), (l2, u2), (l3, u3) = bounds
    v = float(np.clip(np.var(z), l1 * 1.0001, u1 * 0.9999))
    return (v, math.sqrt(l2 * u2), math.sqrt(l3 * u3))


def _default_theta0(bounds) -> tuple:
    return tuple(math.sqrt(lo * hi) for lo, hi in bounds)


def _initial_simplex(x0: np.ndarray, bounds) -> list[np.ndarray]:
    verts = [x0.copy()]
    for d in range(x0.size):
        lo, hi = bounds[d]
        step = 0.25 * x0[d]
        v = x0.copy()
        if v[d] + step > hi:
            step = -step
        v[d] = min(max(v[d] + step, lo), hi)
        verts.append(v)
    return verts


def _rel_spread(fbest: float, fworst: float) -> float:
    if not (math.isfinite(fbest) and math.isfinite(fworst)):
        return math.inf
    return 2.0 * abs(fworst - fbest) / (abs(fworst) + abs(fbest) + 1e-300)


def mle_fit(locs: LocationSet, z: np.ndarray, cfg: LikelihoodConfig,
            objective=None) -> EstimationResult:
    """Maximize the log-likelihood over theta with bounded Nelder-Mead.

    ``objective(theta) -> loglik`` may be injected for testing; by
    default it evaluates :func:`log_likelihood` with cfg's mode.  A
    non-SPD evaluation scores -inf instead of aborting the search.
    """
    bounds = cfg.bounds
    if objective is None:
        def objective(theta):
            p = MaternParams(theta[0], theta[1], theta[2], cfg.nugget)
            try:
                return log_likelihood(locs, z, p, cfg)
            except NotPositiveDefiniteError:
                return -math.inf

    trace: list[TraceEntry] = []

    def neg(theta: np.ndarray) -> float:
        t0 = time.perf_counter()
        ll = objective(theta)
        dt = time.perf_counter() - t0
        trace.append(TraceEntry(len(trace), tuple(theta), ll, dt))
        return -ll if math.isfinite(ll) else math.inf

    def clamp(x: np.ndarray) -> np.ndarray:
        return np.array([min(max(x[d], bounds[d][0]), bounds[d][1])
                         for d in range(x.size)])

    x0 = np.asarray(cfg.theta0 if cfg.theta0 is not None else _default_theta0(bounds),
                    dtype=float)
    x0 = clamp(x0)
    verts = _initial_simplex(x0, bounds)
    fvals = [neg(v) for v in verts]

    iterations = 0
    converged = False
    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    while iterations < cfg.max_iterations:
        order = np.argsort(fvals, kind="stable")
        verts = [verts[k] for k in order]
        fvals = [fvals[k] for k in order]
        if _rel_spread(fvals[0], fvals[-1]) <= cfg.tol:
            converged = True
            break
        iterations += 1
        centroid = np.mean(verts[:-1], axis=0)
        xr = clamp(centroid + alpha * (centroid - verts[-1]))
        fr = neg(xr)
        if fvals[0] <= fr < fvals[-2]:
            verts[-1], fvals[-1] = xr, fr
        elif fr < fvals[0]:
            xe = clamp(centroid + gamma * (xr - centroid))
            fe = neg(xe)
            if fe < fr:
                verts[-1], fvals[-1] = xe, fe
            else:
                verts[-1], fvals[-1] = xr, fr
        else:
            if fr < fvals[-1]:
                xc = clamp(centroid + rho * (xr - centroid))
            else:
                xc = clamp(centroid + rho * (verts[-1] - centroid))
            fc = neg(xc)
            if fc < min(fr, fvals[-1]):
                verts[-1], fvals[-1] = xc, fc
            else:
                for k in range(1, len(verts)):
                    verts[k] = clamp(verts[0] + sigma * (verts[k] - verts[0]))
                    fvals[k] = neg(verts[k])

    best = int(np.argmin(fvals))
    if not math.isfinite(fvals[best]):
        raise EstimationError(tuple(verts[best]))
    theta = verts[best]
    return EstimationResult(
        theta_hat=MaternParams(theta[0], theta[1], theta[2], cfg.nugget),
        loglik=-fvals[best],
        iterations=iterations,
        converged=converged,
        trace=trace,
        mode=cfg.mode,
        accuracy=cfg.accuracy,
    )


def parse_mode(spec: str) -> tuple[str, float | None]:
    """Parse a mode label: "dense" or "tlr:EPS"."""
    spec = spec.strip().lower()
    if spec == "dense":
        return "dense", None
    if spec.startswith("tlr:"):
        return "tlr", float(spec.split(":", 1)[1])
    if spec == "tlr":
        raise ValueError("tlr mode spec needs an accuracy, e.g. tlr:1e-9")
    raise ValueError(f"unknown mode spec {spec!r}")


def mode_label(mode: str, eps: float | None) -> str:
    """Canonical mode label, e.g. "dense" or "tlr:1e-5"."""
    if mode == "dense":
        return "dense"
    return "tlr:" + f"{eps:g}".replace("e-0", "e-").replace("e+0", "e+")


@dataclass
class McReplicate:
    mode_label: str
    replicate: int
    result: EstimationResult | None
    error: str | None = None


@dataclass
class McSummary:
    mode_label: str
    medians: tuple
    q1: tuple
    q3: tuple
    failures: int


def mc_summaries(replicates: list[McReplicate]) -> list[McSummary]:
    out = []
    for label in dict.fromkeys(r.mode_label for r in replicates):
        thetas = np.array([
            r.result.theta_hat.as_tuple()[:3]
            for r in replicates if r.mode_label == label and r.result is not None
        ])
        failures = sum(1 for r in replicates
                       if r.mode_label == label and r.result is None)
        if thetas.size:
            out.append(McSummary(
                label,
                tuple(np.median(thetas, axis=0)),
                tuple(np.percentile(thetas, 25, axis=0)),
                tuple(np.percentile(thetas, 75, axis=0)),
                failures,
            ))
        else:
            out.append(McSummary(label, (), (), (), failures))
    return out


def mc_experiment(n: int, theta_true: MaternParams, replicates: int,
                  modes, seed: int,
                  cfg: LikelihoodConfig = LikelihoodConfig(),
                  empirical_start: bool = True) -> list[McReplicate]:
    """Monte Carlo recovery study on one location set.

    Generates a single location set from ``seed`` and ``replicates``
    measurement vectors (replicate i uses seed ``seed + 1 + i``), then
    fits every requested mode to every vector.  Per-replicate failures
    are recorded, not fatal.
    """
    locs = generate_locations(n, seed)
    zs = [sample_measurements(locs, theta_true, seed + 1 + i)
          for i in range(replicates)]
    out: list[McReplicate] = []
    for spec in modes:
        mode, acc = parse_mode(spec) if isinstance(spec, str) else spec
        label = mode_label(mode, acc)
        for i, z in enumerate(zs):
            run_cfg = replace(cfg, mode=mode, accuracy=acc)
            if empirical_start and run_cfg.theta0 is None:
                run_cfg = replace(run_cfg, theta0=empirical_theta0(z, cfg.bounds))
            try:
                res = mle_fit(locs, z, run_cfg)
                out.append(McReplicate(label, i, res))
            except (EstimationError, NotPositiveDefiniteError) as exc:
                out.append(McReplicate(label, i, None, str(exc)))
    return out
