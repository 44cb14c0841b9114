"""Benchmark harness: timed single likelihood iterations per configuration.

The optimizer loop is iterative, so one likelihood evaluation (assembly,
factorization, log-determinant and solve) is timed as a proxy for the
whole procedure; the median of ``repeats`` runs is recorded together
with the matrix footprint.  Rows that fail (out of memory, non-SPD)
carry the error message and the run continues.
"""

import csv
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from . import linalg, stats, tilestore
from .dataio import DataError
from .kernels import MaternParams
from .linalg import NotPositiveDefiniteError
from .stats import LOG_2PI, mode_label, parse_mode
from .tilestore import TileGrid, assemble_covariance, footprint


@dataclass(frozen=True)
class BenchmarkConfig:
    ns: tuple
    modes: tuple  # of (mode, eps)
    nbs: tuple = (None,)  # None = per-mode default
    theta: MaternParams = MaternParams(1.0, 0.03, 0.5)
    seed: int = 42
    repeats: int = 3


def parse_config(path) -> BenchmarkConfig:
    """Parse a key=value benchmark config file.

    Recognized keys: n, modes, nb (comma lists), theta (T1:T2:T3),
    nugget, seed, repeats.  '#' starts a comment.
    """
    raw = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{path}:{line_no}: expected key=value, got {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            raw[key.lower()] = val
    try:
        ns = tuple(int(s) for s in raw["n"].split(","))
        modes = tuple(parse_mode(s) for s in raw["modes"].split(","))
    except KeyError as exc:
        raise DataError(f"{path}: missing required key {exc}") from None
    nbs = tuple(int(s) for s in raw["nb"].split(",")) if "nb" in raw else (None,)
    t1, t2, t3 = (float(s) for s in raw.get("theta", "1:0.03:0.5").split(":"))
    theta = MaternParams(t1, t2, t3, float(raw.get("nugget", 0.0)))
    return BenchmarkConfig(ns, modes, nbs, theta,
                           int(raw.get("seed", 42)), int(raw.get("repeats", 3)))


@dataclass(frozen=True)
class ReportRow:
    mode: str
    eps: float | None
    n: int
    nb: int
    iteration_seconds: float | None = None
    peak_stored_reals: int | None = None
    compression_ratio: float | None = None
    loglik: float | None = None
    theta_hat: tuple | None = None
    mse: float | None = None
    error: str | None = None


@dataclass
class ExperimentReport:
    rows: list = field(default_factory=list)

    _COLUMNS = ("mode", "eps", "n", "nb", "iteration_seconds",
                "peak_stored_reals", "compression_ratio", "loglik",
                "theta1", "theta2", "theta3", "mse", "error")

    def save_csv(self, path) -> None:
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self._COLUMNS)
            for r in self.rows:
                th = r.theta_hat or (None, None, None)
                writer.writerow([
                    r.mode, _cell(r.eps), r.n, r.nb,
                    _cell(r.iteration_seconds), _cell(r.peak_stored_reals),
                    _cell(r.compression_ratio), _cell(r.loglik),
                    _cell(th[0]), _cell(th[1]), _cell(th[2]),
                    _cell(r.mse), r.error or "",
                ])

    @classmethod
    def load_csv(cls, path) -> "ExperimentReport":
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != cls._COLUMNS:
                raise DataError(f"{path}: unexpected report header {header!r}")
            for row in reader:
                (mode, eps, n, nb, secs, reals, ratio, ll,
                 t1, t2, t3, mse_v, err) = row
                theta = (None if t1 == "" else
                         (float(t1), float(t2), float(t3)))
                rows.append(ReportRow(
                    mode, _parse(eps), int(n), int(nb), _parse(secs),
                    _parse(reals, int), _parse(ratio), _parse(ll),
                    theta, _parse(mse_v), err or None,
                ))
        return cls(rows)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    return format(float(v), ".17g")


def _parse(s: str, cast=float):
    return None if s == "" else cast(float(s))


def one_iteration(locs, z, theta: MaternParams, mode: str,
                  eps: float | None, nb: int):
    """One likelihood evaluation; returns (seconds, loglik, footprint)."""
    n = len(locs)
    t0 = time.perf_counter()
    grid = TileGrid(n, min(nb, n))
    cov = assemble_covariance(locs, theta, grid, mode, eps)
    f = linalg.cholesky(cov)
    quad = linalg.quadratic_form(f, z)
    ll = -0.5 * (n * LOG_2PI + f.log_det + quad)
    dt = time.perf_counter() - t0
    return dt, ll, footprint(cov)


def _warmup() -> None:
    # trigger jit compilation outside the timed region
    theta = MaternParams(1.0, 0.1, 0.5)
    locs = stats.generate_locations(64, 0)
    z = stats.sample_measurements(locs, theta, 1)
    one_iteration(locs, z, theta, "dense", None, 32)
    one_iteration(locs, z, theta, "tlr", 1e-9, 32)


_ROW_ERRORS = (NotPositiveDefiniteError, MemoryError, np.linalg.LinAlgError)


def run_benchmark(cfg: BenchmarkConfig) -> ExperimentReport:
    report = ExperimentReport()
    _warmup()
    for n in cfg.ns:
        locs = stats.generate_locations(n, cfg.seed)
        try:
            z = stats.sample_measurements(locs, cfg.theta, cfg.seed + 1)
            data_error = None
        except _ROW_ERRORS as exc:
            z, data_error = None, f"data generation failed: {exc}"
        for mode, eps in cfg.modes:
            for nb_opt in cfg.nbs:
                nb = nb_opt if nb_opt is not None else (
                    tilestore.DEFAULT_NB_DENSE if mode == "dense"
                    else tilestore.DEFAULT_NB_TLR)
                label = mode_label(mode, eps)
                if data_error is not None:
                    report.rows.append(ReportRow(label, eps, n, nb,
                                                 error=data_error))
                    continue
                try:
                    times, ll, foot = [], None, None
                    for _ in range(cfg.repeats):
                        dt, ll, foot = one_iteration(locs, z, cfg.theta, mode, eps, nb)
                        times.append(dt)
                    report.rows.append(ReportRow(
                        label, eps, n, nb,
                        statistics.median(times), foot.stored_reals,
                        foot.compression_ratio, ll,
                    ))
                except _ROW_ERRORS as exc:
                    report.rows.append(ReportRow(label, eps, n, nb,
                                                 error=str(exc)))
    return report
