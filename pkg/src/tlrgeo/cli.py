"""Command-line interface.

Exit codes: 0 on success, 2 on input errors, 3 on numerical failures.
"""

import argparse
import csv
import sys

import numpy as np

from . import bench, dataio, stats
from .predict import PredictionProblem, mse as mse_of, predict as predict_at
from .dataio import DataError
from .geometry import Euclidean, GreatCircle
from .kernels import MaternParams
from .linalg import NotPositiveDefiniteError
from .stats import EstimationError, LikelihoodConfig, mc_summaries


def _parse_theta(text: str, nugget: float = 0.0) -> MaternParams:
    parts = text.split(":")
    if len(parts) != 3:
        raise DataError(f"theta must be T1:T2:T3, got {text!r}")
    try:
        t1, t2, t3 = (float(p) for p in parts)
        return MaternParams(t1, t2, t3, nugget)
    except ValueError as exc:
        raise DataError(str(exc)) from None


def _parse_bounds(text: str):
    out = []
    for part in text.split(","):
        lo, _, hi = part.partition(":")
        try:
            out.append((float(lo), float(hi)))
        except ValueError:
            raise DataError(f"bad bounds component {part!r}") from None
    if len(out) != 3:
        raise DataError(f"bounds need 3 components, got {len(out)}")
    return tuple(out)


def _metric(args):
    if getattr(args, "metric", "euclidean") == "gcd":
        return GreatCircle(args.radius)
    return Euclidean()


def _sniff_metric(path, radius: float):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().lower()
    return GreatCircle(radius) if header.startswith("lon") else Euclidean()


def _cmd_generate(args) -> int:
    theta = _parse_theta(args.theta, args.nugget)
    locs = stats.generate_locations(args.n, args.seed)
    z = stats.sample_measurements(locs, theta, args.seed + 1)
    dataio.save_locations(args.out_locations, locs)
    dataio.save_values(args.out_values, z)
    print(f"wrote {args.n} locations to {args.out_locations} and values to "
          f"{args.out_values}")
    return 0


def _cmd_estimate(args) -> int:
    metric = _metric(args)
    locs = dataio.load_locations(args.locations, metric)
    z = dataio.load_values(args.values)
    if z.shape != (len(locs),):
        raise DataError(f"{args.values}: {z.size} values for {len(locs)} locations")
    cfg = LikelihoodConfig(
        mode=args.mode,
        accuracy=args.accuracy if args.mode == "tlr" else None,
        nb=args.tile_size,
        bounds=_parse_bounds(args.bounds) if args.bounds else stats.DEFAULT_BOUNDS,
        theta0=tuple(float(p) for p in args.theta0.split(":")) if args.theta0 else None,
        max_iterations=args.max_iters,
    )
    result = stats.mle_fit(locs, z, cfg)
    dataio.save_trace(args.out_trace, result.trace)
    t1, t2, t3 = result.theta_hat.as_tuple()[:3]
    print(f"theta_hat = {t1:.6g}:{t2:.6g}:{t3:.6g}")
    print(f"loglik = {result.loglik:.10g}")
    print(f"iterations = {result.iterations} "
          f"({'converged' if result.converged else 'max-iterations'})")
    print(f"trace written to {args.out_trace}")
    return 0


def _cmd_predict(args) -> int:
    metric = _sniff_metric(args.locations, args.radius)
    known = dataio.load_locations(args.locations, metric)
    z = dataio.load_values(args.values)
    if z.shape != (len(known),):
        raise DataError(f"{args.values}: {z.size} values for {len(known)} locations")
    unknown = dataio.load_locations(args.unknown, metric)
    theta = _parse_theta(args.theta)
    problem = PredictionProblem(
        known, z, unknown, theta, args.mode,
        args.accuracy if args.mode == "tlr" else None, args.tile_size)
    pred = predict_at(problem)
    dataio.save_predictions(args.out, unknown, pred)
    print(f"wrote {len(pred)} predictions to {args.out}")
    return 0


def _load_value_column(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().lower()
    if header.startswith("x,y,predicted") or header.startswith("lon,lat,predicted"):
        _, pred, _ = dataio.load_predictions(path)
        return pred
    return dataio.load_values(path)


def _cmd_mse(args) -> int:
    truth = _load_value_column(args.truth)
    pred = _load_value_column(args.pred)
    if truth.shape != pred.shape:
        raise DataError(f"length mismatch: {truth.size} truth vs {pred.size} predictions")
    print(f"{mse_of(truth, pred):.17g}")
    return 0


def _cmd_mc(args) -> int:
    theta = _parse_theta(args.theta)
    modes = [stats.parse_mode(s) for s in args.modes.split(",")]
    reps = stats.mc_experiment(args.n, theta, args.replicates, modes, args.seed)
    with open(args.out, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["mode", "replicate", "theta1", "theta2", "theta3",
                         "loglik", "iterations", "seconds", "error"])
        for r in reps:
            if r.result is None:
                writer.writerow([r.mode_label, r.replicate, "", "", "", "", "",
                                 "", r.error])
            else:
                t1, t2, t3 = r.result.theta_hat.as_tuple()[:3]
                writer.writerow([
                    r.mode_label, r.replicate,
                    format(t1, ".17g"), format(t2, ".17g"), format(t3, ".17g"),
                    format(r.result.loglik, ".17g"), r.result.iterations,
                    format(r.result.total_seconds, ".17g"), "",
                ])
    for s in mc_summaries(reps):
        if s.medians:
            print(f"{s.mode_label}: median theta = "
                  f"{s.medians[0]:.4g}:{s.medians[1]:.4g}:{s.medians[2]:.4g} "
                  f"({s.failures} failures)")
        else:
            print(f"{s.mode_label}: all {s.failures} replicates failed")
    print(f"per-replicate results written to {args.out}")
    return 0


def _cmd_benchmark(args) -> int:
    cfg = bench.parse_config(args.config)
    report = bench.run_benchmark(cfg)
    report.save_csv(args.out)
    for r in report.rows:
        if r.error:
            print(f"n={r.n} {r.mode} nb={r.nb}: ERROR {r.error}")
        else:
            print(f"n={r.n} {r.mode} nb={r.nb}: {r.iteration_seconds:.3f}s/iter "
                  f"ratio={r.compression_ratio:.2f}")
    print(f"report written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tlrgeo",
        description="Matern maximum likelihood estimation and kriging with "
                    "tile low-rank compressed covariance matrices.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate synthetic locations and measurements")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--theta", required=True, metavar="T1:T2:T3")
    p.add_argument("--nugget", type=float, default=0.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-locations", required=True)
    p.add_argument("--out-values", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("estimate", help="fit Matern parameters by maximum likelihood")
    p.add_argument("--locations", required=True)
    p.add_argument("--values", required=True)
    p.add_argument("--mode", choices=("dense", "tlr"), default="dense")
    p.add_argument("--accuracy", type=float, default=1e-9)
    p.add_argument("--tile-size", type=int, default=None)
    p.add_argument("--metric", choices=("euclidean", "gcd"), default="euclidean")
    p.add_argument("--radius", type=float, default=6371.0)
    p.add_argument("--bounds", default=None, metavar="L1:U1,L2:U2,L3:U3")
    p.add_argument("--theta0", default=None, metavar="T1:T2:T3")
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--out-trace", required=True)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("predict", help="predict measurements at unknown locations")
    p.add_argument("--locations", required=True)
    p.add_argument("--values", required=True)
    p.add_argument("--theta", required=True, metavar="T1:T2:T3")
    p.add_argument("--unknown", required=True)
    p.add_argument("--mode", choices=("dense", "tlr"), default="dense")
    p.add_argument("--accuracy", type=float, default=1e-9)
    p.add_argument("--tile-size", type=int, default=None)
    p.add_argument("--radius", type=float, default=6371.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("mse", help="mean squared error between two value files")
    p.add_argument("--truth", required=True)
    p.add_argument("--pred", required=True)
    p.set_defaults(func=_cmd_mse)

    p = sub.add_parser("mc", help="Monte Carlo parameter-recovery experiment")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--theta", required=True, metavar="T1:T2:T3")
    p.add_argument("--replicates", type=int, required=True)
    p.add_argument("--modes", required=True,
                   help="comma list, e.g. dense,tlr:1e-5,tlr:1e-9")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("benchmark", help="timed single-iteration benchmark sweep")
    p.add_argument("--config", required=True,
                   help="key=value file: n, modes, nb, theta, seed, repeats")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_benchmark)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DataError, FileNotFoundError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NotPositiveDefiniteError, EstimationError,
            np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
