"""Dataset files, region partitioning and the CSV formats.

All files are UTF-8 CSV with LF line endings and a header row.  Floats
are written with 17 significant digits so that save -> load round-trips
bitwise.

  locations:   ``x,y`` (Euclidean) or ``lon,lat`` (great-circle)
  values:      ``value`` (one measurement per line, aligned by index)
  dataset:     ``x,y,value`` or ``lon,lat,value``
  trace:       ``iter,theta1,theta2,theta3,loglik,seconds``
  prediction:  ``x,y,predicted[,truth]``

Missing values in datasets are an empty field or ``NA``; the Drop policy
removes those rows, Strict raises.
"""

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .geometry import Euclidean, LocationSet, Metric

logger = logging.getLogger(__name__)

_MISSING = ("", "NA")


class DataError(Exception):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class Dataset:
    locations: LocationSet
    values: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        if self.values.shape != (len(self.locations),):
            raise DataError(
                f"values shape {self.values.shape} does not match "
                f"{len(self.locations)} locations"
            )
        if not np.isfinite(self.values).all():
            raise DataError("dataset values must be finite")


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _location_header(metric: Metric) -> list[str]:
    return ["x", "y"] if isinstance(metric, Euclidean) else ["lon", "lat"]


def _parse_float(text: str, line_no: int, path) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataError(f"{path}:{line_no}: malformed number {text!r}") from None


def _check_header(got: list[str], want: list[str], path) -> None:
    if [h.strip().lower() for h in got] != want:
        raise DataError(f"{path}: expected header {','.join(want)!r}, "
                        f"got {','.join(got)!r}")


def _reject_duplicates(coords: np.ndarray, lines: list[int], path) -> None:
    _, first, counts = np.unique(coords, axis=0, return_index=True,
                                 return_counts=True)
    dup = np.nonzero(counts > 1)[0]
    if dup.size:
        ref = coords[first[dup[0]]]
        where = [lines[i] for i in range(len(lines))
                 if coords[i, 0] == ref[0] and coords[i, 1] == ref[1]]
        raise DataError(f"{path}: duplicate location {tuple(ref)} at lines "
                        f"{where[0]} and {where[1]}")


def load_locations(path, metric: Metric = Euclidean()) -> LocationSet:
    want = _location_header(metric)
    rows, lines = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        _check_header(header, want, path)
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataError(f"{path}:{line_no}: expected 2 fields, got {len(row)}")
            rows.append([_parse_float(row[0], line_no, path),
                         _parse_float(row[1], line_no, path)])
            lines.append(line_no)
    if not rows:
        raise DataError(f"{path}: no locations")
    coords = np.array(rows)
    _reject_duplicates(coords, lines, path)
    try:
        return LocationSet(coords, metric)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def save_locations(path, locs: LocationSet) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(",".join(_location_header(locs.metric)) + "\n")
        for x, y in locs.coords:
            fh.write(f"{_fmt(x)},{_fmt(y)}\n")


def load_values(path) -> np.ndarray:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        _check_header(header, ["value"], path)
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            out.append(_parse_float(row[0], line_no, path))
    if not out:
        raise DataError(f"{path}: no values")
    return np.array(out)


def save_values(path, values: np.ndarray) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("value\n")
        for v in np.asarray(values, dtype=float):
            fh.write(_fmt(v) + "\n")


def load_dataset(path, metric: Metric = Euclidean(),
                 missing_policy: str = "drop") -> Dataset:
    """Read an ``x,y,value`` dataset; header row required.

    Rows with a missing value (empty field or ``NA``) are dropped under
    the default policy and raise under ``strict``.
    """
    if missing_policy not in ("drop", "strict"):
        raise ValueError(f"unknown missing policy {missing_policy!r}")
    want = _location_header(metric) + ["value"]
    coords, values, lines = [], [], []
    dropped = 0
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        _check_header(header, want, path)
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DataError(f"{path}:{line_no}: expected 3 fields, got {len(row)}")
            if row[2].strip() in _MISSING:
                if missing_policy == "strict":
                    raise DataError(f"{path}:{line_no}: missing value")
                dropped += 1
                continue
            coords.append([_parse_float(row[0], line_no, path),
                           _parse_float(row[1], line_no, path)])
            values.append(_parse_float(row[2], line_no, path))
            lines.append(line_no)
    if not coords:
        raise DataError(f"{path}: no usable rows")
    if dropped:
        logger.info("%s: dropped %d rows with missing values", path, dropped)
    coords = np.array(coords)
    _reject_duplicates(coords, lines, path)
    try:
        locs = LocationSet(coords, metric)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    return Dataset(locs, np.array(values), provenance=str(path))


def save_dataset(path, ds: Dataset) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(",".join(_location_header(ds.locations.metric) + ["value"]) + "\n")
        for (x, y), v in zip(ds.locations.coords, ds.values):
            fh.write(f"{_fmt(x)},{_fmt(y)},{_fmt(v)}\n")


def partition_regions(ds: Dataset, rows: int, cols: int) -> list[Dataset]:
    """Split the bounding box into a rows x cols grid of equal cells.

    Non-empty cells become region datasets named R0, R1, ... in
    row-major order (row 0 at the minimum y, column 0 at the minimum x);
    empty cells are skipped with a log note.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"need rows, cols >= 1, got {rows}x{cols}")
    c = ds.locations.coords
    xmin, ymin = c.min(axis=0)
    xmax, ymax = c.max(axis=0)
    xw = (xmax - xmin) or 1.0
    yw = (ymax - ymin) or 1.0
    col_idx = np.minimum((cols * (c[:, 0] - xmin) / xw).astype(int), cols - 1)
    row_idx = np.minimum((rows * (c[:, 1] - ymin) / yw).astype(int), rows - 1)
    cell = row_idx * cols + col_idx
    out = []
    for k in range(rows * cols):
        mask = cell == k
        if not mask.any():
            logger.info("region cell %d of %dx%d grid is empty; skipped",
                        k, rows, cols)
            continue
        locs = LocationSet(c[mask], ds.locations.metric)
        name = f"R{len(out)}"
        out.append(Dataset(locs, ds.values[mask],
                           provenance=f"{ds.provenance}/{name}" if ds.provenance else name))
    return out


def save_trace(path, trace) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("iter,theta1,theta2,theta3,loglik,seconds\n")
        for t in trace:
            t1, t2, t3 = t.theta
            fh.write(f"{t.index},{_fmt(t1)},{_fmt(t2)},{_fmt(t3)},"
                     f"{_fmt(t.loglik)},{_fmt(t.seconds)}\n")


def save_predictions(path, unknown: LocationSet, pred: np.ndarray,
                     truth: np.ndarray | None = None) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        cols = ["x", "y", "predicted"] + (["truth"] if truth is not None else [])
        fh.write(",".join(cols) + "\n")
        for i, ((x, y), v) in enumerate(zip(unknown.coords, pred)):
            row = [_fmt(x), _fmt(y), _fmt(v)]
            if truth is not None:
                row.append(_fmt(truth[i]))
            fh.write(",".join(row) + "\n")


def load_predictions(path) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Read a prediction CSV back: (coords, predicted, truth or None)."""
    coords, pred, truth = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        head = [h.strip().lower() for h in header]
        if head not in (["x", "y", "predicted"], ["x", "y", "predicted", "truth"]):
            raise DataError(f"{path}: unexpected prediction header {header!r}")
        has_truth = len(head) == 4
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            coords.append([_parse_float(row[0], line_no, path),
                           _parse_float(row[1], line_no, path)])
            pred.append(_parse_float(row[2], line_no, path))
            if has_truth:
                truth.append(_parse_float(row[3], line_no, path))
    return (np.array(coords), np.array(pred),
            np.array(truth) if truth else None)
