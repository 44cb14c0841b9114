"""Spatial locations, distance metrics and location generation.

Coordinates are either unit-square (x, y) with the Euclidean metric or
(longitude, latitude) degrees with the great-circle (haversine) metric.
A `LocationSet` is immutable after construction; index i always refers
to the same point, which is what ties measurement vectors and covariance
rows together.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

EARTH_RADIUS_KM = 6371.0


@dataclass(frozen=True)
class Euclidean:
    pass


@dataclass(frozen=True)
class GreatCircle:
    radius: float = EARTH_RADIUS_KM

    def __post_init__(self):
        if not (self.radius > 0) or not math.isfinite(self.radius):
            raise ValueError(f"sphere radius must be positive, got {self.radius}")


Metric = Union[Euclidean, GreatCircle]


class Location(NamedTuple):
    x: float  # x coordinate, or longitude in degrees
    y: float  # y coordinate, or latitude in degrees


def _haversine(lon1, lat1, lon2, lat2, radius):
    """Great-circle distance; angles in degrees, vectorized."""
    p1 = np.radians(lat1)
    p2 = np.radians(lat2)
    sp = np.sin(0.5 * (p2 - p1))
    sl = np.sin(0.5 * np.radians(np.asarray(lon2) - np.asarray(lon1)))
    a = sp * sp + np.cos(p1) * np.cos(p2) * sl * sl
    return 2.0 * radius * np.arcsin(np.sqrt(np.minimum(a, 1.0)))


def distance(a: Location, b: Location, metric: Metric) -> float:
    """Distance between two locations under the given metric."""
    if isinstance(metric, Euclidean):
        return math.hypot(a[0] - b[0], a[1] - b[1])
    return float(_haversine(a[0], a[1], b[0], b[1], metric.radius))


@dataclass(frozen=True)
class KernelView:
    """Contiguous per-point arrays a block kernel iterates over.

    Euclidean: a1 = x, a2 = y, a3 unused.  Great-circle: a1 = latitude
    (radians), a2 = longitude (radians), a3 = cos(latitude), diameter =
    2 * radius.
    """

    kind: str
    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray
    diameter: float

    @property
    def size(self) -> int:
        return self.a1.size


class LocationSet:
    """Ordered, immutable set of pairwise-distinct locations."""

    def __init__(self, coords: np.ndarray, metric: Metric = Euclidean()):
        coords = np.ascontiguousarray(coords, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 2 or coords.shape[0] == 0:
            raise ValueError(f"coords must be a non-empty (n, 2) array, got {coords.shape}")
        if not np.isfinite(coords).all():
            raise ValueError("locations must be finite")
        if isinstance(metric, GreatCircle):
            lon, lat = coords[:, 0], coords[:, 1]
            if (np.abs(lon) > 180).any() or (np.abs(lat) > 90).any():
                raise ValueError("great-circle coordinates must satisfy "
                                 "lon in [-180, 180], lat in [-90, 90]")
        if np.unique(coords, axis=0).shape[0] != coords.shape[0]:
            raise ValueError("locations must be pairwise distinct")
        coords.setflags(write=False)
        self.coords = coords
        self.metric = metric
        self._views: dict = {}
        self._range = None

    def __len__(self) -> int:
        return self.coords.shape[0]

    def point(self, i: int) -> Location:
        return Location(float(self.coords[i, 0]), float(self.coords[i, 1]))

    def kernel_view(self, start: int = 0, stop: int | None = None) -> KernelView:
        stop = len(self) if stop is None else stop
        key = (start, stop)
        if key not in self._views:
            c = self.coords[start:stop]
            if isinstance(self.metric, Euclidean):
                view = KernelView("euclidean",
                                  np.ascontiguousarray(c[:, 0]),
                                  np.ascontiguousarray(c[:, 1]),
                                  np.empty(0), 0.0)
            else:
                lat = np.radians(np.ascontiguousarray(c[:, 1]))
                lon = np.radians(np.ascontiguousarray(c[:, 0]))
                view = KernelView("gcd", lat, lon, np.cos(lat),
                                  2.0 * self.metric.radius)
            self._views[key] = view
        return self._views[key]

    def _embedding(self) -> np.ndarray:
        """Coordinates in a space where chord distance orders like the metric."""
        if isinstance(self.metric, Euclidean):
            return self.coords
        lon = np.radians(self.coords[:, 0])
        lat = np.radians(self.coords[:, 1])
        r = self.metric.radius
        return np.column_stack((r * np.cos(lat) * np.cos(lon),
                                r * np.cos(lat) * np.sin(lon),
                                r * np.sin(lat)))

    def distance_range(self) -> tuple[float, float]:
        """(exact minimum pairwise distance, upper bound on the maximum)."""
        if self._range is None:
            emb = self._embedding()
            if len(self) == 1:
                self._range = (math.inf, 0.0)
            else:
                from scipy.spatial import cKDTree

                d, idx = cKDTree(emb).query(emb, k=2)
                nn = int(np.argmin(d[:, 1]))
                lo = distance(self.point(nn), self.point(int(idx[nn, 1])), self.metric)
                hi = _chord_bound(emb, self.metric)
                self._range = (lo, hi)
        return self._range


def _chord_bound(emb: np.ndarray, metric: Metric) -> float:
    diag = float(np.linalg.norm(emb.max(axis=0) - emb.min(axis=0)))
    if isinstance(metric, Euclidean):
        return diag
    r = metric.radius
    return 2.0 * r * math.asin(min(1.0, diag / (2.0 * r)))


def cross_distance_range(known: LocationSet, unknown: LocationSet) -> tuple[float, float]:
    """(smallest positive cross distance, upper bound) between two sets.

    Returns inf for the lower bound when every unknown coincides with a
    known point.
    """
    if type(known.metric) is not type(unknown.metric) or known.metric != unknown.metric:
        raise ValueError("location sets use different metrics")
    from scipy.spatial import cKDTree

    ek, eu = known._embedding(), unknown._embedding()
    k = min(2, len(known))
    d, idx = cKDTree(ek).query(eu, k=k)
    d = np.atleast_2d(d.T).T.reshape(len(unknown), k)
    idx = np.atleast_2d(idx.T).T.reshape(len(unknown), k)
    lo = math.inf
    for i in range(len(unknown)):
        for j in range(k):
            if d[i, j] > 0.0:
                cand = distance(unknown.point(i), known.point(int(idx[i, j])), known.metric)
                lo = min(lo, cand)
                break
    both = np.vstack((ek, eu))
    return lo, _chord_bound(both, known.metric)


def generate_locations(n: int, seed: int) -> LocationSet:
    """Irregular unit-square locations on a jittered ceil(sqrt(n)) grid.

    Cell (r, l) of the g x g grid contributes the candidate point
    ((r - 0.5 + X)/g, (l - 0.5 + Y)/g) with X, Y ~ Uniform(-0.4, 0.4);
    the first n candidates in row-major order are kept.  Guarantees a
    minimum separation of 0.2/g and is deterministic per (n, seed).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    g = math.isqrt(n)
    if g * g < n:
        g += 1
    rng = np.random.default_rng(seed)
    off = rng.uniform(-0.4, 0.4, (n, 2))
    idx = np.arange(n)
    row = idx // g + 1
    col = idx % g + 1
    coords = np.column_stack(((row - 0.5 + off[:, 0]) / g,
                              (col - 0.5 + off[:, 1]) / g))
    return LocationSet(coords, Euclidean())


def pairwise_distance_block(locs: LocationSet, rows: range, cols: range) -> np.ndarray:
    """Distance matrix block between two index ranges of one set."""
    n = len(locs)
    if not rows or not cols:
        raise ValueError("index ranges must be non-empty")
    if rows.start < 0 or rows.stop > n or cols.start < 0 or cols.stop > n:
        raise ValueError(f"index range out of bounds for set of size {n}")
    a = locs.coords[rows.start:rows.stop]
    b = locs.coords[cols.start:cols.stop]
    if isinstance(locs.metric, Euclidean):
        return np.hypot(a[:, 0:1] - b[None, :, 0], a[:, 1:2] - b[None, :, 1])
    return _haversine(a[:, 0:1], a[:, 1:2], b[None, :, 0], b[None, :, 1],
                      locs.metric.radius)
