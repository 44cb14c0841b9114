"""Tile-grid storage for symmetric covariance matrices.

A matrix of order n is split into a t x t grid of nb x nb tiles (the
last row/column of tiles may be ragged).  Only the lower triangle is
stored: dense diagonal tiles plus, per mode, dense or rank-k factored
off-diagonal tiles.  A constructed matrix is immutable by convention and
safe to share across threads.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .geometry import LocationSet
from .kernels import MaternParams, MaternProfile

DEFAULT_NB_DENSE = 200
DEFAULT_NB_TLR = 400
#: below this order, covariance assembly skips the kernel profile
PROFILE_MIN_N = 256


@dataclass(frozen=True)
class TileGrid:
    """Tile decomposition of a square matrix of order n."""

    n: int
    nb: int

    def __post_init__(self):
        if not (1 <= self.nb and 1 <= self.n):
            raise ValueError(f"need n >= 1 and nb >= 1, got n={self.n} nb={self.nb}")

    @property
    def t(self) -> int:
        return -(-self.n // self.nb)

    def bounds(self, i: int) -> tuple[int, int]:
        if not 0 <= i < self.t:
            raise IndexError(f"tile index {i} out of range for t={self.t}")
        return i * self.nb, min((i + 1) * self.nb, self.n)

    def size(self, i: int) -> int:
        lo, hi = self.bounds(i)
        return hi - lo

    def tile_of(self, gi: int) -> tuple[int, int]:
        """Global index -> (tile index, intra-tile offset)."""
        if not 0 <= gi < self.n:
            raise IndexError(f"global index {gi} out of range for n={self.n}")
        return gi // self.nb, gi % self.nb

    def global_of(self, tile: int, offset: int) -> int:
        lo, hi = self.bounds(tile)
        if not 0 <= offset < hi - lo:
            raise IndexError(f"offset {offset} out of range for tile {tile}")
        return lo + offset


@dataclass(frozen=True)
class LowRankTile:
    """Rank-k tile factored as u @ v.T; k = 0 encodes the zero tile."""

    u: np.ndarray  # rows x k
    v: np.ndarray  # cols x k

    def __post_init__(self):
        if self.u.ndim != 2 or self.v.ndim != 2 or self.u.shape[1] != self.v.shape[1]:
            raise ValueError(
                f"factor shapes {self.u.shape} / {self.v.shape} are not conformal"
            )

    @property
    def rank(self) -> int:
        return self.u.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.u.shape[0], self.v.shape[0])

    def to_dense(self) -> np.ndarray:
        return self.u @ self.v.T

    def frob_norm(self) -> float:
        # ||u v^T||_F^2 = sum((u^T u) * (v^T v)) without densifying
        return math.sqrt(max(0.0, float(np.sum((self.u.T @ self.u) * (self.v.T @ self.v)))))

    def stored_reals(self) -> int:
        return self.u.size + self.v.size


def _tile_frob(tile) -> float:
    if isinstance(tile, LowRankTile):
        return tile.frob_norm()
    return float(np.linalg.norm(tile))


class TLRMatrix:
    """Symmetric tile matrix: dense diagonal, dense or low-rank lower tiles.

    ``mode`` is "dense" (all tiles dense) or "tlr" (off-diagonal tiles
    compressed to the construction accuracy).
    """

    def __init__(self, grid: TileGrid, diag, lower, mode: str, accuracy=None):
        self.grid = grid
        self.diag = diag
        self.lower = lower
        self.mode = mode
        self.accuracy = accuracy

    @property
    def n(self) -> int:
        return self.grid.n

    def densify(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i in range(self.grid.t):
            r0, r1 = self.grid.bounds(i)
            a[r0:r1, r0:r1] = self.diag[i]
            for j in range(i):
                c0, c1 = self.grid.bounds(j)
                block = self.lower[(i, j)]
                if isinstance(block, LowRankTile):
                    block = block.to_dense()
                a[r0:r1, c0:c1] = block
                a[c0:c1, r0:r1] = block.T
        return a

    def stored_reals(self) -> int:
        count = sum(d.size for d in self.diag)
        for tile in self.lower.values():
            count += tile.stored_reals() if isinstance(tile, LowRankTile) else tile.size
        return count

    def dump_tiles(self, fh) -> None:
        """One line per stored tile: ``i j kind rank frob_norm``."""
        for i in range(self.grid.t):
            d = self.diag[i]
            fh.write(f"{i} {i} dense {min(d.shape)} {np.linalg.norm(d):.17g}\n")
            for j in range(i):
                tile = self.lower[(i, j)]
                kind = "lowrank" if isinstance(tile, LowRankTile) else "dense"
                rank = tile.rank if isinstance(tile, LowRankTile) else min(tile.shape)
                fh.write(f"{i} {j} {kind} {rank} {_tile_frob(tile):.17g}\n")


@dataclass(frozen=True)
class Footprint:
    bytes_dense_equiv: int
    bytes_actual: int
    compression_ratio: float
    stored_reals: int


def footprint(m: TLRMatrix) -> Footprint:
    """Exact storage accounting of a tile matrix vs. its dense equivalent."""
    reals = m.stored_reals()
    dense = 8 * m.n * m.n
    actual = 8 * reals
    return Footprint(dense, actual, dense / actual, reals)


def _resolve_profile(locs: LocationSet, p: MaternParams, profile):
    if isinstance(profile, MaternProfile):
        return profile
    if profile == "never" or profile is None:
        return None
    if profile != "auto":
        raise ValueError(f"unknown profile option {profile!r}")
    if len(locs) < PROFILE_MIN_N:
        return None
    r_lo, r_hi = locs.distance_range()
    if not (0.0 < r_lo < math.inf):
        return None
    return kernels.build_profile(p, r_lo, r_hi)


def assemble_covariance(
    locs: LocationSet,
    p: MaternParams,
    grid: TileGrid,
    mode: str = "dense",
    accuracy: float | None = None,
    profile="auto",
) -> TLRMatrix:
    """Assemble the Matern covariance of a location set tile by tile.

    Entry (i, j) is ``matern(distance(s_i, s_j), p)`` plus the nugget on
    the diagonal.  In "tlr" mode each off-diagonal tile is generated
    dense and immediately compressed to ``accuracy``; tiles are
    independent units of work.
    """
    from .compression import compress_tile

    if len(locs) != grid.n:
        raise ValueError(f"grid order {grid.n} does not match set size {len(locs)}")
    if mode not in ("dense", "tlr"):
        raise ValueError(f"unknown assembly mode {mode!r}")
    if mode == "tlr":
        if accuracy is None:
            raise ValueError("tlr mode requires an accuracy threshold")
        if not (0.0 < accuracy < 1.0):
            raise ValueError(f"accuracy must lie in (0, 1), got {accuracy}")

    prof = _resolve_profile(locs, p, profile)
    views = [locs.kernel_view(*grid.bounds(i)) for i in range(grid.t)]
    diag = []
    lower = {}
    for i in range(grid.t):
        d = kernels.matern_block(views[i], views[i], p, prof)
        if p.nugget:
            d[np.diag_indices_from(d)] += p.nugget
        diag.append(d)
        for j in range(i):
            block = kernels.matern_block(views[i], views[j], p, prof)
            if mode == "tlr":
                lower[(i, j)] = compress_tile(block, accuracy)
            else:
                lower[(i, j)] = block
    return TLRMatrix(grid, diag, lower, mode, accuracy)
