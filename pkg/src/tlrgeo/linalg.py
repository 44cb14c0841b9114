"""Tile Cholesky factorization, triangular solves and log-determinant.

Both factorizations run the right-looking tile sweep: factor the
diagonal tile of column k, apply triangular solves to the panel below
it, then update the trailing submatrix.  In TLR mode panel solves act on
the V factor only (rank unchanged) and trailing updates are applied as
low-rank products with eager recompression; diagonal tiles are always
updated densely.  Numerical policy lives with the callers: a failed
pivot raises ``NotPositiveDefiniteError`` rather than retrying with a
nugget.
"""

import numpy as np
from scipy.linalg import get_lapack_funcs, solve_triangular

from .compression import recompress
from .tilestore import LowRankTile, TileGrid, TLRMatrix


class NotPositiveDefiniteError(Exception):
    """A leading minor was not positive definite during factorization.

    Usually means theta is outside the SPD region for the data or the
    nugget is too small.
    """

    def __init__(self, tile_index: int, pivot_index: int):
        self.tile_index = tile_index
        self.pivot_index = pivot_index
        super().__init__(
            f"covariance not positive definite at tile {tile_index}, "
            f"pivot {pivot_index}; consider adding a nugget"
        )


def potrf_tile(a: np.ndarray, tile_index: int = 0) -> np.ndarray:
    """Lower Cholesky factor of an SPD tile."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"potrf_tile needs a square tile, got {a.shape}")
    (dpotrf,) = get_lapack_funcs(("potrf",), (a,))
    c, info = dpotrf(a, lower=1, overwrite_a=0)
    if info != 0:
        raise NotPositiveDefiniteError(tile_index, int(info) - 1)
    return np.tril(c)


class CholeskyFactor:
    """Lower-triangular tile factor with its log-determinant."""

    def __init__(self, grid: TileGrid, diag, lower, log_det: float,
                 mode: str, accuracy=None):
        self.grid = grid
        self.diag = diag
        self.lower = lower
        self.log_det = log_det
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
        return a


def _log_det_tile(chol_tile: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(chol_tile))))


def dense_cholesky(m: TLRMatrix) -> CholeskyFactor:
    """Right-looking tile Cholesky of a dense-mode tile matrix."""
    if m.mode != "dense":
        raise ValueError("dense_cholesky requires a dense-mode matrix")
    t = m.grid.t
    diag = [d.copy() for d in m.diag]
    lower = {k: v.copy() for k, v in m.lower.items()}
    log_det = 0.0
    for k in range(t):
        lkk = potrf_tile(diag[k], tile_index=k)
        diag[k] = lkk
        log_det += _log_det_tile(lkk)
        for i in range(k + 1, t):
            lower[(i, k)] = solve_triangular(
                lkk, lower[(i, k)].T, lower=True, check_finite=False
            ).T
        for j in range(k + 1, t):
            ljk = lower[(j, k)]
            diag[j] -= ljk @ ljk.T
            for i in range(j + 1, t):
                lower[(i, j)] -= lower[(i, k)] @ ljk.T
    return CholeskyFactor(m.grid, diag, lower, log_det, "dense")


def tlr_cholesky(m: TLRMatrix, eps: float | None = None) -> CholeskyFactor:
    """Right-looking TLR tile Cholesky with eager recompression to eps."""
    if m.mode != "tlr":
        raise ValueError("tlr_cholesky requires a tlr-mode matrix")
    eps = m.accuracy if eps is None else float(eps)
    if not (0.0 < eps < 1.0):
        raise ValueError(f"accuracy must lie in (0, 1), got {eps}")
    t = m.grid.t
    diag = [d.copy() for d in m.diag]
    lower = dict(m.lower)
    log_det = 0.0
    for k in range(t):
        lkk = potrf_tile(diag[k], tile_index=k)
        diag[k] = lkk
        log_det += _log_det_tile(lkk)
        for i in range(k + 1, t):
            tile = lower[(i, k)]
            if tile.rank:
                lower[(i, k)] = LowRankTile(
                    tile.u,
                    solve_triangular(lkk, tile.v, lower=True, check_finite=False),
                )
        for j in range(k + 1, t):
            ljk = lower[(j, k)]
            if ljk.rank:
                w = ljk.u @ (ljk.v.T @ ljk.v)
                diag[j] -= w @ ljk.u.T
            for i in range(j + 1, t):
                lik = lower[(i, k)]
                if lik.rank == 0 or ljk.rank == 0:
                    continue
                u2 = -(lik.u @ (lik.v.T @ ljk.v))
                tile = lower[(i, j)]
                lower[(i, j)] = recompress(tile.u, tile.v, u2, ljk.u, eps)
    return CholeskyFactor(m.grid, diag, lower, log_det, "tlr", eps)


def cholesky(m: TLRMatrix, eps: float | None = None) -> CholeskyFactor:
    """Factorize a tile matrix with the algorithm matching its mode."""
    if m.mode == "dense":
        return dense_cholesky(m)
    return tlr_cholesky(m, eps)


def _apply(tile, x: np.ndarray) -> np.ndarray:
    if isinstance(tile, LowRankTile):
        if tile.rank == 0:
            return 0.0
        return tile.u @ (tile.v.T @ x)
    return tile @ x


def _apply_t(tile, x: np.ndarray) -> np.ndarray:
    if isinstance(tile, LowRankTile):
        if tile.rank == 0:
            return 0.0
        return tile.v @ (tile.u.T @ x)
    return tile.T @ x


def forward_solve(f: CholeskyFactor, rhs: np.ndarray) -> np.ndarray:
    """Solve L y = rhs by tile forward substitution."""
    y, squeeze = _as_matrix(rhs, f.n)
    t = f.grid.t
    for i in range(t):
        r0, r1 = f.grid.bounds(i)
        acc = y[r0:r1]
        for j in range(i):
            c0, c1 = f.grid.bounds(j)
            acc = acc - _apply(f.lower[(i, j)], y[c0:c1])
        y[r0:r1] = solve_triangular(f.diag[i], acc, lower=True, check_finite=False)
    return y[:, 0] if squeeze else y


def backward_solve(f: CholeskyFactor, rhs: np.ndarray) -> np.ndarray:
    """Solve L^T x = rhs by tile backward substitution."""
    x, squeeze = _as_matrix(rhs, f.n)
    t = f.grid.t
    for i in range(t - 1, -1, -1):
        r0, r1 = f.grid.bounds(i)
        acc = x[r0:r1]
        for j in range(i + 1, t):
            c0, c1 = f.grid.bounds(j)
            acc = acc - _apply_t(f.lower[(j, i)], x[c0:c1])
        x[r0:r1] = solve_triangular(f.diag[i], acc, lower=True, trans="T",
                                    check_finite=False)
    return x[:, 0] if squeeze else x


def solve_cholesky(f: CholeskyFactor, rhs: np.ndarray) -> np.ndarray:
    """Solve (L L^T) x = rhs for one or many right-hand sides."""
    return backward_solve(f, forward_solve(f, rhs))


def quadratic_form(f: CholeskyFactor, z: np.ndarray) -> float:
    """z^T Sigma^{-1} z computed as ||L^{-1} z||^2; non-negative."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise ValueError(f"quadratic_form expects a vector, got shape {z.shape}")
    w = forward_solve(f, z)
    return float(w @ w)


def _as_matrix(rhs: np.ndarray, n: int) -> tuple[np.ndarray, bool]:
    rhs = np.asarray(rhs, dtype=float)
    squeeze = rhs.ndim == 1
    if squeeze:
        rhs = rhs[:, None]
    if rhs.ndim != 2 or rhs.shape[0] != n:
        raise ValueError(f"rhs shape {rhs.shape} does not match order {n}")
    return rhs.copy(), squeeze
