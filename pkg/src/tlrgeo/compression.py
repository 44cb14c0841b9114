"""Accuracy-controlled low-rank tile compression.

Truncation keeps the smallest rank k whose discarded singular-value tail
satisfies ``sqrt(sum_{i>k} s_i^2) <= eps * ||a||_F``, which by the
Eckart-Young theorem bounds the reconstruction error by ``eps * ||a||_F``
in the Frobenius norm.  Ranks are never capped: an incompressible tile
simply comes back with a large k and honest storage accounting.
"""

import numpy as np
import scipy.linalg

from .tilestore import LowRankTile

#: accuracy thresholds used by the benchmark presets
BENCHMARK_EPS_GRID = (1e-5, 1e-7, 1e-9, 1e-12)


def _validate_eps(eps: float) -> float:
    eps = float(eps)
    if not (0.0 < eps < 1.0):
        raise ValueError(f"accuracy threshold must lie in (0, 1), got {eps}")
    return eps


def _truncation_rank(s: np.ndarray, eps: float) -> int:
    """Smallest k with ||s[k:]||_2 <= eps * ||s||_2."""
    if s.size == 0:
        return 0
    sq = s * s
    fro2 = float(np.sum(sq))
    if fro2 == 0.0:
        return 0
    tail2 = np.cumsum(sq[::-1])[::-1]
    ok = np.nonzero(tail2 <= eps * eps * fro2)[0]
    return int(ok[0]) if ok.size else s.size


def compress_tile(a: np.ndarray, eps: float) -> LowRankTile:
    """Truncated SVD of a dense tile to relative Frobenius accuracy eps.

    Decomposition failures (LinAlgError) propagate to the caller.
    """
    eps = _validate_eps(eps)
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"tile must be 2-d, got shape {a.shape}")
    u, s, vt = scipy.linalg.svd(a, full_matrices=False, check_finite=False,
                                lapack_driver="gesdd")
    k = _truncation_rank(s, eps)
    return LowRankTile(u[:, :k] * s[:k], vt[:k, :].T.copy())


def recompress(u1: np.ndarray, v1: np.ndarray, u2: np.ndarray, v2: np.ndarray,
               eps: float) -> LowRankTile:
    """Rank-k factorization of u1 @ v1.T + u2 @ v2.T to accuracy eps.

    Works on the stacked factors (reduced QR of [u1 u2] and [v1 v2],
    then a truncated SVD of the small core), so the full tile is never
    densified and k never exceeds k1 + k2.
    """
    eps = _validate_eps(eps)
    if u1.shape[0] != u2.shape[0] or v1.shape[0] != v2.shape[0]:
        raise ValueError("addend factors have mismatched tile dimensions")
    k12 = u1.shape[1] + u2.shape[1]
    if k12 == 0:
        return LowRankTile(u1, v1)
    us = np.hstack((u1, u2))
    vs = np.hstack((v1, v2))
    qu, ru = np.linalg.qr(us, mode="reduced")
    qv, rv = np.linalg.qr(vs, mode="reduced")
    core = ru @ rv.T
    w, s, zt = scipy.linalg.svd(core, full_matrices=False, check_finite=False,
                                lapack_driver="gesdd")
    # cancellation leaves rounding noise scaled by the addends, not the
    # sum; directions below the machine noise of the inputs carry no
    # information and are dropped
    noise = 50 * np.finfo(float).eps * np.linalg.norm(ru) * np.linalg.norm(rv)
    s = s[s > noise]
    k = _truncation_rank(s, eps)
    return LowRankTile(qu @ (w[:, :k] * s[:k]), qv @ zt[:k, :].T)
