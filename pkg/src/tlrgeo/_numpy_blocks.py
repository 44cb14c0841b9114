"""Vectorized numpy/scipy implementations of the hot kernels.

These are the fallback used when numba is unavailable or disabled via
``TLRGEO_DISABLE_NUMBA=1``.  They compute the same quantities as the
jitted loops in `kernels` (agreement is tolerance-level, not bitwise:
the Bessel evaluations come from scipy's AMOS routines here).
"""

import numpy as np

from . import kernels as _k


def matern_t_values(ts: np.ndarray, theta1, nu, pref) -> np.ndarray:
    """Exact kernel values at scaled distances t = r / theta2."""
    from scipy.special import kv

    ts = np.asarray(ts, dtype=float)
    with np.errstate(all="ignore"):
        val = pref * ts**nu * kv(nu, ts)
    out = np.where(np.isfinite(val) & (val <= theta1), val, theta1)
    out = np.where(ts > _k.KERNEL_CUTOFF_T, 0.0, out)
    return np.where(ts <= 0.0, theta1, out)


def _segment_values(x, x0, h, coef):
    idx = np.clip(((x - x0) / h).astype(np.int64), 0, coef.shape[0] - 1)
    dx = x - (x0 + idx * h)
    return (((coef[idx, 0] * dx + coef[idx, 1]) * dx + coef[idx, 2]) * dx
            + coef[idx, 3])


def profile_values_t(ts, theta1, nu, pref, t_lo, t_split, t_cut,
                     a_u0, a_h, a_coef, b_x0, b_h, b_coef) -> np.ndarray:
    out = np.zeros(ts.shape)
    out[ts <= 0.0] = theta1
    below = (ts > 0.0) & (ts < t_lo)
    if below.any():
        out[below] = matern_t_values(ts[below], theta1, nu, pref)
    in_a = (ts >= t_lo) & (ts <= t_split) & (ts < t_cut)
    if a_coef.shape[0] == 0:
        in_b = (ts >= t_lo) & (ts < t_cut)
    else:
        if in_a.any():
            out[in_a] = _segment_values(np.log(ts[in_a]), a_u0, a_h, a_coef)
        in_b = (ts > t_split) & (ts < t_cut)
    if in_b.any():
        out[in_b] = _segment_values(ts[in_b], b_x0, b_h, b_coef)
    return out


def _distances(rows, cols) -> np.ndarray:
    if rows.kind == "euclidean":
        return np.hypot(rows.a1[:, None] - cols.a1[None, :],
                        rows.a2[:, None] - cols.a2[None, :])
    sp = np.sin(0.5 * (cols.a1[None, :] - rows.a1[:, None]))
    sl = np.sin(0.5 * (cols.a2[None, :] - rows.a2[:, None]))
    a = sp * sp + rows.a3[:, None] * cols.a3[None, :] * sl * sl
    return rows.diameter * np.arcsin(np.sqrt(np.minimum(a, 1.0)))


def matern_block(rows, cols, p, profile=None) -> np.ndarray:
    t = _distances(rows, cols) / p.theta2
    if profile is None:
        return matern_t_values(t, p.theta1, p.theta3, p.prefactor)
    return profile_values_t(t, p.theta1, p.theta3, p.prefactor,
                            profile.t_lo, profile.t_split, profile.t_cut,
                            profile.a_u0, profile.a_h, profile.a_coef,
                            profile.b_x0, profile.b_h, profile.b_coef)
