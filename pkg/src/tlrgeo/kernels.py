"""Matern covariance kernel and its special functions.

The kernel value for two points at distance ``r`` is

    C(r) = theta1 / (2**(theta3-1) * Gamma(theta3))
           * (r/theta2)**theta3 * K_theta3(r/theta2)

with ``C(0) = theta1`` (continuity limit).  ``theta1`` is the variance,
``theta2`` the spatial range in distance units and ``theta3`` the
smoothness.  The optional nugget is *not* part of the kernel; covariance
assembly adds it on the matrix diagonal only.

``K_nu`` is the modified Bessel function of the second kind, evaluated
with Temme's series for ``x <= 2`` and the Thompson-Barnett continued
fraction for ``x > 2``, plus the standard forward recurrence in the
order.  The implementation is scalar and numba-compilable so covariance
tiles can be filled in a single jitted loop; the pure numpy backend
vectorizes with ``scipy.special.kv`` instead (see `_backend`).
"""

import math
from dataclasses import dataclass

import numpy as np

from ._backend import USING_NUMBA, jit

THETA3_MAX = 5.0
GAMMA_X_MAX = 50.0
#: scaled distances above this evaluate to exactly 0 (exp underflow guard)
KERNEL_CUTOFF_T = 700.0


@dataclass(frozen=True)
class MaternParams:
    """Matern parameter vector (variance, range, smoothness) plus nugget."""

    theta1: float
    theta2: float
    theta3: float
    nugget: float = 0.0

    def __post_init__(self):
        vals = (self.theta1, self.theta2, self.theta3, self.nugget)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite Matern parameters: {vals}")
        if self.theta1 <= 0 or self.theta2 <= 0 or self.theta3 <= 0:
            raise ValueError(
                f"theta components must be strictly positive, got "
                f"({self.theta1}, {self.theta2}, {self.theta3})"
            )
        if self.theta3 > THETA3_MAX:
            raise ValueError(
                f"smoothness theta3={self.theta3} exceeds supported bound {THETA3_MAX}"
            )
        if self.nugget < 0:
            raise ValueError(f"nugget must be non-negative, got {self.nugget}")

    @property
    def prefactor(self) -> float:
        """theta1 / (2**(theta3-1) * Gamma(theta3))."""
        return self.theta1 / (2.0 ** (self.theta3 - 1.0) * math.gamma(self.theta3))

    def as_tuple(self):
        return (self.theta1, self.theta2, self.theta3, self.nugget)


# --------------------------------------------------------------------------
# scalar special-function cores (jitted under the numba backend)
# --------------------------------------------------------------------------

# Taylor coefficients of gam1(mu) = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu)
# around mu = 0; the direct quotient loses digits for small |mu|.
_G1_C0 = -0.5772156649015328606
_G1_C2 = 0.0420026350340952355
_G1_C4 = 0.0421977345555443367

_SERIES_EPS = 1e-15
_MAX_INNER_ITER = 1000


@jit
def _kv_temme_consts(mu):
    """Order-dependent constants for the Temme series, |mu| <= 0.5."""
    gampl = 1.0 / math.gamma(1.0 + mu)
    gammi = 1.0 / math.gamma(1.0 - mu)
    if abs(mu) < 1e-2:
        m2 = mu * mu
        gam1 = _G1_C0 + m2 * (_G1_C2 + m2 * _G1_C4)
    else:
        gam1 = (gammi - gampl) / (2.0 * mu)
    gam2 = 0.5 * (gammi + gampl)
    return gampl, gammi, gam1, gam2


@jit
def _kv_pair_series(mu, x, gampl, gammi, gam1, gam2):
    """K_mu(x) and K_{mu+1}(x) by Temme's series; x <= 2, |mu| <= 0.5."""
    x2 = 0.5 * x
    pimu = math.pi * mu
    fact = 1.0 if abs(pimu) < 1e-15 else pimu / math.sin(pimu)
    d = -math.log(x2)
    e = mu * d
    fact2 = 1.0 if abs(e) < 1e-15 else math.sinh(e) / e
    ff = fact * (gam1 * math.cosh(e) + gam2 * fact2 * d)
    ksum = ff
    e = math.exp(e)
    p = 0.5 * e / gampl
    q = 0.5 / (e * gammi)
    c = 1.0
    d = x2 * x2
    ksum1 = p
    for i in range(1, _MAX_INNER_ITER):
        ff = (i * ff + p + q) / (i * i - mu * mu)
        c *= d / i
        p /= i - mu
        q /= i + mu
        delk = c * ff
        ksum += delk
        ksum1 += c * (p - i * ff)
        if abs(delk) < abs(ksum) * _SERIES_EPS:
            break
    return ksum, ksum1 * (2.0 / x)


@jit
def _kv_pair_cf2(mu, x):
    """K_mu(x) and K_{mu+1}(x) by the Thompson-Barnett continued fraction; x > 2."""
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d
    delh = d
    q1 = 0.0
    q2 = 1.0
    a1 = 0.25 - mu * mu
    q = a1
    c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAX_INNER_ITER):
        a -= 2.0 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _SERIES_EPS:
            break
    h = a1 * h
    kmu = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s
    return kmu, kmu * (mu + x + 0.5 - h) / x


@jit
def _kv_raw(nu, x):
    """K_nu(x) for nu > 0, x > 0; no argument validation."""
    nl = int(nu + 0.5)
    mu = nu - nl
    gampl, gammi, gam1, gam2 = _kv_temme_consts(mu)
    if x <= 2.0:
        kmu, kmu1 = _kv_pair_series(mu, x, gampl, gammi, gam1, gam2)
    else:
        kmu, kmu1 = _kv_pair_cf2(mu, x)
    for i in range(nl):
        knew = (mu + i + 1.0) * (2.0 / x) * kmu1 + kmu
        kmu = kmu1
        kmu1 = knew
    return kmu


@jit
def _matern_t(t, theta1, nu, pref):
    """Kernel value as a function of the scaled distance t = r / theta2."""
    if t <= 0.0:
        return theta1
    if t > KERNEL_CUTOFF_T:
        return 0.0
    val = pref * t**nu * _kv_raw(nu, t)
    # K_nu overflows for extremely small t; the kernel limit there is theta1
    if not math.isfinite(val) or val > theta1:
        return theta1
    return val


@jit
def _matern_r(r, theta1, theta2, nu, pref):
    return _matern_t(r / theta2, theta1, nu, pref)


@jit
def _matern_t_array(ts, theta1, nu, pref):
    out = np.empty(ts.size)
    for i in range(ts.size):
        out[i] = _matern_t(ts[i], theta1, nu, pref)
    return out


# --------------------------------------------------------------------------
# public scalar operations
# --------------------------------------------------------------------------


def gamma_fn(x: float) -> float:
    """Gamma function on (0, 50]."""
    if not (0.0 < x <= GAMMA_X_MAX) or not math.isfinite(x):
        raise ValueError(f"gamma_fn requires x in (0, {GAMMA_X_MAX}], got {x}")
    return math.gamma(x)


def bessel_k(nu: float, x: float) -> float:
    """Modified Bessel function of the second kind K_nu(x).

    Accurate to better than 1e-10 relative over x in [1e-8, 50] for
    nu in (0, 5]; monotonically decreasing in x.
    """
    if not (0.0 < nu <= THETA3_MAX) or not math.isfinite(nu):
        raise ValueError(f"bessel_k order must lie in (0, {THETA3_MAX}], got {nu}")
    if not (x > 0.0) or not math.isfinite(x):
        raise ValueError(f"bessel_k argument must be positive, got {x}")
    return _kv_raw(nu, x)


def matern(r: float, p: MaternParams) -> float:
    """Matern covariance at distance r >= 0.  The nugget is not added."""
    if not (r >= 0.0) or not math.isfinite(r):
        raise ValueError(f"distance must be finite and non-negative, got {r}")
    return _matern_r(r, p.theta1, p.theta2, p.theta3, p.prefactor)


# --------------------------------------------------------------------------
# kernel profile: cubic-spline table of C(r) for one fixed parameter set
# --------------------------------------------------------------------------
#
# Covariance assembly evaluates the kernel millions of times at fixed
# parameters.  A profile tabulates C as a cubic spline over the scaled
# distance t = r/theta2, log-spaced below t = 1.9 and uniform above (the
# split sits away from the t = 2 branch boundary of the Bessel routine
# so its rounding-level kink falls inside the fine uniform grid).  Every
# build is verified against exact evaluation at off-node probes, with
# node doubling on failure; if the tolerance cannot be met the caller
# falls back to exact per-entry evaluation.  Values below
# RELATIVE_FLOOR * theta1 are assembled as exact zeros.

PROFILE_TOL = 1e-12
RELATIVE_FLOOR = 1e-17
_SEG_SPLIT_T = 1.9
_MAX_NODES = 1 << 18


@dataclass
class MaternProfile:
    theta1: float
    theta2: float
    theta3: float
    prefactor: float
    t_lo: float
    t_split: float
    t_cut: float
    a_u0: float
    a_h: float
    a_coef: np.ndarray  # (nA-1, 4) rows of cubic coefficients; empty if no log segment
    b_x0: float
    b_h: float
    b_coef: np.ndarray  # (nB-1, 4); empty if no linear segment
    max_rel_error: float


def _exact_t_values(ts: np.ndarray, theta1, nu, pref) -> np.ndarray:
    if USING_NUMBA:
        return _matern_t_array(ts, theta1, nu, pref)
    from . import _numpy_blocks

    return _numpy_blocks.matern_t_values(ts, theta1, nu, pref)


def _fit_segment(grid: np.ndarray, values: np.ndarray):
    from scipy.interpolate import CubicSpline

    cs = CubicSpline(grid, values)
    # one row of (c3, c2, c1, c0) per interval: a single cache line per
    # lookup in the hot loops
    return np.ascontiguousarray(cs.c.T)


def _segment_probes(lo: float, hi: float, count: int = 257) -> np.ndarray:
    # golden-ratio offset keeps probes away from the interpolation nodes
    base = np.linspace(lo, hi, count, endpoint=False)
    return base + (hi - lo) / count * 0.6180339887498949


def _padded_grid(lo: float, hi: float, n: int) -> np.ndarray:
    # extend 4 intervals past each end so evaluations stay clear of the
    # larger not-a-knot end-interval error; built as x0 + h*i exactly so
    # the uniform-index lookup in the evaluators matches the breakpoints
    h = (hi - lo) / (n - 1)
    x0 = lo - 4 * h
    return x0 + h * np.arange(n + 8), x0, h


def build_profile(
    p: MaternParams, r_lo: float, r_hi: float, tol: float = PROFILE_TOL
) -> MaternProfile | None:
    """Tabulate the kernel for distances in [r_lo, r_hi].

    Returns None when the verification probes cannot be brought below
    ``tol`` within the node budget (callers then evaluate exactly).
    """
    if not (0.0 < r_lo <= r_hi) or not math.isfinite(r_hi):
        raise ValueError(f"invalid profile distance range [{r_lo}, {r_hi}]")
    theta1, theta2, nu = p.theta1, p.theta2, p.theta3
    pref = p.prefactor
    t_lo = max(r_lo / theta2 * (1.0 - 1e-9), 1e-10)
    t_hi = min(r_hi / theta2 * (1.0 + 1e-9), KERNEL_CUTOFF_T)

    floor = RELATIVE_FLOOR * theta1

    def m_exact(t):
        return float(_exact_t_values(np.array([t]), theta1, nu, pref)[0])

    # truncate the table where the kernel falls below the relative floor
    t_cut = t_hi
    if t_hi > _SEG_SPLIT_T and m_exact(t_hi) < floor:
        lo, hi = max(t_lo, _SEG_SPLIT_T), t_hi
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if m_exact(mid) < floor:
                hi = mid
            else:
                lo = mid
        t_cut = hi
    t_split = min(_SEG_SPLIT_T, t_cut)

    n_a = 4096 if t_lo < t_split else 0
    n_b = 0
    if t_cut > _SEG_SPLIT_T:
        n_b = int(np.clip((t_cut - _SEG_SPLIT_T) / 0.004, 512, 32768))

    rel_floor = 1e-13 * theta1
    abs_tol = 1e-14 * theta1
    for _ in range(5):
        if n_a + n_b > _MAX_NODES:
            return None
        a_u0 = a_h = b_x0 = b_h = 0.0
        a_coef = np.empty((0, 4))
        b_coef = np.empty((0, 4))
        if n_a:
            ua, a_u0, a_h = _padded_grid(math.log(t_lo), math.log(t_split), n_a)
            a_vals = _exact_t_values(np.exp(ua), theta1, nu, pref)
            a_coef = _fit_segment(ua, a_vals)
        if n_b:
            xb, b_x0, b_h = _padded_grid(_SEG_SPLIT_T, t_cut, n_b)
            b_vals = _exact_t_values(xb, theta1, nu, pref)
            b_coef = _fit_segment(xb, b_vals)

        prof = MaternProfile(
            theta1, theta2, nu, pref, t_lo, t_split, t_cut,
            a_u0, a_h, a_coef, b_x0, b_h, b_coef, math.nan,
        )

        worst = 0.0
        ok = True
        for seg, lo, hi in (("a", t_lo, t_split), ("b", _SEG_SPLIT_T, t_cut)):
            if (seg == "a" and not n_a) or (seg == "b" and not n_b):
                continue
            ts = _segment_probes(lo, hi)
            exact = _exact_t_values(ts, theta1, nu, pref)
            approx = profile_eval_t(prof, ts)
            err = np.abs(approx - exact)
            mask = exact > rel_floor
            rel = float(np.max(err[mask] / exact[mask])) if mask.any() else 0.0
            bad_abs = bool((err[~mask] > abs_tol).any())
            worst = max(worst, rel)
            if rel > tol or bad_abs:
                ok = False
                if seg == "a":
                    n_a *= 2
                else:
                    n_b *= 2
        if ok:
            prof.max_rel_error = worst
            return prof
    return None


def profile_eval_t(prof: MaternProfile, ts: np.ndarray) -> np.ndarray:
    """Vectorized profile evaluation at scaled distances (testing helper)."""
    from . import _numpy_blocks

    return _numpy_blocks.profile_values_t(
        np.asarray(ts, dtype=float),
        prof.theta1, prof.theta3, prof.prefactor,
        prof.t_lo, prof.t_split, prof.t_cut,
        prof.a_u0, prof.a_h, prof.a_coef,
        prof.b_x0, prof.b_h, prof.b_coef,
    )


# --------------------------------------------------------------------------
# block evaluators (the hot kernels)
# --------------------------------------------------------------------------


@jit
def _profile_t(t, theta1, nu, pref, t_lo, t_split, t_cut,
               a_u0, a_h, a_coef, b_x0, b_h, b_coef):
    if t <= 0.0:
        return theta1
    if t >= t_cut:
        return 0.0
    if t < t_lo:
        return _matern_t(t, theta1, nu, pref)
    if t <= t_split and a_coef.shape[0] > 0:
        u = math.log(t)
        idx = int((u - a_u0) / a_h)
        if idx < 0:
            idx = 0
        elif idx > a_coef.shape[0] - 1:
            idx = a_coef.shape[0] - 1
        du = u - (a_u0 + idx * a_h)
        return ((a_coef[idx, 0] * du + a_coef[idx, 1]) * du + a_coef[idx, 2]) * du + a_coef[idx, 3]
    idx = int((t - b_x0) / b_h)
    if idx < 0:
        idx = 0
    elif idx > b_coef.shape[0] - 1:
        idx = b_coef.shape[0] - 1
    dt = t - (b_x0 + idx * b_h)
    return ((b_coef[idx, 0] * dt + b_coef[idx, 1]) * dt + b_coef[idx, 2]) * dt + b_coef[idx, 3]


@jit
def _block_euclid_exact(px, py, qx, qy, theta1, theta2, nu, pref, out):
    inv = 1.0 / theta2
    for i in range(px.size):
        for j in range(qx.size):
            dx = px[i] - qx[j]
            dy = py[i] - qy[j]
            out[i, j] = _matern_t(math.sqrt(dx * dx + dy * dy) * inv, theta1, nu, pref)


@jit
def _block_euclid_profile(px, py, qx, qy, theta2, theta1, nu, pref,
                          t_lo, t_split, t_cut, a_u0, a_h, a_coef,
                          b_x0, b_h, b_coef, out):
    inv = 1.0 / theta2
    for i in range(px.size):
        for j in range(qx.size):
            dx = px[i] - qx[j]
            dy = py[i] - qy[j]
            t = math.sqrt(dx * dx + dy * dy) * inv
            out[i, j] = _profile_t(t, theta1, nu, pref, t_lo, t_split, t_cut,
                                   a_u0, a_h, a_coef, b_x0, b_h, b_coef)


@jit
def _block_gcd_exact(plat, plon, pcos, qlat, qlon, qcos, diameter,
                     theta1, theta2, nu, pref, out):
    # diameter = 2 * sphere radius; lat/lon in radians, pcos = cos(lat)
    inv = 1.0 / theta2
    for i in range(plat.size):
        for j in range(qlat.size):
            sp = math.sin(0.5 * (qlat[j] - plat[i]))
            sl = math.sin(0.5 * (qlon[j] - plon[i]))
            a = sp * sp + pcos[i] * qcos[j] * sl * sl
            if a > 1.0:
                a = 1.0
            r = diameter * math.asin(math.sqrt(a))
            out[i, j] = _matern_t(r * inv, theta1, nu, pref)


@jit
def _block_gcd_profile(plat, plon, pcos, qlat, qlon, qcos, diameter,
                       theta2, theta1, nu, pref,
                       t_lo, t_split, t_cut, a_u0, a_h, a_coef,
                       b_x0, b_h, b_coef, out):
    inv = 1.0 / theta2
    for i in range(plat.size):
        for j in range(qlat.size):
            sp = math.sin(0.5 * (qlat[j] - plat[i]))
            sl = math.sin(0.5 * (qlon[j] - plon[i]))
            a = sp * sp + pcos[i] * qcos[j] * sl * sl
            if a > 1.0:
                a = 1.0
            t = diameter * math.asin(math.sqrt(a)) * inv
            out[i, j] = _profile_t(t, theta1, nu, pref, t_lo, t_split, t_cut,
                                   a_u0, a_h, a_coef, b_x0, b_h, b_coef)


def matern_block(set_rows, set_cols, p: MaternParams,
                 profile: MaternProfile | None = None) -> np.ndarray:
    """Kernel matrix between the points of two location views.

    ``set_rows`` / ``set_cols`` are (coords-arrays, metric) views as
    produced by :meth:`tlrgeo.geometry.LocationSet.kernel_view`.  The
    nugget is not added here.
    """
    rows, cols = set_rows, set_cols
    if not USING_NUMBA:
        from . import _numpy_blocks

        return _numpy_blocks.matern_block(rows, cols, p, profile)
    theta1, theta2, nu = p.theta1, p.theta2, p.theta3
    pref = p.prefactor
    out = np.empty((rows.size, cols.size))
    if rows.kind == "euclidean":
        if profile is None:
            _block_euclid_exact(rows.a1, rows.a2, cols.a1, cols.a2,
                                theta1, theta2, nu, pref, out)
        else:
            _block_euclid_profile(rows.a1, rows.a2, cols.a1, cols.a2,
                                  theta2, theta1, nu, pref,
                                  profile.t_lo, profile.t_split, profile.t_cut,
                                  profile.a_u0, profile.a_h, profile.a_coef,
                                  profile.b_x0, profile.b_h, profile.b_coef, out)
    else:
        if profile is None:
            _block_gcd_exact(rows.a1, rows.a2, rows.a3, cols.a1, cols.a2, cols.a3,
                             rows.diameter, theta1, theta2, nu, pref, out)
        else:
            _block_gcd_profile(rows.a1, rows.a2, rows.a3, cols.a1, cols.a2, cols.a3,
                               rows.diameter, theta2, theta1, nu, pref,
                               profile.t_lo, profile.t_split, profile.t_cut,
                               profile.a_u0, profile.a_h, profile.a_coef,
                               profile.b_x0, profile.b_h, profile.b_coef, out)
    return out
