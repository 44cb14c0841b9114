"""Slow, independent reference computations used only by tests."""

import math

import mpmath as mp
import numpy as np


def bessel_k_quadrature(nu: float, x: float, dps: int = 30) -> float:
    """K_nu(x) from its integral representation
    K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt,
    evaluated with mpmath quadrature on a truncated interval.
    """
    with mp.workdps(dps):
        xm = mp.mpf(x)
        # beyond T the integrand is below exp(-450) relative to its scale
        T = mp.acosh((450 + 50 * nu) / xm) if xm < 400 else mp.mpf(4)
        f = lambda t: mp.exp(-xm * mp.cosh(t)) * mp.cosh(nu * t)
        return float(mp.quad(f, [0, T]))


#: (nu, x) grid shared by the special-function acceptance check
BESSEL_ORACLE_GRID = [(nu, x)
                      for nu in (0.3, 0.5, 1.0, 1.7, 2.5)
                      for x in (0.01, 0.1, 1.0, 5.0, 20.0)]

# frozen oracle values (quadrature above at dps=30, cross-checked against
# mpmath.besselk to 17 digits)
K_1_AT_1 = 0.60190723019723457
K_HALF_AT_2 = 0.11993777196806145
K_3HALF_AT_1 = 0.92213700889578912


def matern_reference(r, theta1, theta2, theta3) -> float:
    """Direct high-precision Matern evaluation via mpmath."""
    if r == 0:
        return float(theta1)
    with mp.workdps(40):
        t = mp.mpf(r) / mp.mpf(theta2)
        val = (mp.mpf(theta1) / (2 ** (mp.mpf(theta3) - 1) * mp.gamma(theta3))
               * t ** mp.mpf(theta3) * mp.besselk(theta3, t))
        return float(val)


def brute_force_covariance(locs, p) -> np.ndarray:
    """Element-wise covariance assembly through the scalar public API."""
    from tlrgeo import distance, matern

    n = len(locs)
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = matern(distance(locs.point(i), locs.point(j), locs.metric), p)
        out[i, i] += p.nugget
    return out


def haversine_reference(lon1, lat1, lon2, lat2, radius) -> float:
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dl = math.radians(lon2 - lon1)
    a = (math.sin((p2 - p1) / 2) ** 2
         + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2)
    return 2 * radius * math.asin(min(1.0, math.sqrt(a)))
