"""Clausen's integral and the imaginary part of the dilogarithm.

These two scalar functions are the building blocks of the circle pattern
functionals.  Clausen's integral is

    Cl(x) = Im Li2(exp(i x)) = -integral_0^x log(2 sin(t/2)) dt,

a 2*pi-periodic odd function.  The imaginary part of the dilogarithm off
the unit circle reduces to Clausen values,

    Im Li2(exp(x + i*theta)) = y*x + Cl(2y)/2 - Cl(2y + 2*theta)/2 + Cl(2*theta)/2,

where y is the branch-free angle atan2(e^x sin(theta), 1 - e^x cos(theta)).
All functions accept floats or numpy arrays and are stateless.
"""

from __future__ import annotations

import numpy as np
from scipy.special import zeta as _zeta

TWO_PI = 2.0 * np.pi

# Coefficients of the power series
#   Cl(x) = x - x*log(x) + sum_k c_k x^(2k+1),   c_k = zeta(2k) / (k (2k+1) (2 pi)^(2k)),
# valid on [0, pi].  Terms decay like 4^-k there; 30 terms reach ~1e-21.
_K = np.arange(1, 31)
_SERIES = _zeta(2.0 * _K) / (_K * (2 * _K + 1) * TWO_PI ** (2.0 * _K))


def _as_float_array(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {x!r}")
    return arr


def _series_0_pi(a):
    """Cl on [0, pi] via the log-endpoint expansion."""
    acc = np.zeros_like(a)
    t = a * a
    for c in _SERIES[::-1]:
        acc = acc * t + c
    with np.errstate(divide="ignore", invalid="ignore"):
        main = np.where(a > 0.0, a * (1.0 - np.log(np.where(a > 0.0, a, 1.0))), 0.0)
    return main + acc * t * a


def clausen(x):
    """Clausen's integral Cl(x), accurate to ~1e-14 absolute.

    Reduces to [0, pi] by periodicity and oddness, then evaluates the
    power series with the x*log(x) endpoint term split off in closed form.
    """
    arr = _as_float_array(x, "x")
    y = np.remainder(arr, TWO_PI)
    y = np.where(y > np.pi, y - TWO_PI, y)
    val = np.sign(y) * _series_0_pi(np.abs(y))
    return float(val) if arr.ndim == 0 else val


def lobachevsky(x):
    """Milnor's Lobachevsky function, the alias Cl(2x)/2."""
    return 0.5 * clausen(2.0 * np.asarray(x, dtype=float)) if np.ndim(x) else 0.5 * clausen(2.0 * x)


def im_li2_dx(x, theta):
    """d/dx Im Li2(exp(x + i*theta)) as a branch-free angle in (-pi, pi).

    Equal to atan2(e^x sin(theta), 1 - e^x cos(theta)); for x > 0 the
    exponential is factored out so the formula is stable for |x| up to
    ~700.  For theta in (0, pi) the value lies in (0, pi).
    """
    xa = _as_float_array(x, "x")
    ta = np.asarray(theta, dtype=float)
    s = np.sin(ta)
    c = np.cos(ta)
    pos = xa > 0.0
    ex = np.exp(np.where(pos, -xa, xa))
    out = np.where(pos, np.arctan2(s + 0.0 * ex, ex - c), np.arctan2(ex * s, 1.0 - ex * c))
    return float(out) if (xa.ndim == 0 and ta.ndim == 0) else out


def im_li2(x, theta):
    """Im Li2(exp(x + i*theta)) for real x and theta in (0, 2*pi)."""
    xa = _as_float_array(x, "x")
    ta = _as_float_array(theta, "theta")
    if np.any(ta <= 0.0) or np.any(ta >= TWO_PI):
        raise ValueError(f"theta must lie strictly in (0, 2*pi), got {theta!r}")
    y = im_li2_dx(xa, ta)
    out = y * xa + 0.5 * (clausen(2.0 * y) - clausen(2.0 * y + 2.0 * ta) + clausen(2.0 * ta))
    return float(out) if (xa.ndim == 0 and ta.ndim == 0) else out


def im_li2_symmetric(x, theta):
    """The even combination Im Li2(e^{x+i theta}) + Im Li2(e^{-x+i theta}).

    Uses the closed form p*x + Cl(theta* + p) + Cl(theta* - p) - Cl(2 theta*)
    with theta* = pi - theta and tan(p/2) = tanh(x/2) tan(theta*/2).
    Requires theta in (0, pi).
    """
    xa = _as_float_array(x, "x")
    ta = _as_float_array(theta, "theta")
    if np.any(ta <= 0.0) or np.any(ta >= np.pi):
        raise ValueError(f"theta must lie strictly in (0, pi), got {theta!r}")
    tstar = np.pi - ta
    p = 2.0 * np.arctan(np.tan(0.5 * tstar) * np.tanh(0.5 * xa))
    out = p * xa + clausen(tstar + p) + clausen(tstar - p) - clausen(2.0 * tstar)
    return float(out) if (xa.ndim == 0 and ta.ndim == 0) else out
