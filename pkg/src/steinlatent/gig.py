"""Generalized inverse Gaussian random variates.

GIG(lam, chi, psi) has density proportional to

    w**(lam - 1) * exp(-(chi / w + psi * w) / 2),   w > 0.

Sampling works on the two-parameter form with omega = sqrt(chi * psi),
whose density is proportional to x**(lam - 1) * exp(-omega/2 * (x + 1/x)),
and rescales by sqrt(chi / psi). Negative lam is handled through the
reciprocal identity X ~ GIG(lam, omega)  =>  1/X ~ GIG(-lam, omega).

Three rejection schemes from Hormann & Leydold (2014) cover the parameter
space: ratio-of-uniforms with mode shift, ratio-of-uniforms without shift,
and a piecewise hat for the non log-concave corner (lam < 1, small omega).
All candidates are drawn in vectorized batches.
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import ParameterError


def _log_kernel(x: np.ndarray, lam: float, omega: float) -> np.ndarray:
    return (lam - 1.0) * np.log(x) - 0.5 * omega * (x + 1.0 / x)


def _mode(lam: float, omega: float) -> float:
    # stable for both signs of lam - 1
    if lam >= 1.0:
        return ((lam - 1.0) + math.hypot(lam - 1.0, omega)) / omega
    return omega / ((1.0 - lam) + math.hypot(1.0 - lam, omega))


def _rou_shift_bounds(lam: float, omega: float):
    m = _mode(lam, omega)
    # extrema of (x - m) * sqrt(g(x)) are roots of this cubic
    a = -(2.0 * (lam + 1.0) / omega + m)
    b = 2.0 * (lam - 1.0) * m / omega - 1.0
    roots = np.roots([1.0, a, b, m])
    roots = np.sort(roots[np.abs(roots.imag) < 1e-9 * (1.0 + np.abs(roots.real))].real)
    x_minus = roots[(roots > 0) & (roots < m)]
    x_plus = roots[roots > m]
    if x_minus.size == 0 or x_plus.size == 0:
        raise ParameterError(f"GIG bounding box failed for lam={lam}, omega={omega}")
    lg_m = _log_kernel(np.array(m), lam, omega)
    xm, xp = float(x_minus[0]), float(x_plus[-1])
    v_minus = (xm - m) * math.exp(0.5 * (float(_log_kernel(np.array(xm), lam, omega)) - lg_m))
    v_plus = (xp - m) * math.exp(0.5 * (float(_log_kernel(np.array(xp), lam, omega)) - lg_m))
    return m, lg_m, v_minus, v_plus


def _sample_rou_shift(n, lam, omega, rng):
    # kernel is rescaled by g(m) so that u ranges over (0, 1]
    m, lg_m, v_minus, v_plus = _rou_shift_bounds(lam, omega)
    out = np.empty(0)
    while out.size < n:
        k = max(2 * (n - out.size), 64)
        u = rng.uniform(size=k)
        v = v_minus + (v_plus - v_minus) * rng.uniform(size=k)
        x = v / u + m
        ok = x > 0
        x, u = x[ok], u[ok]
        accept = 2.0 * np.log(u) <= _log_kernel(x, lam, omega) - lg_m
        out = np.concatenate([out, x[accept]])
    return out[:n]


def _sample_rou_noshift(n, lam, omega, rng):
    m = _mode(lam, omega)
    lg_m = float(_log_kernel(np.array(m), lam, omega))
    x_max = ((lam + 1.0) + math.hypot(lam + 1.0, omega)) / omega
    v_plus = x_max * math.exp(0.5 * (float(_log_kernel(np.array(x_max), lam, omega)) - lg_m))
    out = np.empty(0)
    while out.size < n:
        k = max(2 * (n - out.size), 64)
        u = rng.uniform(size=k)
        v = v_plus * rng.uniform(size=k)
        x = v / u
        ok = x > 0
        x, u = x[ok], u[ok]
        accept = 2.0 * np.log(u) <= _log_kernel(x, lam, omega) - lg_m
        out = np.concatenate([out, x[accept]])
    return out[:n]


def _sample_concave_corner(n, lam, omega, rng):
    """Piecewise hat for 0 <= lam < 1 and small omega."""
    m = _mode(lam, omega)
    x0 = omega / (1.0 - lam)
    xs = max(x0, 2.0 / omega)
    k1 = math.exp(float(_log_kernel(np.array(m), lam, omega)))
    a1 = k1 * x0
    if x0 < 2.0 / omega:
        k2 = math.exp(-omega)
        if lam > 0:
            a2 = k2 * ((2.0 / omega) ** lam - x0**lam) / lam
        else:
            a2 = k2 * math.log(2.0 / omega**2)
    else:
        k2, a2 = 0.0, 0.0
    k3 = xs ** (lam - 1.0)
    a3 = 2.0 * k3 * math.exp(-xs * omega / 2.0) / omega
    total = a1 + a2 + a3

    out = np.empty(0)
    while out.size < n:
        k = max(2 * (n - out.size), 64)
        u = rng.uniform(size=k)
        v = total * rng.uniform(size=k)
        x = np.empty(k)
        h = np.empty(k)

        seg1 = v <= a1
        x[seg1] = x0 * v[seg1] / a1
        h[seg1] = k1

        seg2 = (~seg1) & (v <= a1 + a2)
        if seg2.any():
            vv = v[seg2] - a1
            if lam > 0:
                x[seg2] = (x0**lam + vv * lam / k2) ** (1.0 / lam)
            else:
                x[seg2] = omega * np.exp(vv * math.exp(omega))
            h[seg2] = k2 * x[seg2] ** (lam - 1.0)

        seg3 = ~(seg1 | seg2)
        if seg3.any():
            vv = v[seg3] - (a1 + a2)
            x[seg3] = -2.0 / omega * np.log(math.exp(-xs * omega / 2.0) - vv * omega / (2.0 * k3))
            h[seg3] = k3 * np.exp(-x[seg3] * omega / 2.0)

        ok = x > 0
        accept = ok.copy()
        accept[ok] = np.log(u[ok] * h[ok]) <= _log_kernel(x[ok], lam, omega)
        out = np.concatenate([out, x[accept]])
    return out[:n]


def _sample_standard(n: int, lam: float, omega: float, rng) -> np.ndarray:
    """Draws from the two-parameter GIG(lam, omega) with lam >= 0."""
    if lam > 1.0 or omega > 1.0:
        return _sample_rou_shift(n, lam, omega, rng)
    if omega >= min(0.5, 2.0 / 3.0 * math.sqrt(1.0 - lam)):
        return _sample_rou_noshift(n, lam, omega, rng)
    return _sample_concave_corner(n, lam, omega, rng)


def sample_gig(lam: float, chi: float, psi: float, rng: np.random.Generator, size=None):
    """Draw GIG(lam, chi, psi) variates.

    Parameters
    ----------
    lam : float
        Index parameter, any real value.
    chi, psi : float
        Strictly positive scale parameters.
    rng : numpy.random.Generator
    size : int, optional
        Number of draws. ``None`` returns a single float.

    Returns
    -------
    float or ndarray
        Strictly positive draws.
    """
    if not (chi > 0 and psi > 0) or not all(map(math.isfinite, (lam, chi, psi))):
        raise ParameterError(f"GIG requires finite lam and chi, psi > 0; got chi={chi}, psi={psi}")
    n = 1 if size is None else int(size)
    if n < 0:
        raise ParameterError("size must be non-negative")
    omega = math.sqrt(chi * psi)
    scale = math.sqrt(chi / psi)
    if n == 0:
        return np.empty(0)
    x = _sample_standard(n, abs(lam), omega, rng)
    if lam < 0:
        x = 1.0 / x
    x = scale * x
    return float(x[0]) if size is None else x


def gig_mean(lam: float, chi: float, psi: float) -> float:
    """E[w] for w ~ GIG(lam, chi, psi), via scaled Bessel functions."""
    from scipy.special import kve

    omega = math.sqrt(chi * psi)
    return math.sqrt(chi / psi) * kve(lam + 1.0, omega) / kve(lam, omega)
