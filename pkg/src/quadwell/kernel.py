"""The scalar oscillatory integral behind every propagator entry.

    I(xi, xi0 | alpha) = int_{xi0}^{xi} exp(i alpha sin z) dz

is available three ways: direct adaptive quadrature (the reference), the
power series in alpha built from the trigonometric polynomials eta_m and
phi_m, and the Bessel/Fourier series.  Both series evaluate the
single-argument antiderivative I(xi | alpha); the interval value is the
difference I(xi | alpha) - I(xi0 | alpha).

Normalisation: integrating the Jacobi-Anger expansion term by term gives

    I(xi | alpha) = J_0(alpha) xi + 2 E(xi | alpha) - 2 i P(xi | alpha)

with E = sum_k J_{2k+2} sin((2k+2) xi) / (2k+2) and
P = sum_k J_{2k+1} cos((2k+1) xi) / (2k+1), and in the same way the power
series carries a factor 2 in front of the eta_m and phi_m sums.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate
from scipy.special import comb

from .errors import ConfigError, NumericalError
from .special import bessel_jn, bessel_tail_bound

__all__ = [
    "ROUTES",
    "eta",
    "phi_odd",
    "even_series",
    "odd_series",
    "i_quadrature",
    "i_power",
    "i_fourier",
    "i_single",
    "i_interval",
    "default_k_max",
    "fourier_order_for",
    "power_order_for",
]

ROUTES = ("power", "fourier")


def eta(m: int, xi):
    """Even kernel polynomial eta_m(xi)."""
    xi = np.asarray(xi, dtype=float)
    p = 2 * (m + 1)
    total = np.zeros_like(xi)
    for s in range(m + 1):
        f = p - 2 * s
        total = total + (-1) ** s * comb(p, s, exact=True) * np.sin(f * xi) / f
    return total / math.factorial(p)


def phi_odd(m: int, xi):
    """Odd kernel polynomial phi_m(xi), harmonics cos((2(m-s)+1) xi)."""
    xi = np.asarray(xi, dtype=float)
    p = 2 * m + 1
    total = np.zeros_like(xi)
    for s in range(m + 1):
        f = 2 * (m - s) + 1
        total = total + (-1) ** s * comb(p, s, exact=True) * np.cos(f * xi) / f
    return total / math.factorial(p)


def default_k_max(alpha) -> int:
    """max(25, ceil(|alpha|) + 20) over all entries of ``alpha``."""
    a = float(np.max(np.abs(alpha))) if np.size(alpha) else 0.0
    return max(25, int(math.ceil(a)) + 20)


def fourier_order_for(alpha, tol: float = 1e-15) -> int:
    """Smallest k_max whose neglected Bessel terms are bounded by ``tol``.

    The tail after index k_max starts at order n = 2 k_max + 3; the bound
    uses |J_n| <= (|alpha|/2)^n / n! summed geometrically.
    """
    a = float(np.max(np.abs(alpha))) if np.size(alpha) else 0.0
    if a == 0.0:
        return 1
    for k in range(1, 200):
        n = 2 * k + 3
        if n <= a:
            continue
        lead = float(bessel_tail_bound(n, a))
        tail = 2.0 * lead / (1.0 - a / (2.0 * (n + 1)))
        if tail <= tol:
            return k
    raise ConfigError(f"no Fourier truncation reaches {tol:g} for |alpha|={a}")


def power_order_for(alpha, xi_span: float = 1.0, tol: float = 1e-13) -> int:
    """Smallest m_max for the power route from the factorial bound.

    The neglected terms are bounded by sum_{n > 2 m_max + 2} |alpha|^n / n!;
    ``xi_span`` is ignored (each eta_m, phi_m is bounded uniformly in xi).
    """
    a = float(np.max(np.abs(alpha))) if np.size(alpha) else 0.0
    if a == 0.0:
        return 0
    for m in range(0, 400):
        n = 2 * m + 3
        if n <= a:
            continue
        lead = math.exp(n * math.log(a) - math.lgamma(n + 1))
        if 2.0 * lead / (1.0 - a / (n + 1)) <= tol:
            return m
    raise ConfigError(f"no power-series truncation reaches {tol:g} for |alpha|={a}")


def i_quadrature(xi: float, xi0: float, alpha: float, *, epsabs: float = 1e-12) -> complex:
    """Reference value of I(xi, xi0 | alpha) by adaptive QUADPACK quadrature.

    The interval is cut into pieces no longer than pi/2, and each piece's
    error estimate must fit within ``epsabs / pieces`` (or sit at the rounding
    floor of the rule).
    """
    if xi == xi0:
        return 0.0 + 0.0j
    if alpha == 0.0:
        return complex(xi - xi0)
    span = abs(xi - xi0)
    pieces = max(1, int(math.ceil(span / (math.pi / 2))))
    edges = np.linspace(xi0, xi, pieces + 1)
    budget = epsabs / pieces
    re = im = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        for part, fn in ((0, math.cos), (1, math.sin)):
            res = integrate.quad(lambda z: fn(alpha * math.sin(z)), a, b, epsabs=1e-3 * budget,
                                 epsrel=1e-15, limit=200, full_output=1)
            val, err = res[0], res[1]
            # QUADPACK's estimate never drops below ~50 eps * int|f|
            if err > max(budget, 100.0 * np.finfo(float).eps * abs(b - a)):
                raise NumericalError(f"kernel quadrature error estimate {err:.2e} exceeds {budget:.2e} "
                                     f"for alpha={alpha} on [{a:.4g}, {b:.4g}]")
            if part:
                im += val
            else:
                re += val
    return complex(re, im)


def even_series(xi, alpha, k_max: int):
    """E(xi | alpha) = sum_{k=0}^{k_max} J_{2k+2}(alpha) sin((2k+2) xi) / (2k+2)."""
    a = np.asarray(alpha, dtype=float)
    J = bessel_jn(2 * k_max + 2, a)
    n = np.arange(2, 2 * k_max + 3, 2)
    return np.sum(J[..., n] * np.sin(np.multiply.outer(xi, n)) / n, axis=-1)


def odd_series(xi, alpha, k_max: int):
    """P(xi | alpha) = sum_{k=0}^{k_max} J_{2k+1}(alpha) cos((2k+1) xi) / (2k+1)."""
    a = np.asarray(alpha, dtype=float)
    J = bessel_jn(2 * k_max + 1, a)
    n = np.arange(1, 2 * k_max + 2, 2)
    return np.sum(J[..., n] * np.cos(np.multiply.outer(xi, n)) / n, axis=-1)


def i_fourier(xi: float, alpha, k_max: int | None = None):
    """Single-argument I(xi | alpha) from the Bessel/Fourier series.

    ``alpha`` may be an array; the result has its shape.
    """
    a = np.asarray(alpha, dtype=float)
    if k_max is None:
        k_max = max(default_k_max(a), fourier_order_for(a))
    if k_max < 1:
        raise ConfigError("k_max must be >= 1")
    J0 = bessel_jn(0, a)[..., 0]
    val = J0 * xi + 2.0 * even_series(xi, a, k_max) - 2.0j * odd_series(xi, a, k_max)
    return complex(val) if val.ndim == 0 else val


def i_power(xi: float, alpha, m_max: int | None = None):
    """Single-argument I(xi | alpha) from the power series in alpha."""
    a = np.asarray(alpha, dtype=float)
    if m_max is None:
        m_max = power_order_for(a)
    if m_max < 0:
        raise ConfigError("m_max must be >= 0")
    half = 0.5 * a
    J0 = bessel_jn(0, a)[..., 0]
    even = np.zeros(a.shape)
    odd = np.zeros(a.shape)
    for m in range(m_max + 1):
        even = even + half ** (2 * m + 2) * float(eta(m, xi))
        odd = odd + half ** (2 * m + 1) * float(phi_odd(m, xi))
    val = J0 * xi + 2.0 * even - 2.0j * odd
    return complex(val) if val.ndim == 0 else val


def i_single(xi: float, alpha, route: str = "fourier", truncation: int | None = None):
    if route == "fourier":
        return i_fourier(xi, alpha, truncation)
    if route == "power":
        return i_power(xi, alpha, truncation)
    raise ConfigError(f"unknown kernel route {route!r}; expected one of {ROUTES}")


def i_interval(xi: float, xi0: float, alpha, route: str = "fourier", truncation: int | None = None):
    """I(xi, xi0 | alpha) = I(xi | alpha) - I(xi0 | alpha)."""
    if route not in ROUTES:
        raise ConfigError(f"unknown kernel route {route!r}; expected one of {ROUTES}")
    if truncation is None:
        a = np.asarray(alpha, dtype=float)
        truncation = (max(default_k_max(a), fourier_order_for(a)) if route == "fourier"
                      else power_order_for(a))
    return i_single(xi, alpha, route, truncation) - i_single(xi0, alpha, route, truncation)
