"""Special functions used by the well solver and the propagator kernel.

Two evaluators live here:

* ``pcf_d`` -- the parabolic cylinder function D_nu(z) (Whittaker form,
  D_nu(z) = U(-nu - 1/2, z)) and its derivative.  For z >= 0 the decaying
  solution of Weber's equation is started from its large-z asymptotic
  expansion and carried inward with local Taylor series, which is the stable
  direction.  Values are tabulated on a node grid once per order and then
  interpolated by a short Taylor step from the nearest node.
* ``bessel_jn`` -- integer-order Bessel functions of the first kind by
  Miller's downward recurrence, normalised with J_0 + 2 sum J_2k = 1.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import rgamma

__all__ = [
    "pcf_origin",
    "pcf_d",
    "bessel_jn",
    "bessel_j",
    "bessel_tail_bound",
    "BESSEL_MAX_ARG",
    "BESSEL_MAX_ORDER",
]

_NODE_STEP = 0.25
_MAX_TAYLOR_TERMS = 120
_NEG_LIMIT = 38.0

BESSEL_MAX_ARG = 50.0
BESSEL_MAX_ORDER = 200


def pcf_origin(nu: float) -> tuple[float, float]:
    """Exact D_nu(0) and D'_nu(0).

    Both are entire in nu when written with the reciprocal gamma function, so
    they stay finite through the integer orders where one of them vanishes.
    """
    sp = math.sqrt(math.pi)
    d0 = 2.0 ** (0.5 * nu) * sp * float(rgamma(0.5 * (1.0 - nu)))
    d1 = -(2.0 ** (0.5 * (nu + 1.0))) * sp * float(rgamma(-0.5 * nu))
    return d0, d1


def _asymptotic(nu: float, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # D_nu(z) ~ exp(-z^2/4) z^nu sum_s (-1)^s (-nu)_{2s} / (s! (2 z^2)^s)
    z = np.asarray(z, dtype=float)
    inv = 1.0 / (2.0 * z * z)
    term = np.ones_like(z)
    total = np.ones_like(z)
    dtotal = (nu / z - 0.5 * z) * term
    prev = np.full_like(z, np.inf)
    for s in range(400):
        ratio = -(-nu + 2 * s) * (-nu + 2 * s + 1) * inv / (s + 1)
        term = term * ratio
        p = nu - 2 * (s + 1)
        total = total + term
        dtotal = dtotal + term * (p / z - 0.5 * z)
        mag = np.abs(term)
        if np.all(mag <= 1e-17 * np.abs(total)):
            break
        if np.any(mag > prev):
            raise ArithmeticError(
                f"asymptotic series for D_{nu} diverges before converging at z={z.min():.3g}"
            )
        prev = mag
    env = np.exp(-0.25 * z * z) * z**nu
    return env * total, env * dtotal


def _taylor(nu: float, z0, y0, dy0, h) -> tuple[np.ndarray, np.ndarray]:
    """Advance y'' = (z^2/4 - nu - 1/2) y from z0 by h (arrays broadcast)."""
    z0 = np.asarray(z0, dtype=float)
    h = np.asarray(h, dtype=float)
    p = 0.25 * z0 * z0 - nu - 0.5
    c_m2 = np.zeros(np.broadcast(z0, h).shape)
    c_m1 = np.zeros_like(c_m2)
    c0 = np.broadcast_to(np.asarray(y0, dtype=float), c_m2.shape).copy()
    c1 = np.broadcast_to(np.asarray(dy0, dtype=float), c_m2.shape).copy()
    y = c0 + c1 * h
    dy = c1.copy()
    # coefficients c_n for n = 0, 1 are known; build c_{n+2} from c_n, c_{n-1}, c_{n-2}
    cs = [c_m2, c_m1, c0, c1]
    hp = h.copy() * np.ones_like(c_m2)  # h**1
    quiet = 0
    for n in range(0, _MAX_TAYLOR_TERMS):
        cn, cn1, cn2 = cs[-2], cs[-3], cs[-4]
        c_next = (p * cn + 0.5 * z0 * cn1 + 0.25 * cn2) / ((n + 2) * (n + 1))
        cs.append(c_next)
        cs.pop(0)
        dy_term = (n + 2) * c_next * hp  # d/dh of c h^(n+2)
        hp = hp * h
        y_term = c_next * hp
        y = y + y_term
        dy = dy + dy_term
        scale = np.abs(y) + np.abs(dy) + 1e-300
        if np.all((np.abs(y_term) + np.abs(dy_term)) <= 1e-18 * scale):
            quiet += 1
            if quiet >= 3:
                break
        else:
            quiet = 0
    return y, dy


@lru_cache(maxsize=512)
def _positive_table(nu: float) -> tuple[float, np.ndarray, np.ndarray]:
    top = _NODE_STEP * math.ceil(max(12.0, 2.0 * math.sqrt(abs(nu) + 1.0) + 8.0) / _NODE_STEP)
    n_nodes = int(round(top / _NODE_STEP)) + 1
    ys = np.empty(n_nodes)
    dys = np.empty(n_nodes)
    y, dy = _asymptotic(nu, np.array([top]))
    ys[-1], dys[-1] = y[0], dy[0]
    for j in range(n_nodes - 1, 0, -1):
        y, dy = _taylor(nu, j * _NODE_STEP, ys[j], dys[j], -_NODE_STEP)
        ys[j - 1], dys[j - 1] = float(y), float(dy)
    ys.setflags(write=False)
    dys.setflags(write=False)
    return top, ys, dys


@lru_cache(maxsize=512)
def _negative_table(nu: float) -> tuple[np.ndarray, np.ndarray]:
    n_nodes = int(math.ceil(_NEG_LIMIT / _NODE_STEP)) + 1
    ys = np.empty(n_nodes)
    dys = np.empty(n_nodes)
    ys[0], dys[0] = pcf_origin(nu)
    for j in range(1, n_nodes):
        y, dy = _taylor(nu, -(j - 1) * _NODE_STEP, ys[j - 1], dys[j - 1], -_NODE_STEP)
        ys[j], dys[j] = float(y), float(dy)
    ys.setflags(write=False)
    dys.setflags(write=False)
    return ys, dys


def pcf_d(nu: float, z, derivative: bool = False):
    """Parabolic cylinder function D_nu(z), optionally with dD_nu/dz.

    Relative accuracy is ~1e-13 against the local envelope for z >= 0.  For
    z < 0 (the growing side unless nu is a non-negative integer) values are
    obtained by outward Taylor stepping from the exact origin data and are
    accurate relative to the growing envelope; |z| > 38 raises ValueError
    because the result would leave the double range for moderate orders.
    """
    nu = float(nu)
    z_arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z_arr)):
        raise ValueError("pcf_d requires finite arguments")
    flat = np.atleast_1d(z_arr).ravel()
    val = np.empty_like(flat)
    der = np.empty_like(flat)

    pos = flat >= 0.0
    if np.any(pos):
        top, ys, dys = _positive_table(nu)
        zp = flat[pos]
        far = zp > top
        v = np.empty_like(zp)
        d = np.empty_like(zp)
        if np.any(far):
            v[far], d[far] = _asymptotic(nu, zp[far])
        near = ~far
        if np.any(near):
            j = np.rint(zp[near] / _NODE_STEP).astype(int)
            v[near], d[near] = _taylor(nu, j * _NODE_STEP, ys[j], dys[j], zp[near] - j * _NODE_STEP)
        val[pos], der[pos] = v, d

    neg = ~pos
    if np.any(neg):
        zn = flat[neg]
        if np.any(zn < -_NEG_LIMIT):
            raise ValueError(f"pcf_d: z < -{_NEG_LIMIT} is outside the supported range")
        if nu >= 0 and nu == int(nu):
            # Hermite-function orders have definite parity.
            sign = -1.0 if int(nu) % 2 else 1.0
            v, d = pcf_d(nu, -zn, derivative=True)
            val[neg], der[neg] = sign * v, -sign * d
        else:
            ys, dys = _negative_table(nu)
            j = np.rint(-zn / _NODE_STEP).astype(int)
            val[neg], der[neg] = _taylor(nu, -j * _NODE_STEP, ys[j], dys[j], zn + j * _NODE_STEP)

    shape = z_arr.shape
    out_v = val.reshape(shape) if shape else float(val[0])
    if not derivative:
        return out_v
    out_d = der.reshape(shape) if shape else float(der[0])
    return out_v, out_d


def bessel_jn(n_max: int, alpha) -> np.ndarray:
    """J_0(alpha) ... J_{n_max}(alpha) by normalised downward recurrence.

    Returns an array of shape ``alpha.shape + (n_max + 1,)``.  Orders whose
    value falls below the double range come back as zero.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    if n_max > BESSEL_MAX_ORDER:
        raise ValueError(f"order {n_max} exceeds validated range n <= {BESSEL_MAX_ORDER}")
    a = np.asarray(alpha, dtype=float)
    if np.any(~np.isfinite(a)) or np.any(np.abs(a) > BESSEL_MAX_ARG):
        raise ValueError(f"bessel_jn validated only for |alpha| <= {BESSEL_MAX_ARG}")
    flat = np.atleast_1d(a).ravel()
    x = np.abs(flat)
    out = np.zeros((flat.size, n_max + 1))

    tiny = x < 1e-8
    if np.any(tiny):
        half = 0.5 * x[tiny]
        for n in range(n_max + 1):
            lead = half**n / math.factorial(n) if n < 170 else np.zeros_like(half)
            out[tiny, n] = lead * (1.0 - half * half / (n + 1))
    live = ~tiny
    if np.any(live):
        xl = x[live]
        top = max(n_max, int(math.ceil(xl.max())))
        start = 2 * ((top + int(math.sqrt(60.0 * top)) + 30) // 2)
        res = np.zeros((xl.size, n_max + 1))
        j_next = np.zeros_like(xl)
        j_cur = np.full_like(xl, 1e-300)
        norm = np.zeros_like(xl)
        for k in range(start, 0, -1):
            # j_cur holds J_k (unnormalised); produce J_{k-1}
            if k <= n_max:
                res[:, k] = j_cur
            if k % 2 == 0:
                norm += 2.0 * j_cur
            j_prev = (2.0 * k / xl) * j_cur - j_next
            j_next, j_cur = j_cur, j_prev
            big = np.abs(j_cur) > 1e250
            if np.any(big):
                res[big] *= 1e-250
                j_next[big] *= 1e-250
                j_cur[big] *= 1e-250
                norm[big] *= 1e-250
        res[:, 0] = j_cur
        norm += j_cur
        res /= norm[:, None]
        out[live] = res

    neg = flat < 0
    if np.any(neg):
        out[np.ix_(neg, np.arange(1, n_max + 1, 2))] *= -1.0
    return out.reshape(a.shape + (n_max + 1,))


def bessel_j(n: int, alpha):
    """Single-order J_n(alpha); see :func:`bessel_jn`."""
    if n < 0:
        raise ValueError("bessel_j takes non-negative orders")
    res = bessel_jn(n, alpha)[..., n]
    return float(res) if np.ndim(res) == 0 else res


def bessel_tail_bound(n: int, alpha) -> np.ndarray:
    """Upper bound |J_n(alpha)| <= (|alpha|/2)^n / n!."""
    a = np.abs(np.asarray(alpha, dtype=float))
    with np.errstate(divide="ignore"):
        logb = n * np.log(0.5 * a) - math.lgamma(n + 1)
    return np.where(a == 0.0, 1.0 if n == 0 else 0.0, np.exp(logb))
