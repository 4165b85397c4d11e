"""Stationary states of the composite quadratic well.

The potential is k1 x^2 / 2 for x >= 0 and k2 x^2 / 2 for x <= 0.  On each
half-line the bound solution is a parabolic cylinder function,

    x >= 0:  psi = A_R D_{nu_R}( sqrt(2 w_R) x ),   nu_R = eps / w_R - 1/2
    x <= 0:  psi = A_L D_{nu_L}(-sqrt(2 w_L) x ),   nu_L = eps / w_L - 1/2

and the levels are the energies at which both pieces join smoothly at the
origin.  All internal work is done with hbar = m = 1, lengths in units of
``ell`` and energies in units of hbar * sqrt(w1 * w2); in those units
w_R = (k1/k2)**(1/4) and w_L = 1 / w_R.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import ConfigError, ConvergenceError
from .quadrature import gauss_kronrod
from .special import pcf_d, pcf_origin

__all__ = [
    "WellParams",
    "EigenState",
    "EigenBasis",
    "solve_levels",
    "eval_psi",
    "eval_pcf",
    "matching_function",
    "MATCH_THRESHOLD",
]

#: Relative matching residual accepted at x = 0 after root refinement.
MATCH_THRESHOLD = 1e-9

_MAX_BRACKET_STEPS = 100_000


@dataclass(frozen=True)
class WellParams:
    """Physical constants of the unperturbed Hamiltonian."""

    m: float = 1.0
    k1: float = 1.0
    k2: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("m", "k1", "k2", "hbar"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(f"well.{name} must be a positive finite number, got {value!r}")

    @property
    def omega1(self) -> float:
        return math.sqrt(self.k1 / self.m)

    @property
    def omega2(self) -> float:
        return math.sqrt(self.k2 / self.m)

    @property
    def kappa(self) -> float:
        return math.sqrt(self.k1 * self.k2)

    @property
    def ell(self) -> float:
        return math.sqrt(self.hbar / math.sqrt(self.m * self.kappa))

    @property
    def omega_unit(self) -> float:
        """Geometric-mean frequency sqrt(omega1 * omega2)."""
        return math.sqrt(self.kappa / self.m)

    @property
    def energy_unit(self) -> float:
        return self.hbar * self.omega_unit

    @property
    def natural_freqs(self) -> tuple[float, float]:
        """(right, left) oscillator frequencies in units of ``omega_unit``."""
        r = (self.k1 / self.k2) ** 0.25
        return r, 1.0 / r

    def mirrored(self) -> "WellParams":
        return WellParams(m=self.m, k1=self.k2, k2=self.k1, hbar=self.hbar)

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.where(x >= 0, self.k1, self.k2) * x * x


@dataclass(frozen=True)
class EigenState:
    index: int
    energy: float
    omega: float
    nu_right: float
    nu_left: float
    amp_right: float
    amp_left: float
    norm: float
    match_residual: float = 0.0


@dataclass(frozen=True)
class EigenBasis:
    params: WellParams
    states: tuple[EigenState, ...]
    _scales: tuple[float, float] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        wr, wl = self.params.natural_freqs
        object.__setattr__(self, "_scales", (math.sqrt(2.0 * wr), math.sqrt(2.0 * wl)))

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.energy for s in self.states])

    @property
    def omegas(self) -> np.ndarray:
        return np.array([s.omega for s in self.states])

    def _state(self, k: int) -> EigenState:
        if not (0 <= k < self.n_states):
            raise IndexError(f"state index {k} outside 0..{self.n_states - 1}")
        return self.states[k]

    def psi_natural(self, k: int, s, derivative: bool = False):
        """psi_k at s = x / ell, normalised so that the integral over s is one."""
        st = self._state(k)
        s = np.asarray(s, dtype=float)
        cr, cl = self._scales
        right = s >= 0
        val = np.empty(s.shape)
        der = np.empty(s.shape)
        if np.any(right):
            v, d = pcf_d(st.nu_right, cr * s[right], derivative=True)
            val[right] = st.norm * st.amp_right * v
            der[right] = st.norm * st.amp_right * cr * d
        if np.any(~right):
            v, d = pcf_d(st.nu_left, -cl * s[~right], derivative=True)
            val[~right] = st.norm * st.amp_left * v
            der[~right] = -st.norm * st.amp_left * cl * d
        if val.ndim == 0:
            val, der = float(val), float(der)
        return (val, der) if derivative else val

    def psi_sides(self, k: int, derivative: bool = False):
        """Values (and slopes) of the right and left pieces at the origin, natural units."""
        st = self._state(k)
        cr, cl = self._scales
        a, ap = pcf_origin(st.nu_right)
        b, bp = pcf_origin(st.nu_left)
        f = st.norm
        plus = (f * st.amp_right * a, f * st.amp_right * cr * ap)
        minus = (f * st.amp_left * b, -f * st.amp_left * cl * bp)
        return plus, minus

    def psi(self, k: int, x):
        """Normalised psi_k(x) in physical units."""
        ell = self.params.ell
        return self.psi_natural(k, np.asarray(x, dtype=float) / ell) / math.sqrt(ell)

    def turning_point(self, k: int) -> tuple[float, float]:
        """Classical turning points (left, right) of level k, in units of ell."""
        eps = self._state(k).energy / self.params.energy_unit
        wr, wl = self.params.natural_freqs
        return -math.sqrt(2.0 * eps) / wl, math.sqrt(2.0 * eps) / wr


def eval_pcf(nu: float, z):
    """D_nu(z); thin alias of :func:`quadwell.special.pcf_d`."""
    return pcf_d(nu, z)


def eval_psi(basis: EigenBasis, k: int, x):
    return basis.psi(k, x)


def matching_function(params: WellParams, eps: float) -> float:
    """Wronskian of the two decaying half-line solutions at the origin.

    ``eps`` is in natural units.  The function is entire in ``eps`` and
    vanishes exactly at the bound-state energies, including states with a
    node at the origin, so no separate odd-state branch is needed.
    """
    wr, wl = params.natural_freqs
    a, ap = pcf_origin(eps / wr - 0.5)
    b, bp = pcf_origin(eps / wl - 0.5)
    return math.sqrt(wr) * ap * b + math.sqrt(wl) * a * bp


def _half_line_norm(nu: float) -> float:
    val, _ = gauss_kronrod(lambda z: pcf_d(nu, z) ** 2, 0.0, half_line_extent(nu), epsabs=0.0, epsrel=1e-13)
    return float(val)


def half_line_extent(nu: float) -> float:
    """Argument beyond which D_nu(z)^2 is below ~1e-40 of its peak."""
    return 2.0 * math.sqrt(abs(nu) + 1.0) + 14.0


def _build_state(params: WellParams, k: int, eps: float) -> EigenState:
    wr, wl = params.natural_freqs
    nu_r, nu_l = eps / wr - 0.5, eps / wl - 0.5
    cr, cl = math.sqrt(2.0 * wr), math.sqrt(2.0 * wl)
    a, ap = pcf_origin(nu_r)
    b, bp = pcf_origin(nu_l)
    # Continuity of psi fixes (A_R, A_L) ~ (b, a); continuity of psi' fixes
    # (A_R, A_L) ~ (cl b', -cr a').  Use whichever is better conditioned.
    v_val = np.array([b, a])
    v_der = np.array([cl * bp, -cr * ap]) / math.sqrt(cr * cl)
    amps = v_val if np.linalg.norm(v_val) >= np.linalg.norm(v_der) else v_der
    amps = amps / np.linalg.norm(amps)
    if amps[0] < 0:
        amps = -amps
    amp_r, amp_l = float(amps[0]), float(amps[1])
    weight = amp_r**2 * _half_line_norm(nu_r) / cr + amp_l**2 * _half_line_norm(nu_l) / cl
    norm = 1.0 / math.sqrt(weight)

    jump_val = abs(amp_r * a - amp_l * b)
    jump_der = abs(amp_r * cr * ap + amp_l * cl * bp)
    scale_val = abs(amp_r * a) + abs(amp_l * b)
    scale_der = abs(amp_r * cr * ap) + abs(amp_l * cl * bp)
    # value and slope jumps share one scale: either may vanish at a node.
    scale = max(scale_val * max(cr, cl), scale_der)
    residual = max(jump_val * max(cr, cl), jump_der) / scale
    if residual > MATCH_THRESHOLD:
        raise ConvergenceError(f"level {k}: matching residual {residual:.3e} exceeds {MATCH_THRESHOLD:g}")

    energy = eps * params.energy_unit
    return EigenState(
        index=k,
        energy=energy,
        omega=energy / params.hbar,
        nu_right=nu_r,
        nu_left=nu_l,
        amp_right=amp_r,
        amp_left=amp_l,
        norm=norm,
        match_residual=residual,
    )


def solve_levels(params: WellParams, n_states: int, tol: float = 1e-12) -> EigenBasis:
    """Lowest ``n_states`` levels of the composite well.

    The matching function is scanned upward from below the ground level in
    steps of min(w_R, w_L)/16 (level spacing is at least min(w_R, w_L)), and
    each sign change is refined with Brent's method to relative tolerance
    ``tol``.
    """
    if not isinstance(n_states, (int, np.integer)) or n_states < 1:
        raise ConfigError(f"n_states must be a positive integer, got {n_states!r}")
    if not (0.0 < tol <= 1e-3):
        raise ConfigError(f"tol must lie in (0, 1e-3], got {tol!r}")
    wr, wl = params.natural_freqs
    w_min, w_max = min(wr, wl), max(wr, wl)
    step = w_min / 16.0
    rtol = max(tol, 4.5e-16)

    def f(e):
        return matching_function(params, e)

    roots: list[float] = []
    lo = 0.5 * w_min * (1.0 - 1e-3)
    f_lo = f(lo)
    for _ in range(_MAX_BRACKET_STEPS):
        if len(roots) == n_states:
            break
        k = len(roots)
        if lo > w_max * (k + 0.5) + step:
            raise ConvergenceError(f"level {k}: no root bracketed below the interlacing bound {w_max * (k + 0.5):.6g}")
        hi = lo + step
        f_hi = f(hi)
        if f_lo == 0.0:
            roots.append(lo)
        elif f_lo * f_hi < 0.0:
            try:
                root, info = optimize.brentq(f, lo, hi, xtol=1e-300, rtol=rtol, maxiter=500, full_output=True)
            except RuntimeError as exc:
                raise ConvergenceError(f"level {k}: root refinement failed ({exc})") from None
            if not info.converged:
                raise ConvergenceError(f"level {k}: root refinement did not converge")
            roots.append(root)
        lo, f_lo = hi, f_hi
    else:
        raise ConvergenceError(f"level {len(roots)}: bracket scan exhausted")

    states = tuple(_build_state(params, k, e) for k, e in enumerate(roots))
    return EigenBasis(params=params, states=states)
