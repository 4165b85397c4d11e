"""Brute-force references that every derived number is checked against.

* :func:`grid_levels` -- three-point finite-difference diagonalisation of
  the stationary Hamiltonian, with Richardson extrapolation in h^2.
* :func:`reference_evolve_basis` -- classic RK4 in the phase variable for
  the driven equation in the energy basis, with a built-in step-doubling
  check.
* :func:`reference_evolve_grid` -- Crank-Nicolson for the full driven PDE on
  a grid with Dirichlet walls.
* :func:`pcf_series_mp` / :func:`bessel_series_mp` -- extended-precision
  power series for the special functions.

Everything here is deliberately independent of the production routes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded

from .errors import ConfigError, ConvergenceError, NumericalError
from .well import WellParams

__all__ = [
    "GridSpec",
    "GridLevels",
    "default_grid",
    "grid_levels",
    "grid_dipole",
    "reference_evolve_basis",
    "two_level_constant_field",
    "reference_evolve_grid",
    "pcf_series_mp",
    "bessel_series_mp",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid in units of ell; ``n_points`` includes the two walls."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not (self.x_min < 0.0 < self.x_max):
            raise ConfigError("grid must straddle the origin")
        if self.n_points < 16:
            raise ConfigError("grid needs at least 16 points")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    def nodes(self) -> np.ndarray:
        # snap so that x = 0 is a node (the potential's kink sits on the grid)
        h = self.h
        i0 = int(round(-self.x_min / h))
        return (np.arange(self.n_points) - i0) * h

    def refined(self) -> "GridSpec":
        return GridSpec(self.x_min, self.x_max, 2 * self.n_points - 1)


def default_grid(params: WellParams, n_states: int, n_points: int = 4001) -> GridSpec:
    """Grid wide enough that level ``n_states - 1`` has decayed to ~1e-12."""
    wr, wl = params.natural_freqs
    eps = max(wr, wl) * (n_states + 0.5)
    right = math.sqrt(2.0 * eps / wr**2 + 60.0 / wr)
    left = math.sqrt(2.0 * eps / wl**2 + 60.0 / wl)
    return GridSpec(-left, right, n_points)


def _natural_potential(params: WellParams, s: np.ndarray) -> np.ndarray:
    wr, wl = params.natural_freqs
    return 0.5 * np.where(s >= 0, wr * wr, wl * wl) * s * s


def _fd_levels(params: WellParams, grid: GridSpec, n_states: int):
    s = grid.nodes()
    h = s[1] - s[0]
    inner = s[1:-1]
    diag = 1.0 / h**2 + _natural_potential(params, inner)
    off = np.full(inner.size - 1, -0.5 / h**2)
    vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, n_states - 1))
    vecs = vecs / math.sqrt(h)
    for k in range(n_states):
        v = vecs[:, k]
        big = np.nonzero(np.abs(v) > 1e-3 * np.abs(v).max())[0][-1]
        if v[big] < 0:
            vecs[:, k] = -v
    return vals, inner, vecs


@dataclass(frozen=True)
class GridLevels:
    """Finite-difference levels; energies in physical units.

    ``x`` (units of ell) and ``vectors`` (columns normalised so that
    sum(v^2) * h = 1 in those units) come from the finer grid.
    """

    energies: np.ndarray
    energies_coarse: np.ndarray
    energies_fine: np.ndarray
    x: np.ndarray
    vectors: np.ndarray
    vectors_coarse: np.ndarray
    x_coarse: np.ndarray
    h: float

    @property
    def richardson_correction(self) -> np.ndarray:
        return self.energies - self.energies_fine


def grid_levels(params: WellParams, grid: GridSpec | None = None, n_states: int = 8) -> GridLevels:
    """Lowest levels of the three-point Hamiltonian on two grids, h and h/2.

    The extrapolated value is (4 E(h/2) - E(h)) / 3.
    """
    grid = grid or default_grid(params, n_states)
    vals_c, x_c, vec_c = _fd_levels(params, grid, n_states)
    vals_f, x_f, vec_f = _fd_levels(params, grid.refined(), n_states)
    unit = params.energy_unit
    extrap = (4.0 * vals_f - vals_c) / 3.0
    return GridLevels(
        energies=extrap * unit,
        energies_coarse=vals_c * unit,
        energies_fine=vals_f * unit,
        x=x_f,
        vectors=vec_f,
        vectors_coarse=vec_c,
        x_coarse=x_c,
        h=float(x_f[1] - x_f[0]),
    )


def grid_dipole(levels: GridLevels, n: int) -> np.ndarray:
    """Dipole matrix (units of ell) from grid eigenvectors, Richardson-extrapolated."""

    def one(x, vecs):
        h = x[1] - x[0]
        v = vecs[:, :n]
        return (v * x[:, None]).T @ v * h

    return (4.0 * one(levels.x, levels.vectors) - one(levels.x_coarse, levels.vectors_coarse)) / 3.0


def _rk4(omegas_ratio, X, beta, phi0, xi0, xi1, n_steps):
    """RK4 for i dphi/dxi = (diag(w_k/w) + beta cos(xi) X) phi; batched over leading axes."""
    d = 1j * np.asarray(omegas_ratio)  # (..., n)
    bX = 1j * np.asarray(beta)[..., None, None] * X  # (..., n, n)
    h = (xi1 - xi0) / n_steps
    y = np.array(phi0, dtype=complex)

    def rhs(xi, y):
        return -(d * y + math.cos(xi) * np.einsum("...ij,...j->...i", bX, y))

    xi = xi0
    for j in range(n_steps):
        xi = xi0 + j * h
        k1 = rhs(xi, y)
        k2 = rhs(xi + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(xi + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(xi + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def reference_evolve_basis(omegas_ratio, X, beta, phi_hat0, xi0: float, xi1: float, *,
                           dxi: float | None = None, doubling_tol: float = 1e-8,
                           norm_tol: float = 1e-9, max_refine: int = 6, samples=None):
    """Integrate the energy-basis equation of motion from xi0 to xi1.

    ``omegas_ratio`` holds w_k / w (level frequency over drive frequency) and
    ``X`` the dipole matrix in units of ell, so that beta = gamma ell /
    (hbar w) multiplies X directly.  Leading axes of ``omegas_ratio``,
    ``beta`` and ``phi_hat0`` are treated as a batch (used by frequency
    scans).  The step is halved until two successive step sizes agree to
    ``doubling_tol``; if that never happens, or the norm drifts more than
    ``norm_tol``, the result is refused.  The accepted pair is combined as
    fine + (fine - coarse) / 15, the standard Richardson step for a
    fourth-order scheme.

    If ``samples`` (an increasing array of phases in (xi0, xi1]) is given,
    the state at each sample is returned, stacked on a new axis -2.
    """
    omegas_ratio = np.asarray(omegas_ratio, dtype=float)
    X = np.asarray(X, dtype=float)
    beta = np.asarray(beta, dtype=float)
    phi0 = np.asarray(phi_hat0, dtype=complex)
    if xi1 == xi0:
        return phi0.copy() if samples is None else phi0[..., None, :].copy()
    scale = float(np.max(np.abs(omegas_ratio))) + float(np.max(np.abs(beta))) * float(np.abs(np.linalg.eigvalsh(X)).max())
    if dxi is None:
        dxi = 0.02 / max(scale, 1e-12)
    marks = np.array([xi1]) if samples is None else np.asarray(samples, dtype=float)
    if np.any(np.diff(np.concatenate([[xi0], marks])) <= 0):
        raise ConfigError("samples must increase strictly from xi0")

    def run(step):
        out = []
        y = phi0
        a = xi0
        for b in marks:
            n = max(1, int(math.ceil((b - a) / step)))
            y = _rk4(omegas_ratio, X, beta, y, a, b, n)
            out.append(y)
            a = b
        return np.stack(out, axis=-2)

    coarse = run(dxi)
    for _ in range(max_refine):
        dxi *= 0.5
        fine = run(dxi)
        if np.max(np.abs(fine - coarse)) < doubling_tol:
            break
        coarse = fine
    else:
        raise ConvergenceError(f"RK4 step doubling did not settle below {doubling_tol:g}")
    drift = np.max(np.abs(np.linalg.norm(fine, axis=-1) - np.linalg.norm(phi0, axis=-1)[..., None]))
    if drift > norm_tol:
        raise NumericalError(f"RK4 norm drift {drift:.2e} exceeds {norm_tol:g}")
    best = fine + (fine - coarse) / 15.0
    return best[..., -1, :] if samples is None else best


def two_level_constant_field(H: np.ndarray, phi0: np.ndarray, t: float) -> np.ndarray:
    """exp(-i H t) phi0 for a constant 2x2 Hermitian H, written out in closed form."""
    H = np.asarray(H, dtype=complex)
    a = 0.5 * (H[0, 0] + H[1, 1]).real
    bz = 0.5 * (H[0, 0] - H[1, 1]).real
    bx = H[0, 1].real
    by = -H[0, 1].imag
    w = math.sqrt(bx * bx + by * by + bz * bz)
    sigma = np.array([[bz, bx - 1j * by], [bx + 1j * by, -bz]])
    if w == 0.0:
        U = np.eye(2) * np.exp(-1j * a * t)
    else:
        U = np.exp(-1j * a * t) * (math.cos(w * t) * np.eye(2) - 1j * math.sin(w * t) * sigma / w)
    return U @ np.asarray(phi0, dtype=complex)


def _cn_run(diag0, x, coupling, omega, psi0, t0, t1, n_steps, h):
    """Crank-Nicolson with the drive evaluated at each step midpoint."""
    dt = (t1 - t0) / n_steps
    off = -0.5 / h**2
    y = psi0.astype(complex)
    ab = np.zeros((3, x.size), dtype=complex)
    for j in range(n_steps):
        tm = t0 + (j + 0.5) * dt
        dg = diag0 + coupling * math.cos(omega * tm) * x
        ab[0, 1:] = 0.5j * dt * off
        ab[1, :] = 1.0 + 0.5j * dt * dg
        ab[2, :-1] = 0.5j * dt * off
        rhs = (1.0 - 0.5j * dt * dg) * y
        rhs[1:] -= 0.5j * dt * off * y[:-1]
        rhs[:-1] -= 0.5j * dt * off * y[1:]
        y = solve_banded((1, 1), ab, rhs)
    return y


def reference_evolve_grid(params: WellParams, gamma: float, omega: float, x, psi0, t0: float, t1: float, *,
                          dt: float | None = None, doubling_tol: float = 1e-5, norm_tol: float = 1e-8,
                          max_refine: int = 6):
    """Crank-Nicolson solution of the driven PDE on the grid ``x`` (physical units).

    ``psi0`` lives on ``x``; the first and last nodes are walls where the
    wavefunction is held at zero.  ``gamma``, ``omega`` and times are in
    physical units.  The time step is halved until two runs agree to
    ``doubling_tol`` (max-norm relative to max|psi|); otherwise the result
    is refused.
    """
    x = np.asarray(x, dtype=float)
    ell, unit = params.ell, params.omega_unit
    s = x / ell
    h = s[1] - s[0]
    if not np.allclose(np.diff(s), h, rtol=1e-9, atol=0.0):
        raise ConfigError("reference_evolve_grid needs a uniform grid")
    inner = slice(1, -1)
    si = s[inner]
    diag0 = 1.0 / h**2 + _natural_potential(params, si)
    coupling = gamma * ell / (params.hbar * unit)
    w = omega / unit
    y0 = np.asarray(psi0, dtype=complex) * math.sqrt(ell)
    tau0, tau1 = t0 * unit, t1 * unit
    if dt is None:
        dt = 0.01
    dtau = dt * unit
    n = max(1, int(math.ceil((tau1 - tau0) / dtau)))
    coarse = _cn_run(diag0, si, coupling, w, y0[inner], tau0, tau1, n, h)
    peak = np.abs(y0).max()
    for _ in range(max_refine):
        n *= 2
        fine = _cn_run(diag0, si, coupling, w, y0[inner], tau0, tau1, n, h)
        if np.max(np.abs(fine - coarse)) < doubling_tol * peak:
            break
        coarse = fine
    else:
        raise ConvergenceError(f"Crank-Nicolson step doubling did not settle below {doubling_tol:g}")
    norm0 = np.sum(np.abs(y0[inner]) ** 2) * h
    drift = abs(np.sum(np.abs(fine) ** 2) * h - norm0)
    if drift > norm_tol:
        raise NumericalError(f"Crank-Nicolson norm drift {drift:.2e} exceeds {norm_tol:g}")
    out = np.zeros(x.size, dtype=complex)
    out[inner] = fine
    return out / math.sqrt(ell)


def pcf_series_mp(nu, z, dps: int = 50):
    """D_nu(z) from the even/odd power series about the origin at ``dps`` digits.

    Returns an ``mpmath.mpf``.  The series is summed twice, at ``dps`` and
    ``dps + 20`` digits, and a disagreement beyond 1e-(dps-15) raises, which
    guards against cancellation for larger |z|.
    """

    def at(prec):
        with mpmath.workdps(prec):
            nu_m, z_m = mpmath.mpf(nu), mpmath.mpf(z)
            d0 = 2 ** (nu_m / 2) * mpmath.sqrt(mpmath.pi) * mpmath.rgamma((1 - nu_m) / 2)
            d1 = -(2 ** ((nu_m + 1) / 2)) * mpmath.sqrt(mpmath.pi) * mpmath.rgamma(-nu_m / 2)
            a = -nu_m - mpmath.mpf(1) / 2
            # y'' = (z^2/4 + a) y  =>  (n+2)(n+1) c_{n+2} = a c_n + c_{n-2} / 4
            total = mpmath.mpf(0)
            for c0, c1 in ((d0, 0), (0, d1)):
                cs = [mpmath.mpf(c0), mpmath.mpf(c1)]
                n = 0
                while True:
                    prev2 = cs[n - 2] if n >= 2 else 0
                    cs.append((a * cs[n] + prev2 / 4) / ((n + 2) * (n + 1)))
                    n += 1
                    if n > 40 and abs(cs[-1] * z_m ** (n + 1)) < mpmath.mpf(10) ** (-prec) and abs(
                            cs[-2] * z_m ** n) < mpmath.mpf(10) ** (-prec):
                        break
                    if n > 5000:
                        raise ConvergenceError("pcf series did not converge")
                total += mpmath.fsum(c * z_m**i for i, c in enumerate(cs))
            return total

    lo, hi = at(dps), at(dps + 20)
    with mpmath.workdps(dps):
        if abs(lo - hi) > mpmath.mpf(10) ** (15 - dps) * max(1, abs(hi)):
            raise NumericalError("pcf series lost too many digits to cancellation")
        return +hi


def bessel_series_mp(n: int, alpha, dps: int = 40):
    """J_n(alpha) from its ascending series at ``dps`` digits."""
    with mpmath.workdps(dps + 10):
        x = mpmath.mpf(alpha) / 2
        term = x**n / mpmath.factorial(n)
        total = term
        k = 0
        while abs(term) > mpmath.mpf(10) ** (-(dps + 5)) * max(abs(total), mpmath.mpf(10) ** -300) or k < 5:
            k += 1
            term = -term * x * x / (k * (k + n))
            total += term
    with mpmath.workdps(dps):
        return +total
