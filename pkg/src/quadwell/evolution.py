"""Driven evolution in the phase-transformed dipole representation.

Working variables (all vectors indexed by dipole eigenvector):

    phi_hat(xi)  energy-basis amplitudes including the exp(-i w_k t) phases
    f(xi)        = V^T phi_hat
    q(xi)        = exp(+i beta sin(xi) Lambda) f

q obeys i dq/dxi = K(xi) q with K_lm = (Omega_lm / w) exp(i beta (lam_l - lam_m) sin xi).
The propagator used throughout is exp(-i U(xi, xi0)) with U the integral
of K, assembled entrywise from the kernel I(xi, xi0 | beta (lam_l - lam_m)).
That exponential is exact only when K commutes with itself at different
phases; :func:`evolve_product` composes it over short sub-intervals when
the single-shot error matters.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernel
from .dipole import DipoleDecomposition
from .errors import ConfigError, NumericalError
from .special import bessel_jn
from .well import EigenBasis, WellParams

__all__ = [
    "DriveConfig",
    "PropagatorTables",
    "UGenerator",
    "build_K",
    "build_U",
    "build_U_quadrature",
    "eigen_U",
    "evolve",
    "evolve_product",
    "undo_transforms",
    "apply_transforms",
    "prepare_initial",
    "propagate",
    "trajectory",
    "reconstruct_phi",
    "OBSERVABLES",
    "ScanResult",
    "resonance_scan",
    "reference_scan",
    "find_peaks",
]

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class DriveConfig:
    """Monochromatic drive gamma x cos(omega t).

    ``beta`` = gamma ell / (hbar omega) is stored alongside the physical
    inputs; build instances with :meth:`for_well` so it stays consistent.
    """

    gamma: float
    omega: float
    beta: float
    xi0: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise ConfigError(f"drive.omega must be positive, got {self.omega!r}")
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise ConfigError(f"drive.gamma must be non-negative, got {self.gamma!r}")
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ConfigError(f"drive.beta must be non-negative, got {self.beta!r}")
        if not math.isfinite(self.xi0):
            raise ConfigError("drive.xi0 must be finite")

    @classmethod
    def for_well(cls, params: WellParams, gamma: float, omega: float, xi0: float = 0.0) -> "DriveConfig":
        if not (math.isfinite(omega) and omega > 0):
            raise ConfigError(f"drive.omega must be positive, got {omega!r}")
        beta = gamma * params.ell / (params.hbar * omega)
        return cls(gamma=float(gamma), omega=float(omega), beta=float(beta), xi0=float(xi0))

    def with_omega(self, params: WellParams, omega: float) -> "DriveConfig":
        return DriveConfig.for_well(params, self.gamma, omega, self.xi0)


@dataclass(frozen=True)
class PropagatorTables:
    xi: float
    xi0: float
    U: np.ndarray
    mu: np.ndarray
    u: np.ndarray
    q: np.ndarray
    f: np.ndarray
    phi_hat: np.ndarray


def _alpha(dip: DipoleDecomposition, drive: DriveConfig) -> np.ndarray:
    return drive.beta * (dip.lam[:, None] - dip.lam[None, :])


def build_K(xi: float, dip: DipoleDecomposition, drive: DriveConfig) -> np.ndarray:
    """K(xi) entrywise: (Omega_lm / w) exp(i alpha_lm sin xi)."""
    return (dip.Omega / drive.omega) * np.exp(1j * _alpha(dip, drive) * math.sin(xi))


class UGenerator:
    """Single-argument matrix U(xi) = sum_lm (Omega_lm / w) I(xi | alpha_lm).

    The Bessel (or power) coefficients depend only on alpha, so they are
    computed once; U(xi, xi0) = U(xi) - U(xi0) then costs two cheap sums.
    """

    def __init__(self, dip: DipoleDecomposition, drive: DriveConfig, route: str = "fourier",
                 truncation: int | None = None):
        if route not in kernel.ROUTES:
            raise ConfigError(f"unknown kernel route {route!r}; expected one of {kernel.ROUTES}")
        self.route = route
        self.scale = dip.Omega / drive.omega
        a = _alpha(dip, drive)
        self.alpha = a
        if route == "fourier":
            k_max = truncation if truncation is not None else max(kernel.default_k_max(a), kernel.fourier_order_for(a))
            if k_max < 1:
                raise ConfigError("k_max must be >= 1")
            J = bessel_jn(2 * k_max + 2, a)
            self.truncation = k_max
            self._J0 = J[..., 0]
            self._even_n = np.arange(2, 2 * k_max + 3, 2)
            self._odd_n = np.arange(1, 2 * k_max + 2, 2)
            self._even_c = J[..., self._even_n] / self._even_n
            self._odd_c = J[..., self._odd_n] / self._odd_n
        else:
            m_max = truncation if truncation is not None else kernel.power_order_for(a)
            if m_max < 0:
                raise ConfigError("m_max must be >= 0")
            self.truncation = m_max
            self._J0 = bessel_jn(0, a)[..., 0]

    def single(self, xi: float) -> np.ndarray:
        if self.route == "fourier":
            even = self._even_c @ np.sin(self._even_n * xi)
            odd = self._odd_c @ np.cos(self._odd_n * xi)
            vals = self._J0 * xi + 2.0 * even - 2.0j * odd
        else:
            vals = kernel.i_power(xi, self.alpha, self.truncation)
        return self.scale * vals

    def interval(self, xi: float, xi0: float) -> np.ndarray:
        if xi == xi0:
            return np.zeros(self.scale.shape, dtype=complex)
        return self.single(xi) - self.single(xi0)


def build_U(xi: float, xi0: float, dip: DipoleDecomposition, drive: DriveConfig, route: str = "fourier",
            truncation: int | None = None) -> np.ndarray:
    """U(xi, xi0) assembled from the closed-form kernel."""
    return UGenerator(dip, drive, route, truncation).interval(xi, xi0)


def build_U_quadrature(xi: float, xi0: float, dip: DipoleDecomposition, drive: DriveConfig) -> np.ndarray:
    """U(xi, xi0) by direct quadrature of each K entry (reference path)."""
    a = _alpha(dip, drive)
    n = dip.n
    out = np.empty((n, n), dtype=complex)
    for l in range(n):
        for m in range(n):
            out[l, m] = kernel.i_quadrature(xi, xi0, float(a[l, m]))
    return (dip.Omega / drive.omega) * out


def eigen_U(U: np.ndarray, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Real ascending eigenvalues and orthonormal eigenvectors of Hermitian U.

    The largest-magnitude component of each eigenvector is made real and
    positive.  A zero matrix returns the identity columns.
    """
    U = np.asarray(U, dtype=complex)
    asym = float(np.max(np.abs(U - U.conj().T))) if U.size else 0.0
    if asym > tol * max(1.0, float(np.max(np.abs(U)))):
        raise NumericalError(f"propagator matrix is not Hermitian (max asymmetry {asym:.3e})")
    n = U.shape[0]
    if not np.any(U):
        return np.zeros(n), np.eye(n, dtype=complex)
    mu, u = np.linalg.eigh(0.5 * (U + U.conj().T))
    for j in range(n):
        col = u[:, j]
        mag = np.abs(col)
        i = int(np.argmax(mag > (1.0 - 1e-10) * mag.max()))
        u[:, j] = col * (np.conj(col[i]) / mag[i])
        u[i, j] = mag[i]
    return mu, u


def evolve(q0, U: np.ndarray) -> np.ndarray:
    """q = sum_l (u_l^dagger q0) exp(-i mu_l) u_l."""
    q0 = np.asarray(q0, dtype=complex)
    if q0.shape != (U.shape[0],):
        raise ConfigError(f"dimension mismatch: q0 {q0.shape} vs U {U.shape}")
    mu, u = eigen_U(U)
    return u @ (np.exp(-1j * mu) * (u.conj().T @ q0))


def _steps(xi0: float, xi1: float, max_step: float | None) -> np.ndarray:
    if max_step is None or xi1 == xi0:
        return np.array([xi0, xi1])
    n = max(1, int(math.ceil(abs(xi1 - xi0) / max_step - 1e-12)))
    return np.linspace(xi0, xi1, n + 1)


def evolve_product(q0, xi_edges, gen: UGenerator) -> np.ndarray:
    """Compose exp(-i U(xi_{j+1}, xi_j)) over consecutive ``xi_edges``."""
    q = np.asarray(q0, dtype=complex)
    edges = np.asarray(xi_edges, dtype=float)
    prev = gen.single(edges[0])
    for b in edges[1:]:
        cur = gen.single(b)
        q = evolve(q, cur - prev)
        prev = cur
    return q


def undo_transforms(q, xi: float, dip: DipoleDecomposition, drive: DriveConfig):
    """(f, phi_hat) from q: f = exp(-i beta sin(xi) Lambda) q, phi_hat = V f."""
    q = np.asarray(q, dtype=complex)
    f = np.exp(-1j * drive.beta * dip.lam * math.sin(xi)) * q
    return f, dip.V @ f


def apply_transforms(phi_hat, xi: float, dip: DipoleDecomposition, drive: DriveConfig):
    """Inverse of :func:`undo_transforms`: (f, q) from phi_hat."""
    f = dip.V.T @ np.asarray(phi_hat, dtype=complex)
    return f, np.exp(1j * drive.beta * dip.lam * math.sin(xi)) * f


def prepare_initial(dip: DipoleDecomposition, drive: DriveConfig, phi_hat0=None) -> np.ndarray:
    """q(xi0) for a prepared energy-basis state (default: the ground state)."""
    if phi_hat0 is None:
        phi_hat0 = np.zeros(dip.n)
        phi_hat0[0] = 1.0
    phi_hat0 = np.asarray(phi_hat0, dtype=complex)
    if phi_hat0.shape != (dip.n,):
        raise ConfigError(f"initial state has shape {phi_hat0.shape}, expected ({dip.n},)")
    return apply_transforms(phi_hat0, drive.xi0, dip, drive)[1]


def propagate(dip: DipoleDecomposition, drive: DriveConfig, xi: float, phi_hat0=None, *,
              route: str = "fourier", truncation: int | None = None) -> PropagatorTables:
    """Single-shot propagation from drive.xi0 to ``xi`` with every intermediate kept."""
    gen = UGenerator(dip, drive, route, truncation)
    U = gen.interval(xi, drive.xi0)
    mu, u = eigen_U(U)
    q0 = prepare_initial(dip, drive, phi_hat0)
    q = u @ (np.exp(-1j * mu) * (u.conj().T @ q0))
    f, phi_hat = undo_transforms(q, xi, dip, drive)
    return PropagatorTables(xi=xi, xi0=drive.xi0, U=U, mu=mu, u=u, q=q, f=f, phi_hat=phi_hat)


def trajectory(dip: DipoleDecomposition, drive: DriveConfig, xi_samples, phi_hat0=None, *,
               max_step: float | None = None, route: str = "fourier", truncation: int | None = None,
               gen: UGenerator | None = None) -> dict:
    """q and phi_hat at each sample phase.

    With ``max_step=None`` each sample uses the single-shot propagator from
    xi0.  Otherwise the samples are chained and every gap is split into
    sub-intervals no longer than ``max_step``.
    """
    gen = gen or UGenerator(dip, drive, route, truncation)
    xs = np.asarray(xi_samples, dtype=float)
    q0 = prepare_initial(dip, drive, phi_hat0)
    qs = np.empty((xs.size, dip.n), dtype=complex)
    if max_step is None:
        base = gen.single(drive.xi0)
        for j, x in enumerate(xs):
            qs[j] = q0 if x == drive.xi0 else evolve(q0, gen.single(x) - base)
    else:
        if np.any(np.diff(np.concatenate([[drive.xi0], xs])) < 0):
            raise ConfigError("product evolution needs non-decreasing samples starting at xi0")
        q, a = q0, drive.xi0
        for j, x in enumerate(xs):
            q = evolve_product(q, _steps(a, x, max_step), gen)
            qs[j] = q
            a = x
    phis = np.empty_like(qs)
    fs = np.empty_like(qs)
    for j, x in enumerate(xs):
        fs[j], phis[j] = undo_transforms(qs[j], x, dip, drive)
    return {"xi": xs, "q": qs, "f": fs, "phi_hat": phis}


def reconstruct_phi(x, phi_hat, basis: EigenBasis) -> np.ndarray:
    """Phi(x) = sum_m phi_hat_m psi_m(x) on a grid of physical positions.

    Pass ``phi_hat`` from :func:`undo_transforms`; the exp(-i w_k t) phases
    are already part of it.
    """
    phi_hat = np.asarray(phi_hat, dtype=complex)
    n = phi_hat.size
    if n > basis.n_states:
        raise ConfigError(f"phi_hat has {n} components but the basis holds {basis.n_states}")
    x = np.asarray(x, dtype=float)
    ell = basis.params.ell
    lo = min(basis.turning_point(k)[0] for k in range(n)) - 40.0
    hi = max(basis.turning_point(k)[1] for k in range(n)) + 40.0
    if np.any(x / ell < lo) or np.any(x / ell > hi):
        raise ConfigError("reconstruction grid extends beyond the validated wavefunction range")
    psi = np.stack([basis.psi(k, x) for k in range(n)])
    return phi_hat @ psi


OBSERVABLES = ("depletion", "offdiag_u", "harmonic_weight")


@dataclass(frozen=True)
class ScanResult:
    omega: np.ndarray
    beta: np.ndarray
    value: np.ndarray
    observable: str


def _depletion_propagator(dip, drive, n_periods, samples_per_period, steps_per_sample, route, truncation):
    xs = drive.xi0 + np.linspace(0.0, 2 * math.pi * n_periods, n_periods * samples_per_period + 1)[1:]
    max_step = None
    if steps_per_sample:
        max_step = 2 * math.pi / (samples_per_period * steps_per_sample) * (1 + 1e-9)
    traj = trajectory(dip, drive, xs, max_step=max_step, route=route, truncation=truncation)
    return float(np.max(1.0 - np.abs(traj["phi_hat"][:, 0]) ** 2))


def resonance_scan(dip: DipoleDecomposition, params: WellParams, drive_template: DriveConfig, omegas,
                   observable: str = "depletion", *, n_periods: int = 10, samples_per_period: int = 16,
                   steps_per_sample: int | None = 1, route: str = "fourier", truncation: int | None = None,
                   pair: tuple[int, int] = (0, 1), harmonic: int = 1, workers: int = 1) -> ScanResult:
    """Response observable against drive frequency at fixed drive amplitude gamma.

    ``depletion``        max over the window of 1 - |phi_hat_0|^2, starting in the ground state
    ``offdiag_u``        Frobenius norm of the off-diagonal part of U(xi0 + 2 pi, xi0)
    ``harmonic_weight``  |J_n(alpha_lm) Omega_lm| for ``pair`` = (l, m) and n = ``harmonic``

    For ``depletion`` the window is ``n_periods`` drive periods sampled
    ``samples_per_period`` times per period; ``steps_per_sample=None`` uses
    the single-shot propagator from xi0 for every sample, an integer k
    chains k product steps between samples.
    """
    if observable not in OBSERVABLES:
        raise ConfigError(f"unknown observable {observable!r}; expected one of {OBSERVABLES}")
    omegas = np.asarray(omegas, dtype=float)
    l, m = pair
    if not (0 <= l < dip.n and 0 <= m < dip.n):
        raise ConfigError(f"pair {pair} outside 0..{dip.n - 1}")

    def point(w):
        drive = drive_template.with_omega(params, float(w))
        if observable == "depletion":
            return _depletion_propagator(dip, drive, n_periods, samples_per_period, steps_per_sample, route, truncation)
        if observable == "offdiag_u":
            U = build_U(drive.xi0 + 2 * math.pi, drive.xi0, dip, drive, route, truncation)
            return float(np.linalg.norm(U - np.diag(np.diag(U))))
        a = drive.beta * (dip.lam[l] - dip.lam[m])
        return float(abs(bessel_jn(harmonic, a)[harmonic] * dip.Omega[l, m]))

    if workers > 1 and omegas.size > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(point, omegas))
    else:
        values = [point(w) for w in omegas]
    betas = np.array([drive_template.with_omega(params, float(w)).beta for w in omegas])
    return ScanResult(omega=omegas, beta=betas, value=np.array(values, dtype=float), observable=observable)


def reference_scan(dip: DipoleDecomposition, params: WellParams, drive_template: DriveConfig, omegas, *,
                   n_periods: int = 10, samples_per_period: int = 16, **kwargs) -> ScanResult:
    """Depletion scan from the step-by-step energy-basis integrator."""
    from .oracle import reference_evolve_basis

    omegas = np.asarray(omegas, dtype=float)
    if omegas.size == 0:
        return ScanResult(omega=omegas, beta=omegas.copy(), value=omegas.copy(), observable="depletion")
    drives = [drive_template.with_omega(params, float(w)) for w in omegas]
    betas = np.array([d.beta for d in drives])
    ratios = dip.omegas[None, :] / omegas[:, None]
    xi0 = drive_template.xi0
    xs = xi0 + np.linspace(0.0, 2 * math.pi * n_periods, n_periods * samples_per_period + 1)[1:]
    phi0 = np.zeros((omegas.size, dip.n), dtype=complex)
    phi0[:, 0] = 1.0
    states = reference_evolve_basis(ratios, dip.X, betas, phi0, xi0, float(xs[-1]), samples=xs, **kwargs)
    values = np.max(1.0 - np.abs(states[..., 0]) ** 2, axis=-1)
    return ScanResult(omega=omegas, beta=betas, value=values, observable="depletion")


def find_peaks(result: ScanResult, rel_prominence: float = 0.1) -> np.ndarray:
    """Frequencies of local maxima whose prominence exceeds a fraction of the global maximum."""
    from scipy.signal import find_peaks as _fp

    v = result.value
    if v.size == 0:
        return np.array([])
    floor = float(np.min(v)) - 1.0
    padded = np.concatenate([[floor], v, [floor]])
    idx, _ = _fp(padded, prominence=rel_prominence * float(np.max(v)))
    return result.omega[idx - 1]
