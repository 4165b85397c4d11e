"""Dipole matrix of the stationary states and its eigenbasis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ConvergenceError
from .quadrature import gauss_kronrod
from .well import EigenBasis, half_line_extent

__all__ = [
    "DipoleDecomposition",
    "dipole_matrix",
    "overlap_matrix",
    "diagonalize_dipole",
    "build_omega",
    "decompose",
    "truncation_report",
]


@dataclass(frozen=True)
class DipoleDecomposition:
    """Truncated dipole problem.

    X is in units of ell, so ``lam`` is dimensionless; ``omegas`` and
    ``Omega`` carry the physical angular-frequency unit of the well.
    """

    X: np.ndarray
    lam: np.ndarray
    V: np.ndarray
    omegas: np.ndarray
    Omega: np.ndarray

    @property
    def n(self) -> int:
        return self.X.shape[0]


def _half_line_moments(basis: EigenBasis, n: int, power: int) -> np.ndarray:
    iu = np.triu_indices(n)
    cr, cl = basis._scales
    ext_r = max(half_line_extent(basis.states[k].nu_right) for k in range(n)) / cr
    ext_l = max(half_line_extent(basis.states[k].nu_left) for k in range(n)) / cl

    def integrand(s):
        psi = np.stack([basis.psi_natural(k, s) for k in range(n)])
        prod = psi[iu[0]] * psi[iu[1]]
        return prod * s**power if power else prod

    out = np.zeros((n, n))
    for lo, hi in ((0.0, ext_r), (-ext_l, 0.0)):
        try:
            val, _ = gauss_kronrod(integrand, lo, hi, epsabs=1e-15, epsrel=1e-13)
        except ConvergenceError as exc:
            raise ConvergenceError(f"dipole quadrature on [{lo:.3g}, {hi:.3g}] failed for n={n}: {exc}") from None
        out[iu] += val
    out = np.triu(out) + np.triu(out, 1).T
    return out


def dipole_matrix(basis: EigenBasis, n: int | None = None) -> np.ndarray:
    """x_mk = <psi_m| x |psi_k> / ell, integrated separately on each half-line."""
    n = basis.n_states if n is None else n
    if not (1 <= n <= basis.n_states):
        raise ConfigError(f"truncation n={n} must lie in 1..{basis.n_states}")
    X = _half_line_moments(basis, n, 1)
    return 0.5 * (X + X.T)


def overlap_matrix(basis: EigenBasis, n: int | None = None) -> np.ndarray:
    n = basis.n_states if n is None else n
    return _half_line_moments(basis, n, 0)


def diagonalize_dipole(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (columns).

    Each eigenvector is flipped so that its largest-magnitude component is
    positive; ties are broken by the lowest index.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ConfigError("dipole matrix must be square")
    if not np.allclose(X, X.T, rtol=0.0, atol=1e-14 * max(1.0, np.abs(X).max())):
        raise ConfigError("dipole matrix must be symmetric")
    lam, V = np.linalg.eigh(0.5 * (X + X.T))
    V = V.copy()
    for j in range(V.shape[1]):
        col = V[:, j]
        i = int(np.argmax(np.abs(col) > (1.0 - 1e-10) * np.abs(col).max()))
        if col[i] < 0:
            V[:, j] = -col
    return lam, V


def build_omega(V: np.ndarray, omegas) -> np.ndarray:
    """Omega = V^T diag(omegas) V."""
    V = np.asarray(V, dtype=float)
    w = np.asarray(omegas, dtype=float)
    if V.ndim != 2 or V.shape[0] != V.shape[1] or V.shape[0] != w.size:
        raise ConfigError(f"dimension mismatch: V {V.shape} vs {w.size} frequencies")
    Om = V.T @ (w[:, None] * V)
    return 0.5 * (Om + Om.T)


def decompose(basis: EigenBasis, n: int | None = None) -> DipoleDecomposition:
    n = basis.n_states if n is None else n
    X = dipole_matrix(basis, n)
    lam, V = diagonalize_dipole(X)
    omegas = basis.omegas[:n]
    return DipoleDecomposition(X=X, lam=lam, V=V, omegas=omegas, Omega=build_omega(V, omegas))


def truncation_report(basis: EigenBasis, n: int, extra: int = 4) -> dict:
    """Decay profile of |x_mk| and stability of the low dipole eigenvalues.

    Needs ``basis.n_states >= n + extra``; compares lambda_k for k < n/2
    between truncations n and n + extra.  Informational only: eigenvalues of
    a truncated position operator behave like quadrature nodes and keep
    moving as n grows.
    """
    if basis.n_states < n + extra:
        raise ConfigError(f"truncation report needs {n + extra} states, basis has {basis.n_states}")
    Xbig = dipole_matrix(basis, n + extra)
    lam_n = np.linalg.eigvalsh(Xbig[:n, :n])
    lam_big = np.linalg.eigvalsh(Xbig)
    half = max(1, n // 2)
    rel = np.abs(lam_big[:half] - lam_n[:half]) / np.maximum(np.abs(lam_n[:half]), 1e-300)
    decay = [float(np.max(np.abs(np.diag(Xbig, d)))) for d in range(n + extra)]
    return {
        "n": n,
        "extra": extra,
        "offdiag_max_by_distance": decay,
        "lambda_n": lam_n[:half].tolist(),
        "lambda_n_plus": lam_big[:half].tolist(),
        "lambda_rel_change": rel.tolist(),
    }
