import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from quadwell.dipole import decompose
from quadwell.errors import ConfigError, NumericalError
from quadwell.evolution import (DriveConfig, UGenerator, build_K, build_U, build_U_quadrature, eigen_U, evolve,
                                evolve_product, find_peaks, prepare_initial, propagate, reconstruct_phi,
                                reference_scan, resonance_scan, trajectory, undo_transforms, apply_transforms)
from quadwell.oracle import reference_evolve_basis, reference_evolve_grid
from quadwell.quadrature import gauss_kronrod
from quadwell.special import bessel_jn


def drive_at(params, beta, omega_factor=1.0, xi0=0.0):
    w = omega_factor * params.omega_unit
    return DriveConfig.for_well(params, beta * params.hbar * w / params.ell, w, xi0)


def reference_q(dip, drive, xi1, phi0=None):
    phi0 = np.eye(dip.n)[0] if phi0 is None else phi0
    phi = reference_evolve_basis(dip.omegas / drive.omega, dip.X, drive.beta, phi0, drive.xi0, xi1)
    return apply_transforms(phi, xi1, dip, drive)[1]


def test_drive_config(asym_params):
    d = DriveConfig.for_well(asym_params, 0.3, 1.7, 0.2)
    assert d.beta == asym_params.ell * 0.3 / (asym_params.hbar * 1.7)
    assert d.with_omega(asym_params, 3.4).beta == pytest.approx(d.beta / 2, rel=1e-15)
    with pytest.raises(ConfigError):
        DriveConfig.for_well(asym_params, 0.3, 0.0)
    with pytest.raises(ConfigError):
        DriveConfig(gamma=-1.0, omega=1.0, beta=0.1)


def test_K_limits(asym_dip4, asym_params):
    d0 = drive_at(asym_params, 0.0)
    assert np.allclose(build_K(0.8, asym_dip4, d0), asym_dip4.Omega / d0.omega, rtol=0, atol=0)
    d = drive_at(asym_params, 0.4)
    assert np.allclose(build_K(0.0, asym_dip4, d), asym_dip4.Omega / d.omega, rtol=0, atol=1e-16)


def test_K_triple_product(sym_basis, sym_params):
    dip = decompose(sym_basis, 4)
    d = drive_at(sym_params, 0.7)
    E = np.diag(np.exp(1j * d.beta * math.sin(1.1) * dip.lam))
    ref = E @ dip.Omega @ E.conj().T / d.omega
    assert np.max(np.abs(build_K(1.1, dip, d) - ref)) <= 1e-13


def test_K_hermitian_with_constant_diagonal(asym_dip, asym_params):
    d = drive_at(asym_params, 0.3)
    for xi in np.linspace(0, 2 * math.pi, 17):
        K = build_K(xi, asym_dip, d)
        assert np.max(np.abs(K - K.conj().T)) <= 1e-15
        assert np.array_equal(np.diag(K).real, np.diag(asym_dip.Omega) / d.omega)


def test_U_limits(asym_dip, asym_params):
    d = drive_at(asym_params, 0.3)
    assert not np.any(build_U(1.4, 1.4, asym_dip, d))
    d0 = drive_at(asym_params, 0.0)
    U = build_U(2.1, 0.4, asym_dip, d0)
    assert np.max(np.abs(U - asym_dip.Omega / d0.omega * 1.7)) <= 1e-12


def test_U_against_entrywise_quadrature(asym_dip4, asym_params):
    d = drive_at(asym_params, 0.5)
    for route in ("fourier", "power"):
        U = build_U(2.5, 0.0, asym_dip4, d, route)
        assert np.max(np.abs(U - build_U_quadrature(2.5, 0.0, asym_dip4, d))) <= 1e-10
        assert np.max(np.abs(U - U.conj().T)) <= 1e-12
        assert np.allclose(np.diag(U).real, np.diag(asym_dip4.Omega) / d.omega * 2.5, rtol=1e-13)


def test_U_periodic_part_bounded(asym_dip, asym_params):
    d = drive_at(asym_params, 0.6)
    gen = UGenerator(asym_dip, d)
    J0 = bessel_jn(0, gen.alpha)[..., 0]
    for xi in np.linspace(0, 40 * math.pi, 41):
        periodic = gen.interval(xi, 0.0) - gen.scale * J0 * xi
        assert np.max(np.abs(periodic)) <= 4 * np.max(np.abs(gen.scale))


def test_eigen_U_small_cases():
    mu, u = eigen_U(np.zeros((3, 3)))
    assert np.array_equal(mu, np.zeros(3)) and np.array_equal(u, np.eye(3))
    mu, _ = eigen_U(np.diag([2.0, -1.0]))
    assert np.array_equal(mu, [-1.0, 2.0])
    with pytest.raises(NumericalError):
        eigen_U(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eigen_U_n4_char_poly(asym_dip4, asym_params):
    d = drive_at(asym_params, 0.5)
    U = build_U(2.5, 0.0, asym_dip4, d)
    mu, u = eigen_U(U)
    roots = np.sort(np.roots(np.poly(U)).real)
    assert np.allclose(mu, roots, atol=1e-9)
    assert np.max(np.abs(U @ u - u * mu)) <= 1e-10 * np.linalg.norm(U)
    for j in range(4):
        i = np.argmax(np.abs(u[:, j]) > (1 - 1e-10) * np.abs(u[:, j]).max())
        assert u[i, j].imag == 0 and u[i, j].real > 0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_evolve_matches_matrix_exponential(seed):
    r = np.random.default_rng(seed)
    A = r.normal(size=(5, 5)) + 1j * r.normal(size=(5, 5))
    U = A + A.conj().T
    q0 = r.normal(size=5) + 1j * r.normal(size=5)
    q0 /= np.linalg.norm(q0)
    q = evolve(q0, U)
    assert np.max(np.abs(q - expm(-1j * U) @ q0)) <= 1e-11
    assert abs(np.linalg.norm(q) - 1.0) <= 1e-12


def test_evolve_trivial(asym_dip4, asym_params):
    q0 = np.array([0.6, 0.8j, 0, 0])
    assert np.array_equal(evolve(q0, np.zeros((4, 4))), q0)
    U = build_U(2.0, 0.0, asym_dip4, drive_at(asym_params, 0.3))
    mu, u = eigen_U(U)
    assert np.allclose(evolve(u[:, 2], U), np.exp(-1j * mu[2]) * u[:, 2], atol=1e-14)
    with pytest.raises(ConfigError):
        evolve(np.ones(3), U)


def one_period_gap(dip, params, steps=None):
    d = drive_at(params, 0.05)
    q0 = prepare_initial(dip, d)
    gen = UGenerator(dip, d)
    edges = np.linspace(0, 2 * math.pi, (steps or 1) + 1)
    q = evolve_product(q0, edges, gen)
    return float(np.linalg.norm(q - reference_q(dip, d, 2 * math.pi)))


@pytest.mark.xfail(strict=True, reason="single-shot exponential is first order in beta here: "
                                       "measured 2-norm gap 0.108 at beta = 0.05, omega = omega_unit")
def test_one_period_single_shot_within_5e3(asym_dip4, asym_params):
    assert one_period_gap(asym_dip4, asym_params) <= 5e-3


def test_one_period_gap_behaviour(asym_dip4, asym_params):
    one = one_period_gap(asym_dip4, asym_params)
    assert 5e-3 < one < 0.2
    assert one_period_gap(asym_dip4, asym_params, 64) <= 5e-3


def test_transforms(asym_dip, asym_params):
    d = drive_at(asym_params, 0.4)
    r = np.random.default_rng(3)
    q = r.normal(size=8) + 1j * r.normal(size=8)
    f, phi = undo_transforms(q, 3 * math.pi, asym_dip, d)
    assert np.allclose(f, q, atol=1e-15)
    d0 = drive_at(asym_params, 0.0)
    f, phi = undo_transforms(q, 1.3, asym_dip, d0)
    assert np.array_equal(f, q) and np.allclose(phi, asym_dip.V @ q)
    f, phi = undo_transforms(q, 1.3, asym_dip, d)
    f2, q2 = apply_transforms(phi, 1.3, asym_dip, d)
    assert np.max(np.abs(q2 - q)) <= 1e-14 and np.max(np.abs(f2 - f)) <= 1e-14
    assert np.linalg.norm(f) == pytest.approx(np.linalg.norm(q)) == pytest.approx(np.linalg.norm(phi))


def test_propagate_tables(asym_dip, asym_params):
    d = drive_at(asym_params, 0.05, xi0=0.4)
    t = propagate(asym_dip, d, 3.0)
    assert np.max(np.abs(t.U - t.U.conj().T)) <= 1e-12
    for v in (t.q, t.f, t.phi_hat):
        assert abs(np.linalg.norm(v) - 1.0) <= 1e-12
    t0 = propagate(asym_dip, d, 0.4)
    assert np.allclose(t0.phi_hat, np.eye(8)[0], atol=1e-15)


def field_norm(x_ell, phi, ell):
    return gauss_kronrod(lambda s: np.abs(phi(s * ell)) ** 2 * ell, x_ell[0], x_ell[1])[0]


def test_reconstruction_stationary_without_drive(asym_basis, asym_dip, asym_params):
    d = DriveConfig.for_well(asym_params, 0.0, 1.3)
    x = np.linspace(-6, 6, 121)
    tr = trajectory(asym_dip, d, [0.0, 1.0, 7.0])
    for ph in tr["phi_hat"]:
        assert np.allclose(np.abs(reconstruct_phi(x, ph, asym_basis)) ** 2, asym_basis.psi(0, x) ** 2,
                           atol=1e-13)


def test_reconstruction_initial_state(asym_basis, asym_dip, asym_params):
    d = drive_at(asym_params, 0.3, xi0=0.9)
    phi0 = np.array([0.6, 0, 0.8j, 0, 0, 0, 0, 0])
    t = propagate(asym_dip, d, 0.9, phi0)
    x = np.linspace(-5, 5, 51)
    expect = 0.6 * asym_basis.psi(0, x) + 0.8j * asym_basis.psi(2, x)
    assert np.max(np.abs(reconstruct_phi(x, t.phi_hat, asym_basis) - expect)) <= 1e-13


def test_reconstruction_range_check(asym_basis):
    with pytest.raises(ConfigError):
        reconstruct_phi(np.array([0.0, 500.0]), np.eye(8)[0], asym_basis)
    with pytest.raises(ConfigError):
        reconstruct_phi(np.array([0.0]), np.ones(9), asym_basis)


def grid_gap(basis, params, max_step):
    dip = decompose(basis, 6)
    d = drive_at(params, 0.05)
    ph = trajectory(dip, d, [math.pi], max_step=max_step)["phi_hat"][0]
    x = np.linspace(-14, 14, 2801) * params.ell
    psi0 = basis.psi(0, x)
    ref = reference_evolve_grid(params, d.gamma, d.omega, x, psi0, 0.0, math.pi / d.omega)
    return math.sqrt(np.sum(np.abs(reconstruct_phi(x, ph, basis) - ref) ** 2) * (x[1] - x[0]))


@pytest.mark.xfail(strict=True, reason="single-shot exponential is first order in beta; "
                                       "measured L2 gap 0.0105 at omega = omega_unit")
def test_half_period_field_single_shot_vs_grid(asym_basis, asym_params):
    assert grid_gap(asym_basis, asym_params, None) <= 1e-2


def test_half_period_field_product_vs_grid(asym_basis, asym_params):
    assert grid_gap(asym_basis, asym_params, 2 * math.pi / 64) <= 1e-3


def test_unitarity_along_trajectory(asym_basis, asym_dip, asym_params):
    d = drive_at(asym_params, 0.05)
    xs = np.linspace(0, 2 * math.pi, 9)
    for step in (None, 2 * math.pi / 32):
        tr = trajectory(asym_dip, d, xs, max_step=step)
        assert np.max(np.abs(np.linalg.norm(tr["q"], axis=1) - 1)) <= 1e-12
        assert np.max(np.abs(np.linalg.norm(tr["phi_hat"], axis=1) - 1)) <= 1e-12
    lo = min(asym_basis.turning_point(k)[0] for k in range(8)) - 12
    hi = max(asym_basis.turning_point(k)[1] for k in range(8)) + 12
    for ph in tr["phi_hat"][::4]:
        n = field_norm((lo, 0.0), lambda x: reconstruct_phi(x, ph, asym_basis), asym_params.ell)
        n += field_norm((0.0, hi), lambda x: reconstruct_phi(x, ph, asym_basis), asym_params.ell)
        assert n == pytest.approx(1.0, abs=1e-10)


def test_product_trajectory_requires_ordered_samples(asym_dip, asym_params):
    with pytest.raises(ConfigError):
        trajectory(asym_dip, drive_at(asym_params, 0.1), [1.0, 0.5], max_step=0.1)


def test_scan_without_drive_is_flat(sym_dip, sym_params):
    t = DriveConfig.for_well(sym_params, 0.0, 1.0)
    res = resonance_scan(sym_dip, sym_params, t, np.linspace(0.5, 1.5, 5), n_periods=2)
    assert np.max(res.value) <= 1e-12
    assert find_peaks(res).size <= 5


def test_scan_observables(asym_dip, asym_params):
    t = DriveConfig.for_well(asym_params, 0.02, 1.0)
    w = np.linspace(1.0, 2.0, 3)
    a = resonance_scan(asym_dip, asym_params, t, w, "offdiag_u")
    assert np.all(a.value > 0)
    b = resonance_scan(asym_dip, asym_params, t, w, "harmonic_weight", pair=(0, 1), harmonic=1)
    assert np.all(b.value > 0) and np.all(np.diff(b.value) < 0)
    with pytest.raises(ConfigError):
        resonance_scan(asym_dip, asym_params, t, w, "heat")
    with pytest.raises(ConfigError):
        resonance_scan(asym_dip, asym_params, t, w, "harmonic_weight", pair=(0, 9))


def test_scan_threads_match_serial(asym_dip, asym_params):
    t = DriveConfig.for_well(asym_params, 0.02, 1.0)
    w = np.linspace(1.0, 1.6, 4)
    a = resonance_scan(asym_dip, asym_params, t, w, n_periods=2)
    b = resonance_scan(asym_dip, asym_params, t, w, n_periods=2, workers=3)
    assert np.array_equal(a.value, b.value)


def test_symmetric_scan_peaks_at_oscillator_frequency(sym_dip, sym_params):
    t = DriveConfig.for_well(sym_params, 0.02, 1.0)
    w = np.round(np.arange(0.6, 1.41, 0.05), 10)
    res = resonance_scan(sym_dip, sym_params, t, w)
    ref = reference_scan(sym_dip, sym_params, t, w)
    assert w[np.argmax(res.value)] == pytest.approx(1.0)
    assert w[np.argmax(ref.value)] == pytest.approx(1.0)
    assert np.max(np.abs(res.value - ref.value)) <= 0.05 * np.max(ref.value)


def test_single_shot_scan_misses_the_resonance(sym_dip, sym_params):
    t = DriveConfig.for_well(sym_params, 0.02, 1.0)
    w = np.round(np.arange(0.6, 1.41, 0.05), 10)
    res = resonance_scan(sym_dip, sym_params, t, w, steps_per_sample=None)
    assert abs(w[np.argmax(res.value)] - 1.0) > 0.05
