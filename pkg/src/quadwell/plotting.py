"""Static figures for the CLI report path.

Rendering goes through the Agg backend with the PNG software tag removed,
so the same data gives the same bytes on every run.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_META = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
    return path


def levels_figure(path, x, potential, energies, psis, scale):
    """Potential with each wavefunction drawn on its energy line."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.plot(x, potential, color="k", lw=1.2)
    for e, psi in zip(energies, psis):
        ax.axhline(e, color="0.8", lw=0.6)
        ax.plot(x, e + scale * psi, lw=1.0)
    top = energies[-1] + 1.5 * (energies[-1] - energies[0]) / max(len(energies) - 1, 1)
    ax.set_ylim(0.0, top)
    ax.set_xlabel("x")
    ax.set_ylabel("energy")
    return _save(fig, path)


def matrix_figure(path, M, title):
    fig, ax = plt.subplots(figsize=(4.5, 4))
    im = ax.imshow(np.abs(M), cmap="viridis")
    fig.colorbar(im, ax=ax)
    ax.set_title(title)
    ax.set_xlabel("k")
    ax.set_ylabel("m")
    return _save(fig, path)


def kernel_figure(path, xi, values, alpha):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(xi, values.real, label="Re I")
    ax.plot(xi, values.imag, label="Im I")
    ax.set_xlabel("xi")
    ax.set_title(f"alpha = {alpha:g}")
    ax.legend()
    return _save(fig, path)


def populations_figure(path, xi, pops):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for k in range(pops.shape[1]):
        ax.plot(xi, pops[:, k], label=f"{k}")
    ax.set_xlabel("xi")
    ax.set_ylabel("population")
    ax.set_yscale("log")
    ax.set_ylim(1e-12, 2.0)
    ax.legend(title="level", fontsize="small", ncol=2)
    return _save(fig, path)


def snapshots_figure(path, x, fields, phases):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for phi, xi in zip(fields, phases):
        ax.plot(x, np.abs(phi) ** 2, label=f"xi = {xi:g}")
    ax.set_xlabel("x")
    ax.set_ylabel("|Phi|^2")
    ax.legend(fontsize="small")
    return _save(fig, path)


def scan_figure(path, omega, value, observable, peaks=(), reference=None):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(omega, value, marker=".", label="propagator")
    if reference is not None:
        ax.plot(omega, reference, marker=".", ls="--", label="reference")
    for w in peaks:
        ax.axvline(w, color="0.6", lw=0.8)
    ax.set_xlabel("omega")
    ax.set_ylabel(observable)
    ax.legend()
    return _save(fig, path)
