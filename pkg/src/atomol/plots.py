"""Figure rendering for the CLI report paths.

Every function takes plain arrays, writes one PNG next to the delimited
output, and returns the path.  Imported lazily by the CLI so headless runs
without --plot never touch matplotlib.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def spectrum_figure(path: Path, energies_per_n_rho: np.ndarray, N: int) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(np.arange(len(energies_per_n_rho)), energies_per_n_rho, "o", ms=3)
    ax.set_xlabel("level index")
    ax.set_ylabel(r"$E / (N\rho)$")
    ax.set_title(f"Energy levels, N = {N}")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def sweep_figure(path: Path, z: np.ndarray, E0: np.ndarray, E1: np.ndarray,
                 gap: np.ndarray, atomic_fraction: np.ndarray, N: int) -> Path:
    fig, axes = plt.subplots(3, 1, figsize=(6, 8), sharex=True)
    axes[0].plot(z, E0, label=r"$E_0$")
    axes[0].plot(z, E1, label=r"$E_1$")
    axes[0].set_ylabel(r"$E/\rho$")
    axes[0].legend()
    axes[1].plot(z, gap, color="C2")
    axes[1].set_ylabel(r"$(E_1 - E_0)/\rho$")
    axes[2].plot(z, atomic_fraction, color="C3")
    axes[2].set_ylabel(r"$\langle N_a \rangle / N$")
    axes[2].set_xlabel(r"$z/\rho$")
    for ax in axes:
        ax.grid(True, alpha=0.3)
    axes[0].set_title(f"Ground-state sweep, N = {N}")
    return _save(fig, path)


def meanfield_figure(path: Path, z: np.ndarray, energy: np.ndarray,
                     dEdz: np.ndarray, d2Edz2: np.ndarray,
                     z_c: float) -> Path:
    fig, axes = plt.subplots(3, 1, figsize=(6, 8), sharex=True)
    for ax, y, label in zip(axes, (energy, dEdz, d2Edz2),
                            (r"$E_0$", r"$dE_0/dz$", r"$d^2E_0/dz^2$")):
        ax.plot(z, y)
        ax.axvline(z_c, color="k", ls="--", lw=0.8, alpha=0.6)
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
    axes[2].set_xlabel(r"$z/\rho$")
    axes[0].set_title("Semiclassical ground-state energy and derivatives")
    return _save(fig, path)


def scaling_figure(path: Path, N: np.ndarray, offset: np.ndarray,
                   gap_min: np.ndarray, nu: float, zeta: float) -> Path:
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    axes[0].loglog(offset, N, "o")
    lo = np.array([offset.min(), offset.max()])
    scale = N[-1] / offset[-1] ** (-nu)
    axes[0].loglog(lo, scale * lo ** (-nu), "--",
                   label=rf"slope $-\nu$ = {-nu:.4f}")
    axes[0].set_xlabel(r"$|z_c - z_N|$")
    axes[0].set_ylabel(r"$N$")
    axes[0].legend()
    axes[1].loglog(N, gap_min, "o")
    ln = np.array([N.min(), N.max()])
    scale = gap_min[-1] / N[-1] ** (1.0 - zeta)
    axes[1].loglog(ln, scale * ln ** (1.0 - zeta), "--",
                   label=rf"slope $1-\zeta$ = {1.0 - zeta:.4f}")
    axes[1].set_xlabel(r"$N$")
    axes[1].set_ylabel(r"$\Delta E_{min}$")
    axes[1].legend()
    for ax in axes:
        ax.grid(True, which="both", alpha=0.3)
    return _save(fig, path)


def fidelity_figure(path: Path, z: np.ndarray, F: np.ndarray, dip_z: float,
                    N: int, alpha: float) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(z, F)
    ax.axvline(dip_z, color="k", ls="--", lw=0.8, alpha=0.6,
               label=f"dip at z = {dip_z:.4f}")
    ax.set_xlabel(r"$z/\rho$")
    ax.set_ylabel(r"$F$")
    ax.set_title(rf"Ground-state fidelity, N = {N}, $\alpha$ = {alpha}")
    ax.legend()
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def loop_figure(path: Path, t: np.ndarray, p1: np.ndarray, p2: np.ndarray,
                lam: np.ndarray, mu0: float, z: float) -> Path:
    fig, axes = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    axes[0].plot(t, p1, label=r"$|b_g|^2$")
    axes[0].plot(t, p2, label=r"$|b_e|^2$")
    axes[0].set_ylabel("population")
    axes[0].legend()
    axes[0].set_title(f"Adiabatic loop, z = {z}")
    axes[1].plot(t, lam + mu0 * t)
    axes[1].set_ylabel(r"$\lambda(t) + \mu_0 t$")
    axes[1].set_xlabel(r"$t\,\rho$")
    for ax in axes:
        ax.grid(True, alpha=0.3)
    return _save(fig, path)


def trajectory_figure(path: Path, t: np.ndarray, psi: np.ndarray,
                      norm: np.ndarray) -> Path:
    fig, axes = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    axes[0].plot(t, np.abs(psi[:, 0]) ** 2, label=r"$|a|^2$")
    axes[0].plot(t, np.abs(psi[:, 1]) ** 2, label=r"$|b_g|^2$")
    axes[0].plot(t, np.abs(psi[:, 2]) ** 2, label=r"$|b_e|^2$")
    axes[0].set_ylabel("population")
    axes[0].legend()
    axes[1].plot(t, norm - 1.0)
    axes[1].set_ylabel("norm $-$ 1")
    axes[1].set_xlabel(r"$t\,\rho$")
    for ax in axes:
        ax.grid(True, alpha=0.3)
    return _save(fig, path)
