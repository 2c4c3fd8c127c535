"""Criticality post-processing: pseudo-critical points, scaling fits, fidelity.

For each even N the dimensionless gap (E1 - E0)/rho dips at a pseudo-critical
coupling z_N below z_c = 2 rho + delta.  Two power laws tie the finite-size
data to the transition:

    kappa |z_c - z_N|^nu ~ 1/N          (pseudo-critical drift)
    gap_min / N ~ Gamma N^{-zeta}       (gap closing)

and both are fitted by least squares in log-log coordinates.  Ground-state
fidelity sweeps |<ground(delta=0, z)|ground(delta=alpha, z)>| dip near the
pseudo-critical point, with the dip deepening and moving toward 2 rho + alpha
as either alpha or N grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BracketError, InvalidDataError, InvalidParameterError
from .fock import build_basis
from .meanfield import critical_point
from .quantum import (ModelParams, _SMALL_DENSE, _default_v0, _eigsh_lowest,
                      fidelity, hamiltonian_terms)

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class GapMinimum:
    """Pseudo-critical point of one sector."""

    N: int
    z_N: float
    gap_min: float


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares power law in log-log coordinates."""

    exponent: float
    prefactor: float
    r_squared: float
    points: list[tuple[float, float]]
    stderr_exponent: float
    stderr_prefactor: float


class GapEvaluator:
    """Dimensionless gap of one sector as a reusable function of z.

    Assembles the coupling structure once; each evaluation is a scalar
    recombination plus an eigensolve (dense below the small-sector cutoff,
    warm-started Lanczos above it).
    """

    def __init__(self, N: int, delta: float = 0.0, rho: float = 1.0,
                 arpack_tol: float = 1e-8):
        self.N = N
        self.delta = delta
        self.rho = rho
        basis = build_basis(N)
        self._terms = hamiltonian_terms(basis)
        self._dense = basis.dim <= _SMALL_DENSE
        self._tol = arpack_tol
        self._v0 = None
        self.evaluations = 0

    def gap(self, z: float) -> float:
        return self.levels(z)[2]

    def levels(self, z: float) -> tuple[float, float, float]:
        """(E0, E1, dimensionless gap) at coupling z."""
        self.evaluations += 1
        params = ModelParams(N=self.N, z=z, delta=self.delta, rho=self.rho)
        if self._dense:
            H = self._terms.assemble(params)
            w = np.linalg.eigvalsh(H.to_dense())
            e0, e1 = float(w[0]), float(w[1])
        else:
            H = self._terms.csr(params)
            v0 = self._v0 if self._v0 is not None else _default_v0(H.shape[0])
            w, v = _eigsh_lowest(H, 2, v0=v0, tol=self._tol)
            self._v0 = np.ascontiguousarray(v[:, 0])
            e0, e1 = float(w[0]), float(w[1])
        return e0, e1, (e1 - e0) / self.rho


def _golden_section(f, a: float, b: float,
                    tol: float = 1e-6) -> tuple[float, float]:
    """Minimum of a unimodal f on [a, b] to |interval| <= tol."""
    h = b - a
    c = a + _INV_PHI2 * h
    d = a + _INV_PHI * h
    yc = f(c)
    yd = f(d)
    while h > tol:
        if yc < yd:
            b, d, yd = d, c, yc
            h = b - a
            c = a + _INV_PHI2 * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h = b - a
            d = a + _INV_PHI * h
            yd = f(d)
    return (c, yc) if yc < yd else (d, yd)


def pseudo_critical_point(N: int, delta: float = 0.0, rho: float = 1.0,
                          bracket: tuple[float, float] | None = None, *,
                          coarse: int = 41, z_tol: float = 1e-6,
                          evaluator: GapEvaluator | None = None) -> GapMinimum:
    """Locate the gap minimum of one sector.

    A coarse scan (>= 41 points) checks the bracket holds a single interior
    minimum (one sign change of the discrete slope), then golden-section
    refinement narrows z_N to `z_tol`.  A minimum on the bracket edge raises
    BracketError so the caller can widen.
    """
    if coarse < 41:
        raise InvalidParameterError(f"coarse scan needs >= 41 points, got {coarse}")
    if bracket is None:
        z_c = critical_point(rho, delta)
        bracket = (max(z_c - 1.0, 1e-3), z_c)
    lo, hi = bracket
    if not (0.0 <= lo < hi):
        raise InvalidParameterError(f"bad bracket {bracket}")

    ev = evaluator if evaluator is not None else GapEvaluator(N, delta, rho)
    zs = np.linspace(lo, hi, coarse)
    gaps = np.array([ev.gap(z) for z in zs])

    i = int(np.argmin(gaps))
    if i == 0 or i == coarse - 1:
        raise BracketError(
            f"gap minimum sits on the bracket edge z={zs[i]:.6g}; widen {bracket}")
    slopes = np.sign(np.diff(gaps))
    slopes = slopes[slopes != 0]
    changes = int(np.sum(slopes[1:] != slopes[:-1]))
    if changes != 1:
        raise BracketError(
            f"gap not unimodal on {bracket}: {changes} slope sign changes")

    z_N, gap_min = _golden_section(ev.gap, float(zs[i - 1]), float(zs[i + 1]),
                                   tol=z_tol)
    mid_gap = float(gaps[i])
    if mid_gap < gap_min:
        z_N, gap_min = float(zs[i]), mid_gap
    return GapMinimum(N=N, z_N=z_N, gap_min=gap_min)


def _loglog_fit(x: np.ndarray, y: np.ndarray) -> tuple:
    n = x.size
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((y - ym) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    sigma2 = ss_res / (n - 2) if n > 2 else 0.0
    se_slope = math.sqrt(sigma2 / sxx)
    se_intercept = math.sqrt(sigma2 * (1.0 / n + xm * xm / sxx))
    return slope, intercept, r2, se_slope, se_intercept


def fit_nu(points: list[tuple[float, float]], z_c: float) -> ScalingFit:
    """Exponent and constant of kappa |z_c - z_N|^nu ~ 1/N.

    Regresses log N on log |z_c - z_N|; the slope is -nu and the constant
    follows from kappa = exp(-intercept).
    """
    if len(points) < 5:
        raise InvalidDataError(f"need >= 5 points, got {len(points)}")
    if any(zn >= z_c for _, zn in points):
        raise InvalidDataError("every pseudo-critical point must sit below z_c")
    pts = sorted((float(n), float(zn)) for n, zn in points)
    x = np.log([z_c - zn for _, zn in pts])
    y = np.log([n for n, _ in pts])
    slope, intercept, r2, se_slope, se_intercept = _loglog_fit(x, y)
    nu = -slope
    kappa = math.exp(-intercept)
    return ScalingFit(exponent=nu, prefactor=kappa, r_squared=r2, points=pts,
                      stderr_exponent=se_slope,
                      stderr_prefactor=kappa * se_intercept)


def fit_zeta(points: list[tuple[float, float]]) -> ScalingFit:
    """Exponent and constant of gap_min / N ~ Gamma N^{-zeta}.

    Regresses log(gap_min / N) on log N; the slope is -zeta and
    Gamma = exp(intercept).  Equivalently gap_min itself scales as
    N^{1 - zeta}.
    """
    if len(points) < 5:
        raise InvalidDataError(f"need >= 5 points, got {len(points)}")
    if any(g <= 0 for _, g in points):
        raise InvalidDataError("gap minima must be positive")
    pts = sorted((float(n), float(g)) for n, g in points)
    x = np.log([n for n, _ in pts])
    y = np.log([g / n for n, g in pts])
    slope, intercept, r2, se_slope, se_intercept = _loglog_fit(x, y)
    zeta = -slope
    gamma = math.exp(intercept)
    return ScalingFit(exponent=zeta, prefactor=gamma, r_squared=r2, points=pts,
                      stderr_exponent=se_slope,
                      stderr_prefactor=gamma * se_intercept)


# default N grid for scaling runs: factor-sqrt(2) ladder rounded to even
DEFAULT_SCALING_GRID = (100, 140, 200, 284, 400, 566, 800, 1132)


@dataclass(frozen=True)
class ScalingStudy:
    """Gap minima over an N grid plus both power-law fits."""

    minima: list[GapMinimum]
    nu_fit: ScalingFit
    zeta_fit: ScalingFit


def scaling_study(n_grid=DEFAULT_SCALING_GRID, delta: float = 0.0,
                  rho: float = 1.0,
                  bracket: tuple[float, float] | None = None) -> ScalingStudy:
    """Run pseudo-critical searches over `n_grid` and fit both scaling laws."""
    minima = [pseudo_critical_point(int(N), delta, rho, bracket)
              for N in sorted(set(int(n) for n in n_grid))]
    z_c = critical_point(rho, delta)
    nu = fit_nu([(m.N, m.z_N) for m in minima], z_c)
    zeta = fit_zeta([(m.N, m.gap_min) for m in minima])
    return ScalingStudy(minima=minima, nu_fit=nu, zeta_fit=zeta)


class _GroundVectorProbe:
    """Warm-started ground vectors of one sector along a z sweep."""

    def __init__(self, N: int, delta: float, rho: float):
        self.N = N
        self.delta = delta
        self.rho = rho
        basis = build_basis(N)
        self._terms = hamiltonian_terms(basis)
        self._dense = basis.dim <= _SMALL_DENSE
        self._v0 = None

    def vector(self, z: float) -> np.ndarray:
        params = ModelParams(N=self.N, z=z, delta=self.delta, rho=self.rho)
        if self._dense:
            H = self._terms.assemble(params).to_dense()
            _, v = np.linalg.eigh(H)
            return v[:, 0]
        H = self._terms.csr(params)
        v0 = self._v0 if self._v0 is not None else _default_v0(H.shape[0])
        _, v = _eigsh_lowest(H, 1, v0=v0, tol=1e-8)
        self._v0 = np.ascontiguousarray(v[:, 0])
        return self._v0


@dataclass(frozen=True)
class FidelitySweep:
    """F(z) between the unperturbed and detuned ground states."""

    N: int
    alpha: float
    z: np.ndarray
    F: np.ndarray
    dip_z: float
    dip_F: float
    interior_minima: list[int]      # indices of strict local minima of F


def fidelity_sweep(N: int, alpha: float, z_grid: np.ndarray,
                   rho: float = 1.0) -> FidelitySweep:
    """Sweep |<ground(delta=0, z)|ground(delta=alpha, z)>| over a z grid."""
    if alpha < 0:
        raise InvalidParameterError(f"alpha must be >= 0, got {alpha}")
    z_grid = np.asarray(z_grid, dtype=float)
    if z_grid.ndim != 1 or z_grid.size < 3:
        raise InvalidParameterError("z grid needs at least 3 points")
    base = _GroundVectorProbe(N, 0.0, rho)
    pert = base if alpha == 0.0 else _GroundVectorProbe(N, alpha, rho)
    F = np.empty_like(z_grid)
    for k, z in enumerate(z_grid):
        v1 = base.vector(float(z))
        v2 = v1 if pert is base else pert.vector(float(z))
        F[k] = fidelity(v1, v2)
    i = int(np.argmin(F))
    interior = [int(j) for j in range(1, z_grid.size - 1)
                if F[j] < F[j - 1] and F[j] < F[j + 1]]
    return FidelitySweep(N=N, alpha=alpha, z=z_grid, F=F,
                         dip_z=float(z_grid[i]), dip_F=float(F[i]),
                         interior_minima=interior)
