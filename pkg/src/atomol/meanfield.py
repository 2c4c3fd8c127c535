"""Semiclassical (large-N) ground states and the second-order transition.

The amplitude triple psi = (a, b_g, b_e) obeys the nonstandard normalization
|a|^2 + 2(|b_g|^2 + |b_e|^2) = 1 (two atoms per molecule) and the
self-consistent eigenproblem

    M(psi) psi = mu * diag(1, 2, 2) psi,
    M(psi) = [[0, 0, 2 rho e^{i phi} a*], [0, Delta, z], [rho e^{-i phi} a, z, Delta]]

with mu the atomic chemical potential.  The classical energy

    E = Delta (|b_g|^2 + |b_e|^2) + 2 z Re(b_e* b_g) + 2 rho Re(e^{-i phi} b_e* a^2)

differs from mu; at fixed points E = mu + rho |b_e| |a|^2 holds (verified, not
assumed).  d^2E/dz^2 jumps at z_c = 2 rho + Delta: the atom-molecule mixture
(|a|^2 > 0) below, the pure molecule state (|a|^2 = 0) above.

Everything here is a pure function of its arguments; rho = 1 is the natural
unit of energy for all of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, InvalidParameterError

_SQRT3 = math.sqrt(3.0)

# diag of the chemical-potential matrix: atoms count once, molecules twice
MODE_WEIGHTS = np.array([1.0, 2.0, 2.0])

_NORM_INPUT_TOL = 1e-8
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class MeanFieldParams:
    """Coupling set of the semiclassical model (no particle number).

    rho = 0 is admitted so the equations of motion cover the free molecular
    block; the ground-state solvers, which use rho as the energy unit,
    reject it themselves.
    """

    z: float
    rho: float = 1.0
    delta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if self.rho < 0.0:
            raise InvalidParameterError(f"rho must be >= 0, got {self.rho}")
        for name in ("z", "delta", "phi"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InvalidParameterError(f"{name} must be finite, got {v}")
        object.__setattr__(self, "phi", float(self.phi) % (2.0 * math.pi))


@dataclass(frozen=True)
class MeanFieldState:
    """Complex amplitude triple under the two-atoms-per-molecule normalization."""

    a: complex
    b_g: complex
    b_e: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b_g, self.b_e], dtype=complex)

    @classmethod
    def from_array(cls, psi: np.ndarray) -> "MeanFieldState":
        return cls(complex(psi[0]), complex(psi[1]), complex(psi[2]))

    def norm_total(self) -> float:
        return abs(self.a) ** 2 + 2.0 * (abs(self.b_g) ** 2 + abs(self.b_e) ** 2)

    def populations(self) -> tuple[float, float, float]:
        """(|a|^2, |b_g|^2, |b_e|^2)."""
        return abs(self.a) ** 2, abs(self.b_g) ** 2, abs(self.b_e) ** 2


@dataclass(frozen=True)
class GroundSolution:
    """Self-consistent ground state, its chemical potential and energy."""

    state: MeanFieldState
    mu: float
    energy: float


def gauge_transform(state: MeanFieldState, theta: float) -> MeanFieldState:
    """Phase rotation e^{i theta} on a and e^{2 i theta} on both molecules."""
    u1 = np.exp(1j * theta)
    u2 = np.exp(2j * theta)
    return MeanFieldState(state.a * u1, state.b_g * u2, state.b_e * u2)


def meanfield_matrix(state: MeanFieldState, params: MeanFieldParams) -> np.ndarray:
    """State-dependent (non-Hermitian) coefficient matrix M(psi)."""
    ph = np.exp(1j * params.phi)
    return np.array([
        [0.0, 0.0, 2.0 * params.rho * ph * np.conj(state.a)],
        [0.0, params.delta, params.z],
        [params.rho * np.conj(ph) * state.a, params.z, params.delta],
    ], dtype=complex)


def eigen_residual(solution: GroundSolution, params: MeanFieldParams) -> float:
    """|| M(psi) psi - mu diag(1,2,2) psi ||_2 of a candidate solution."""
    psi = solution.state.as_array()
    return float(np.linalg.norm(
        meanfield_matrix(solution.state, params) @ psi
        - solution.mu * MODE_WEIGHTS * psi))


def classical_energy(state: MeanFieldState, params: MeanFieldParams) -> float:
    """Energy functional of a normalized amplitude triple."""
    norm = state.norm_total()
    if abs(norm - 1.0) > _NORM_INPUT_TOL:
        raise InvalidParameterError(
            f"state not normalized: |a|^2 + 2(|b_g|^2+|b_e|^2) = {norm!r}")
    _, p1, p2 = state.populations()
    return float(
        params.delta * (p1 + p2)
        + 2.0 * params.z * (np.conj(state.b_e) * state.b_g).real
        + 2.0 * params.rho
        * (np.exp(-1j * params.phi) * np.conj(state.b_e) * state.a ** 2).real)


def critical_point(rho: float = 1.0, delta: float = 0.0) -> float:
    """Coupling z_c = 2 rho + delta where the transition sits."""
    if not (rho > 0.0):
        raise InvalidParameterError(f"rho must be positive, got {rho}")
    return 2.0 * rho + delta


def s0_asymptotic(z: float, z_c: float) -> float:
    """Linearized atomic population (4 - z_c (2 z - z_c)) / 6 near z_c."""
    return (4.0 - z_c * (2.0 * z - z_c)) / 6.0


def ground_state_analytic(z: float, rho: float = 1.0,
                          phi: float = 0.0) -> GroundSolution:
    """Closed-form zero-detuning ground state.

    Mixture branch (z < 2 rho):
        mu0 = -sqrt(z^2 + 8 rho^2) / (2 sqrt(3))
        psi = (sqrt((4 - z^2/rho^2)/6),
               (z / 4 rho) e^{-i phi},
               -(sqrt(z^2 + 8 rho^2) / (4 sqrt(3) rho)) e^{-i phi})
    Pure molecule branch (z > 2 rho): mu0 = -z/2, psi = (0, 1/2, -1/2).
    Both branches agree at z = 2 rho (mu0 = -rho, E = -rho).
    """
    if z < 0.0:
        raise InvalidParameterError(f"z must be >= 0, got {z}")
    if not (rho > 0.0):
        raise InvalidParameterError(f"rho must be positive, got {rho}")
    params = MeanFieldParams(z=z, rho=rho, delta=0.0, phi=phi)
    if z >= 2.0 * rho:
        state = MeanFieldState(0.0, 0.5, -0.5)
        mu = -0.5 * z
    else:
        root = math.sqrt(z * z + 8.0 * rho * rho)
        ph = np.exp(-1j * phi)
        state = MeanFieldState(
            math.sqrt((4.0 - (z / rho) ** 2) / 6.0),
            (z / (4.0 * rho)) * ph,
            -(root / (4.0 * _SQRT3 * rho)) * ph)
        mu = -root / (2.0 * _SQRT3)
    return GroundSolution(state=state, mu=mu,
                          energy=classical_energy(state, params))


def _pure_molecule_solution(params: MeanFieldParams) -> GroundSolution:
    state = MeanFieldState(0.0, 0.5, -0.5)
    mu = 0.5 * (params.delta - params.z)
    return GroundSolution(state=state, mu=mu,
                          energy=classical_energy(state, params))


def _newton_polish(x: float, g: float, e: float, mu: float,
                   z: float, rho: float, delta: float,
                   max_iter: int = 60) -> tuple[np.ndarray, float]:
    """Newton iteration on the real stationarity system; returns (vars, |F|)."""
    v = np.array([x, g, e, mu], dtype=float)

    def f_of(v):
        x, g, e, mu = v
        return np.array([
            2.0 * rho * e * x - mu * x,
            delta * g + z * e - 2.0 * mu * g,
            rho * x * x + z * g + delta * e - 2.0 * mu * e,
            x * x + 2.0 * g * g + 2.0 * e * e - 1.0,
        ])

    best = v.copy()
    best_norm = float(np.linalg.norm(f_of(v)))
    for _ in range(max_iter):
        x, g, e, mu = v
        F = f_of(v)
        J = np.array([
            [2.0 * rho * e - mu, 0.0, 2.0 * rho * x, -x],
            [0.0, delta - 2.0 * mu, z, -2.0 * g],
            [2.0 * rho * x, z, delta - 2.0 * mu, -2.0 * e],
            [2.0 * x, 4.0 * g, 4.0 * e, 0.0],
        ])
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -F, rcond=None)[0]
        v = v + step
        fn = float(np.linalg.norm(f_of(v)))
        if fn < best_norm:
            best, best_norm = v.copy(), fn
        if fn < 1e-14:
            break
    return best, best_norm


def _projected_energy(v: np.ndarray, z: float, rho: float,
                      delta: float) -> float:
    """Energy of the normalized image of v = (x, y, w) on the unit sphere.

    Coordinates are scaled so the sphere is Euclidean: psi = (x, y/sqrt2,
    w/sqrt2) makes |a|^2 + 2(|b_g|^2 + |b_e|^2) = x^2 + y^2 + w^2.
    """
    x, y, w = v / np.linalg.norm(v)
    g = y / math.sqrt(2.0)
    e = w / math.sqrt(2.0)
    return (delta * (g * g + e * e) + 2.0 * z * g * e
            + 2.0 * rho * e * x * x)


def _polished_candidate(x: float, g: float, e: float, mu0: float,
                        real_params: MeanFieldParams) -> GroundSolution | None:
    (x, g, e, mu), f_norm = _newton_polish(x, g, e, mu0, real_params.z,
                                           real_params.rho, real_params.delta)
    if f_norm > 1e-9:
        return None
    if x < 0.0:                # gauge theta = pi flips a alone
        x = -x
    if x == 0.0 and g < 0.0:   # gauge theta = pi/2 flips both molecules
        g, e = -g, -e
    state = MeanFieldState(x, g, e)
    return GroundSolution(state=state, mu=mu,
                          energy=classical_energy(state, real_params))


def ground_state_numeric(params: MeanFieldParams, *,
                         starts: int = 4, seed: int = 7,
                         initial: MeanFieldState | None = None) -> GroundSolution:
    """Ground state for arbitrary detuning by direct energy minimization.

    The phase phi is factored out by gauge (the real phi = 0 problem is
    solved, then e^{-i phi} is reattached to the molecular amplitudes).
    Multi-start sphere descent feeds a Newton polish of the stationarity
    system, and the polished interior candidate competes against the exact
    pure-molecule state.  Reduces to `ground_state_analytic` at delta = 0.

    `initial` switches to continuation mode: Newton starts from the given
    state (typically the solution at a neighboring coupling) and the
    multi-start sweep is skipped when it converges.  Grid sweeps get three
    orders of magnitude faster; isolated calls should leave it unset.
    """
    z, rho, delta = params.z, params.rho, params.delta
    if not (rho > 0.0):
        raise InvalidParameterError(f"rho must be positive, got {rho}")
    # solve the gauge-reduced real problem; the phase is reattached at the end
    real_params = MeanFieldParams(z=z, rho=rho, delta=delta, phi=0.0)
    pure = _pure_molecule_solution(real_params)

    best: GroundSolution | None = None
    if initial is not None:
        x0 = abs(initial.a)
        g0, e0 = abs(initial.b_g), -abs(initial.b_e)
        mu0 = 2.0 * rho * e0 if x0 > 1e-6 else 0.5 * (delta - z)
        best = _polished_candidate(x0, g0, e0, mu0, real_params)
        if (best is not None and abs(best.state.a) < 1e-6
                and abs(z) < 2.0 * rho + max(delta, 0.0)):
            # a pure warm seed cannot leave the a = 0 plane; probe the
            # mixture branch separately so descending sweeps re-enter it
            mix = ground_state_analytic(min(abs(z), 2.0 * rho * (1 - 1e-9)),
                                        rho).state
            other = _polished_candidate(mix.a.real, abs(mix.b_g),
                                        -abs(mix.b_e), 2.0 * rho * mix.b_e.real,
                                        real_params)
            if other is not None and other.energy < best.energy:
                best = other

    if best is None:
        seeds = []
        if abs(z) < 2.0 * rho:
            mix = ground_state_analytic(abs(z), rho).state
            seeds.append([mix.a.real, math.sqrt(2.0) * abs(mix.b_g),
                          -math.sqrt(2.0) * abs(mix.b_e)])
        seeds.append([0.15, 0.699, -0.699])
        seeds.append([0.9, 0.3, -0.3])
        seeds.append([0.5, -0.5, 0.5])
        rng = np.random.default_rng(seed)
        while len(seeds) < starts:
            seeds.append(rng.standard_normal(3))
        for s in seeds[:max(starts, 1)]:
            v0 = np.asarray(s, dtype=float)
            n0 = np.linalg.norm(v0)
            if n0 == 0.0:
                continue
            opt = minimize(_projected_energy, v0 / n0, args=(z, rho, delta),
                           method="BFGS",
                           options={"gtol": 1e-7, "maxiter": 250})
            x, y, w = opt.x / np.linalg.norm(opt.x)
            g, e = y / math.sqrt(2.0), w / math.sqrt(2.0)
            mu0 = 2.0 * rho * e if abs(x) > 1e-6 else 0.5 * (delta - z)
            cand = _polished_candidate(x, g, e, mu0, real_params)
            if cand is not None and (best is None or cand.energy < best.energy):
                best = cand

    if best is None or pure.energy < best.energy:
        best = pure
    elif abs(best.state.a) ** 2 < 1e-14:
        best = pure            # exact zeros beat a 1e-8-level amplitude tail

    # the pure state solves the eigenproblem for any phi; the mixture picks
    # up e^{-i phi} on both molecular amplitudes (same as the closed form)
    if best is not pure and params.phi != 0.0:
        ph = np.exp(-1j * params.phi)
        best = GroundSolution(
            state=MeanFieldState(best.state.a, best.state.b_g * ph,
                                 best.state.b_e * ph),
            mu=best.mu, energy=best.energy)

    res = eigen_residual(best, params)
    if res > RESIDUAL_TOL:
        raise ConvergenceError(
            f"mean-field minimizer residual {res:.3e} above {RESIDUAL_TOL}",
            best_residual=res)
    return best


@dataclass(frozen=True)
class ProfilePoint:
    """One grid point of an energy-derivative profile."""

    z: float
    mu: float
    energy: float
    dEdz: float
    d2Edz2: float
    a2: float
    p1: float
    p2: float


@dataclass(frozen=True)
class EnergyProfile:
    """Central-difference derivative profile of the ground-state energy."""

    points: list[ProfilePoint]
    h: float
    discontinuity_index: int        # left edge of the flagged grid cell
    discontinuity_cell: tuple[float, float]

    @property
    def discontinuity_z(self) -> float:
        lo, hi = self.discontinuity_cell
        return 0.5 * (lo + hi)


def _ground_energy_even(z: float, params: MeanFieldParams,
                        initial: MeanFieldState | None = None) -> GroundSolution:
    """Ground solution at coupling |z| (the energy is even in z)."""
    z = abs(z)
    if params.delta == 0.0:
        return ground_state_analytic(z, params.rho, params.phi)
    return ground_state_numeric(
        MeanFieldParams(z=z, rho=params.rho, delta=params.delta,
                        phi=params.phi), initial=initial)


def energy_derivative_profile(z_grid: np.ndarray, params: MeanFieldParams,
                              fd_step: float | None = None) -> EnergyProfile:
    """E(z), dE/dz, d^2E/dz^2 on a uniform grid, by central differences.

    The stencil step defaults to the grid spacing; edge points use ghost
    evaluations just outside the grid so every row carries derivatives.
    The grid cell with the largest jump of d^2E/dz^2 between neighboring
    points is flagged; it brackets z_c = 2 rho + delta.
    """
    z_grid = np.asarray(z_grid, dtype=float)
    if z_grid.ndim != 1 or z_grid.size < 5:
        raise InvalidParameterError("z grid needs at least 5 points")
    spacing = np.diff(z_grid)
    if np.any(spacing <= 0) or (np.max(spacing) - np.min(spacing)
                                > 1e-9 * np.max(np.abs(spacing))):
        raise InvalidParameterError("z grid must be uniform and increasing")
    h = float(fd_step) if fd_step is not None else float(spacing[0])
    if h <= 0:
        raise InvalidParameterError(f"finite-difference step must be > 0, got {h}")

    points: list[ProfilePoint] = []
    prev: MeanFieldState | None = None
    for zk in z_grid:
        sol = _ground_energy_even(zk, params, initial=prev)
        prev = sol.state
        e_minus = _ground_energy_even(zk - h, params, initial=prev).energy
        e_plus = _ground_energy_even(zk + h, params, initial=prev).energy
        a2, p1, p2 = sol.state.populations()
        points.append(ProfilePoint(
            z=float(zk), mu=sol.mu, energy=sol.energy,
            dEdz=(e_plus - e_minus) / (2.0 * h),
            d2Edz2=(e_plus - 2.0 * sol.energy + e_minus) / (h * h),
            a2=a2, p1=p1, p2=p2))

    curv = np.array([p.d2Edz2 for p in points])
    jumps = np.abs(np.diff(curv))
    i = int(np.argmax(jumps))
    return EnergyProfile(points=points, h=h, discontinuity_index=i,
                         discontinuity_cell=(points[i].z, points[i + 1].z))
