"""Adiabatic loop dynamics and the ground-state geometric phase.

The amplitude triple evolves under

    i da/dt  = 2 rho e^{i phi} a* b_e
    i dbg/dt = Delta b_g + z b_e
    i dbe/dt = rho e^{-i phi} a^2 + z b_g + Delta b_e

and the coupling phase is ramped linearly, phi(t) = 2 pi t / T.  The total
phase lambda = arg(a) is accumulated per accepted integrator step (never by
after-the-fact unwrapping); in the pure molecule phase, where a = 0, it is
tracked through arg(b_g)/2 instead, because the molecular modes carry phase
2 lambda + q_i.  Subtracting the dynamical part -mu0 T and reducing into
(-pi, pi] leaves the geometric phase: pi/3 in the mixture phase, 0 in the
pure molecule phase.

The canonical picture uses p1 = |b_g|^2, p2 = |b_e|^2 and the relative
phases q_i = arg(b_i) - 2 arg(a), with Hamiltonian

    H = Delta (p1 + p2) + 2 z sqrt(p1 p2) cos(q1 - q2)
        + 2 rho sqrt(p2) (1 - 2(p1 + p2)) cos(q2 + phi)

(the detuning term vanishes in the zero-detuning loops studied here) and
d lambda/dt = -2 rho sqrt(p2) cos(q2 + phi).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (IntegrationError, InvalidParameterError,
                     SingularCoordinatesError, StepSizeError)
from .meanfield import (GroundSolution, MeanFieldParams, MeanFieldState,
                        ground_state_analytic, ground_state_numeric)

TWO_PI = 2.0 * math.pi

# below this |amplitude|^2 the mode's phase is treated as undefined
EPS_FLOOR = 1e-12

NORM_DRIFT_LIMIT = 1e-6


def _wrap_pi(x: float) -> float:
    """Reduce into (-pi, pi]."""
    w = math.remainder(x, TWO_PI)
    if w <= -math.pi:
        w += TWO_PI
    return w


# ---------------------------------------------------------------------------
# equations of motion
# ---------------------------------------------------------------------------

def eom_cartesian(state: MeanFieldState, params: MeanFieldParams) -> np.ndarray:
    """Time derivative (da/dt, dbg/dt, dbe/dt) of a normalized state."""
    ph = cmath.exp(1j * params.phi)
    a, bg, be = state.a, state.b_g, state.b_e
    return np.array([
        -1j * (2.0 * params.rho * ph * a.conjugate() * be),
        -1j * (params.delta * bg + params.z * be),
        -1j * (params.rho * a * a / ph + params.z * bg + params.delta * be),
    ])


@dataclass(frozen=True)
class CanonicalState:
    """Molecular populations, relative phases, and the total phase.

    p1 = |b_g|^2, p2 = |b_e|^2, q_i = arg(b_i) - 2 arg(a), lam = arg(a)
    (unwrapped).  Valid states keep p1, p2 >= 0 and p1 + p2 <= 1/2 so the
    atomic population 1 - 2(p1 + p2) stays non-negative.
    """

    p1: float
    q1: float
    p2: float
    q2: float
    lam: float


def canonical_from_amplitudes(state: MeanFieldState) -> CanonicalState:
    """Forward change of variables; requires |a| > 0."""
    if abs(state.a) == 0.0:
        raise SingularCoordinatesError(
            "arg(a) undefined: atomic amplitude vanishes")
    lam = cmath.phase(state.a)
    return CanonicalState(
        p1=abs(state.b_g) ** 2,
        q1=_wrap_pi(cmath.phase(state.b_g) - 2.0 * lam) if abs(state.b_g) > 0 else 0.0,
        p2=abs(state.b_e) ** 2,
        q2=_wrap_pi(cmath.phase(state.b_e) - 2.0 * lam) if abs(state.b_e) > 0 else 0.0,
        lam=lam)


def amplitudes_from_canonical(c: CanonicalState) -> MeanFieldState:
    """Inverse change of variables (exact round trip while |a| > 0)."""
    if c.p1 < 0 or c.p2 < 0 or c.p1 + c.p2 > 0.5 + 1e-12:
        raise InvalidParameterError(
            f"populations out of range: p1={c.p1}, p2={c.p2}")
    a2 = max(1.0 - 2.0 * (c.p1 + c.p2), 0.0)
    return MeanFieldState(
        math.sqrt(a2) * cmath.exp(1j * c.lam),
        math.sqrt(c.p1) * cmath.exp(1j * (2.0 * c.lam + c.q1)),
        math.sqrt(c.p2) * cmath.exp(1j * (2.0 * c.lam + c.q2)))


def hamilton_rhs(c: CanonicalState, params: MeanFieldParams) -> np.ndarray:
    """Canonical derivatives (dp1, dq1, dp2, dq2, dlam)/dt.

    Because the q_i are phase differences (minus the natural angle
    variables of the modes), the pairing carries dp_i/dt = +dH/dq_i and
    dq_i/dt = -dH/dp_i; this is the unique sign choice consistent with the
    amplitude equations of motion, and the fixed points are unaffected.
    The total phase obeys d lam/dt = -2 rho sqrt(p2) cos(q2 + phi).
    Requires p1, p2 above the coordinate floor; the Cartesian path has no
    such restriction.
    """
    if c.p1 <= EPS_FLOOR or c.p2 <= EPS_FLOOR:
        raise SingularCoordinatesError(
            f"populations below floor {EPS_FLOOR}: p1={c.p1}, p2={c.p2}")
    z, rho, delta, phi = params.z, params.rho, params.delta, params.phi
    sp1, sp2 = math.sqrt(c.p1), math.sqrt(c.p2)
    cq = math.cos(c.q1 - c.q2)
    sq = math.sin(c.q1 - c.q2)
    c2 = math.cos(c.q2 + phi)
    s2 = math.sin(c.q2 + phi)
    atom = 1.0 - 2.0 * (c.p1 + c.p2)

    dp1 = -2.0 * z * sp1 * sp2 * sq
    dp2 = 2.0 * z * sp1 * sp2 * sq - 2.0 * rho * sp2 * atom * s2
    dq1 = -(delta + z * (sp2 / sp1) * cq - 4.0 * rho * sp2 * c2)
    dq2 = -(delta + z * (sp1 / sp2) * cq
            + rho * (atom / sp2 - 4.0 * sp2) * c2)
    dlam = -2.0 * rho * sp2 * c2
    return np.array([dp1, dq1, dp2, dq2, dlam])


# ---------------------------------------------------------------------------
# adaptive embedded Runge-Kutta 5(4) core
# ---------------------------------------------------------------------------

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784,
                   11 / 84, 0.0])
_DP_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200,
                  22 / 525, -1 / 40])   # b5 - b4


def _dopri5(f: Callable[[float, np.ndarray], np.ndarray], t0: float,
            y0: np.ndarray, t_end: float, rtol: float, atol: float,
            on_accept: Callable[[float, np.ndarray, float, np.ndarray], None],
            max_steps: int = 5_000_000) -> np.ndarray:
    """Dormand-Prince 5(4) with FSAL; calls `on_accept` per accepted step."""
    t = t0
    y = y0.copy()
    span = t_end - t0
    h = min(1e-2, span / 100.0) if span > 0 else span
    k1 = f(t, y)
    steps = 0
    while t < t_end:
        if steps >= max_steps:
            raise IntegrationError(f"step budget exhausted at t={t}")
        h = min(h, t_end - t)
        k = [k1]
        for i in range(1, 7):
            yi = y + h * sum(a * k[j] for j, a in enumerate(_DP_A[i]))
            k.append(f(t + _DP_C[i] * h, yi))
        y5 = y + h * sum(b * k[j] for j, b in enumerate(_DP_B5) if b != 0.0)
        err_vec = h * sum(e * k[j] for j, e in enumerate(_DP_E) if e != 0.0)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
        err = math.sqrt(float(np.mean(np.abs(err_vec / scale) ** 2)))
        steps += 1
        if err <= 1.0:
            on_accept(t, y, t + h, y5)
            t += h
            y = y5
            k1 = k[6]          # FSAL: last stage sits at (t + h, y5)
        else:
            k1 = k[0]
        # conservative safety keeps accumulated drift well below the
        # per-step budget over 1e4..1e5-step loops
        factor = 0.5 * err ** -0.2 if err > 0 else 5.0
        h *= min(5.0, max(0.2, factor))
        if h <= 1e-14 * max(1.0, abs(span)):
            raise IntegrationError(f"step size underflow at t={t}")
    return y


# ---------------------------------------------------------------------------
# loop integration and phase extraction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """Sampled points of one integration (at accepted integrator steps)."""

    t: np.ndarray
    phi: np.ndarray
    psi: np.ndarray        # shape (n, 3) complex
    lam: np.ndarray        # accumulated total phase
    norm: np.ndarray
    p1: np.ndarray
    p2: np.ndarray


@dataclass(frozen=True)
class LoopResult:
    """Phases accumulated around one adiabatic phi loop.

    lambda_g = lambda_total - lambda_dynamic reduced into (-pi, pi];
    mean_p1 is the time average of |b_g|^2 over the loop (the loop's
    ground-molecule population observable).
    """

    T: float
    mu0: float
    lambda_total: float
    lambda_dynamic: float
    lambda_g: float
    mean_p1: float
    max_norm_drift: float
    trajectory: Trajectory | None = None


class _PhaseTracker:
    """Accumulates the total phase and records trajectory rows."""

    def __init__(self, lam0: float, keep: bool):
        self.lam = lam0
        self.max_drift = 0.0
        self.p1_integral = 0.0
        self.keep = keep
        self.rows: list[tuple] = []

    def step(self, t0: float, y0: np.ndarray, t1: float, y1: np.ndarray,
             phi_of_t: Callable[[float], float]) -> None:
        if abs(y0[0]) ** 2 > EPS_FLOOR and abs(y1[0]) ** 2 > EPS_FLOOR:
            d = _wrap_pi(cmath.phase(y1[0]) - cmath.phase(y0[0]))
        else:
            d = 0.5 * _wrap_pi(cmath.phase(y1[1]) - cmath.phase(y0[1]))
        if abs(d) >= math.pi / 2.0:
            raise StepSizeError(
                f"phase jump {d:.3f} rad in one step at t={t1}; "
                "tighten the integration tolerances")
        self.lam += d
        norm = (abs(y1[0]) ** 2
                + 2.0 * (abs(y1[1]) ** 2 + abs(y1[2]) ** 2))
        drift = abs(norm - 1.0)
        if drift > self.max_drift:
            self.max_drift = drift
        if drift > NORM_DRIFT_LIMIT:
            raise IntegrationError(
                f"norm drift {drift:.3e} beyond {NORM_DRIFT_LIMIT} at t={t1}")
        h = t1 - t0
        self.p1_integral += 0.5 * h * (abs(y0[1]) ** 2 + abs(y1[1]) ** 2)
        if self.keep:
            self.rows.append((t1, phi_of_t(t1), y1.copy(), self.lam, norm))

    def trajectory(self, t0: float, y0: np.ndarray, phi0: float, lam0: float,
                   samples: int) -> Trajectory | None:
        if not self.keep:
            return None
        norm0 = abs(y0[0]) ** 2 + 2.0 * (abs(y0[1]) ** 2 + abs(y0[2]) ** 2)
        rows = [(t0, phi0, y0.copy(), lam0, norm0)] + self.rows
        n = len(rows)
        take = np.unique(np.round(np.linspace(0, n - 1,
                                              min(samples, n))).astype(int))
        t = np.array([rows[i][0] for i in take])
        phi = np.array([rows[i][1] for i in take])
        psi = np.array([rows[i][2] for i in take])
        lam = np.array([rows[i][3] for i in take])
        norm = np.array([rows[i][4] for i in take])
        return Trajectory(t=t, phi=phi, psi=psi, lam=lam, norm=norm,
                          p1=np.abs(psi[:, 1]) ** 2, p2=np.abs(psi[:, 2]) ** 2)


def _ground_solution(params: MeanFieldParams) -> GroundSolution:
    if params.delta == 0.0:
        return ground_state_analytic(params.z, params.rho, params.phi)
    return ground_state_numeric(params)


def integrate_loop(params: MeanFieldParams, T: float, *,
                   rtol: float = 1e-10, atol: float = 1e-12,
                   samples: int = 0) -> LoopResult:
    """Drive phi once around 0 -> 2 pi in time T from the phi = 0 ground state.

    Set `samples` > 0 to keep that many trajectory rows.  Raises
    IntegrationError if the norm drifts beyond 1e-6 and StepSizeError if a
    single step rotates the tracked phase by pi/2 or more.
    """
    if T <= 0:
        raise InvalidParameterError(f"loop period must be positive, got {T}")
    start = MeanFieldParams(z=params.z, rho=params.rho, delta=params.delta,
                            phi=0.0)
    ground = _ground_solution(start)
    mu0 = ground.mu
    y0 = ground.state.as_array()
    omega = TWO_PI / T

    z, rho, delta = params.z, params.rho, params.delta

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        ph = cmath.exp(1j * (omega * t))
        a, bg, be = y
        return np.array([
            -1j * (2.0 * rho * ph * a.conjugate() * be),
            -1j * (delta * bg + z * be),
            -1j * (rho * a * a / ph + z * bg + delta * be),
        ])

    tracker = _PhaseTracker(lam0=0.0, keep=samples > 0)
    _dopri5(rhs, 0.0, y0, T, rtol, atol,
            lambda t0, a, t1, b: tracker.step(t0, a, t1, b,
                                              lambda t: omega * t))
    lambda_total = tracker.lam
    lambda_dynamic = -mu0 * T
    return LoopResult(
        T=T, mu0=mu0,
        lambda_total=lambda_total,
        lambda_dynamic=lambda_dynamic,
        lambda_g=_wrap_pi(lambda_total - lambda_dynamic),
        mean_p1=tracker.p1_integral / T,
        max_norm_drift=tracker.max_drift,
        trajectory=tracker.trajectory(0.0, y0, 0.0, 0.0, samples))


@dataclass(frozen=True)
class EvolutionResult:
    """Endpoint of a fixed-parameter evolution."""

    state: MeanFieldState
    lambda_total: float
    max_norm_drift: float
    trajectory: Trajectory | None = None


def evolve(state0: MeanFieldState, params: MeanFieldParams, t_final: float, *,
           rtol: float = 1e-10, atol: float = 1e-12,
           samples: int = 0) -> EvolutionResult:
    """Propagate a state under fixed parameters (phi held constant)."""
    if t_final <= 0:
        raise InvalidParameterError(f"t_final must be positive, got {t_final}")
    y0 = state0.as_array()
    z, rho, delta = params.z, params.rho, params.delta
    ph = cmath.exp(1j * params.phi)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        a, bg, be = y
        return np.array([
            -1j * (2.0 * rho * ph * a.conjugate() * be),
            -1j * (delta * bg + z * be),
            -1j * (rho * a * a / ph + z * bg + delta * be),
        ])

    lam0 = cmath.phase(y0[0]) if abs(y0[0]) ** 2 > EPS_FLOOR else 0.0
    tracker = _PhaseTracker(lam0=lam0, keep=samples > 0)
    y_end = _dopri5(rhs, 0.0, y0, t_final, rtol, atol,
                    lambda t0, a, t1, b: tracker.step(t0, a, t1, b,
                                                      lambda t: params.phi))
    return EvolutionResult(
        state=MeanFieldState.from_array(y_end),
        lambda_total=tracker.lam,
        max_norm_drift=tracker.max_drift,
        trajectory=tracker.trajectory(0.0, y0, params.phi, lam0, samples))


@dataclass(frozen=True)
class CanonicalLoopResult:
    """Endpoint of a loop integrated in canonical coordinates."""

    final: CanonicalState
    lambda_total: float


def integrate_loop_canonical(params: MeanFieldParams, T: float, *,
                             rtol: float = 1e-10,
                             atol: float = 1e-12) -> CanonicalLoopResult:
    """Reference loop integration in (p1, q1, p2, q2, lam) coordinates.

    Exists to cross-check the Cartesian path; it fails with
    SingularCoordinatesError whenever a population touches the floor, so
    production runs use `integrate_loop`.
    """
    if T <= 0:
        raise InvalidParameterError(f"loop period must be positive, got {T}")
    start = MeanFieldParams(z=params.z, rho=params.rho, delta=params.delta,
                            phi=0.0)
    ground = _ground_solution(start)
    c0 = canonical_from_amplitudes(ground.state)
    y0 = np.array([c0.p1, c0.q1, c0.p2, c0.q2, c0.lam])
    omega = TWO_PI / T

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        c = CanonicalState(p1=y[0], q1=y[1], p2=y[2], q2=y[3], lam=y[4])
        inst = MeanFieldParams(z=params.z, rho=params.rho,
                               delta=params.delta, phi=(omega * t) % TWO_PI)
        return hamilton_rhs(c, inst)

    y_end = _dopri5(rhs, 0.0, y0, T, rtol, atol, lambda *args: None)
    final = CanonicalState(p1=float(y_end[0]), q1=float(y_end[1]),
                           p2=float(y_end[2]), q2=float(y_end[3]),
                           lam=float(y_end[4]))
    return CanonicalLoopResult(final=final,
                               lambda_total=final.lam - c0.lam)


# ---------------------------------------------------------------------------
# analytic references
# ---------------------------------------------------------------------------

def berry_phase_linearized(z: float, rho: float = 1.0) -> float:
    """Linearized-comparator loop phase (pi/6)(2 + z^2 / rho^2).

    Comes from treating the ground state as an eigenstate of a linear
    problem; valid input range is the mixture phase 0 <= z <= 2 rho.  It
    coincides with the true geometric phase only at z = 0 and diverges
    from the constant pi/3 as z grows.
    """
    if z < 0.0 or z > 2.0 * rho:
        raise InvalidParameterError(
            f"defined for 0 <= z <= 2 rho, got z={z}, rho={rho}")
    return (math.pi / 6.0) * (2.0 + (z / rho) ** 2)


def ground_fixed_point_populations(z: float, rho: float = 1.0) -> tuple[float, float]:
    """(p1, p2) of the ground fixed point: (z^2/16rho^2, (z^2+8rho^2)/48rho^2)
    in the mixture phase, (1/4, 1/4) in the pure molecule phase."""
    if z >= 2.0 * rho:
        return 0.25, 0.25
    return (z * z / (16.0 * rho * rho),
            (z * z + 8.0 * rho * rho) / (48.0 * rho * rho))


def population_response_rate(z: float, rho: float, dphi_dt: float) -> float:
    """First-order shift of p2 induced by a slow phi ramp (mixture phase)."""
    if not (0.0 < z < 2.0 * rho):
        raise InvalidParameterError("defined in the mixture phase 0 < z < 2 rho")
    p1, p2 = ground_fixed_point_populations(z, rho)
    num = 2.0 * math.sqrt(p2) * (z * p2 + z * p1 - 4.0 * rho * p1 ** 1.5)
    den = rho * (z * (1.0 + 6.0 * p2 + 6.0 * p1) - 16.0 * rho * p1 ** 1.5)
    return num / den * dphi_dt


def phase_rate_first_order(z: float, rho: float, dphi_dt: float) -> float:
    """First-order phase rate at the dragged fixed point.

    Algebraically equal to dphi_dt / 6 for every 0 < z < 2 rho, which is
    what integrates to the pi/3 loop phase.
    """
    if not (0.0 < z < 2.0 * rho):
        raise InvalidParameterError("defined in the mixture phase 0 < z < 2 rho")
    p1, p2 = ground_fixed_point_populations(z, rho)
    dp2 = population_response_rate(z, rho, dphi_dt)
    return ((-2.0 * p2 * math.sqrt(p1) * z
             + rho * (p2 * (6.0 * p2 + 6.0 * p1 - 1.0) + dp2))
            / math.sqrt(p2))
