"""Time integration of the selection dynamics by two independent schemes.

The density obeys du/dt = G(x, rho) u with G(x, rho) =
b(x)/(1 + c0*rho) - d(x)*rho and rho the trapezoid mass of u.  Because the
right-hand side is multiplicative, the solution factorizes through two
cumulative exponents

    A(t) = integral_0^t 1/(1 + c0*rho(s)) ds,
    B(t) = integral_0^t rho(s) ds,
    u(x, t) = u0(x) * exp(b(x) * A(t) - d(x) * B(t)),

which collapses the dynamics to a 2-D ODE in (A, B).  The *exponential*
scheme integrates that ODE with classical RK4 (one mass quadrature per
stage) and reconstructs log u exactly from (A, B); positivity and the
support set are then exact by construction, and densities are stored in
log space so blow-up runs keep producing finite diagnostics long after
exp(log u) would overflow.

The *direct* scheme is an independent cross-check: method-of-lines RK4 on
the full per-node density vector, with the mass recomputed at every stage.
It knows nothing about the exponent reduction, so agreement between the
two schemes validates both.

Steps are pure functions from state to state; fixed dt keeps runs
reproducible (identical scenario and dt give bit-identical trajectories).
"""

from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import diagnostics
from .model import (
    EquilibriumPrediction,
    Scenario,
    fitness_on_nodes,
    predict_equilibrium,
    quadrature,
    trapezoid_weights,
)

__all__ = [
    "IntegrationError",
    "ExponentOverflow",
    "PopulationState",
    "DensitySnapshot",
    "Trajectory",
    "CORRIDOR_TOL",
    "STOP_WINDOW",
    "init_state",
    "rho_from_exponents",
    "step_exponential",
    "step_direct",
    "run",
    "scenario_fingerprint",
]

#: slack used when flagging corridor breaches in sampled records
CORRIDOR_TOL = 1e-6

#: consecutive samples inside stop_tol required before stopping early
STOP_WINDOW = 100

#: largest exponent exp() can represent in double precision
_LOG_MAX = math.log(np.finfo(float).max)

#: below this max log-density the mass is summed without shifting
_SAFE_EXP = 600.0


class IntegrationError(RuntimeError):
    """A step failed (overflow or NaN); ``partial`` holds the trajectory so far."""

    def __init__(self, message: str, partial: "Trajectory | None" = None):
        super().__init__(message)
        self.partial = partial


class ExponentOverflow(IntegrationError):
    """The total mass overflows double precision even after max shifting."""

    def __init__(self, message: str, exponent: float):
        super().__init__(message)
        self.exponent = exponent


@dataclass(frozen=True)
class PopulationState:
    """Solver state at time t.

    ``log_u`` holds per-node log densities with -inf marking empty cells;
    under the exponential scheme it equals log u0 + b*A - d*B on the
    support at every step, and nodes outside the initial support stay at
    -inf forever.  ``rho`` caches the trapezoid mass of exp(log_u).
    ``undershoot_clamps`` counts direct-scheme negative values clipped to
    zero (always 0 for the exponential scheme).
    """

    t: float
    A: float
    B: float
    log_u: np.ndarray
    rho: float
    undershoot_clamps: int = 0


@dataclass(frozen=True)
class DensitySnapshot:
    requested_t: float
    t: float
    log_u: np.ndarray


@dataclass
class Trajectory:
    """Result of :func:`run`: sampled diagnostics plus optional snapshots."""

    scenario: Scenario
    prediction: EquilibriumPrediction
    fingerprint: str
    records: list[diagnostics.DiagnosticsRecord]
    snapshots: list[DensitySnapshot] = field(default_factory=list)
    breaches: list[str] = field(default_factory=list)
    final_state: PopulationState | None = None
    early_stop_t: float | None = None


@dataclass(frozen=True)
class _Tables:
    """Support-restricted arrays shared by every step of a run."""

    support: np.ndarray
    b_s: np.ndarray
    d_s: np.ndarray
    log_u0_s: np.ndarray
    w_s: np.ndarray
    w_full: np.ndarray


@lru_cache(maxsize=64)
def _tables(scenario: Scenario) -> _Tables:
    support = np.flatnonzero(scenario.support_mask)
    w_full = trapezoid_weights(scenario.grid)
    with np.errstate(divide="ignore"):
        log_u0_s = np.log(scenario.u0_nodes[support])
    return _Tables(
        support=support,
        b_s=scenario.b_nodes[support].copy(),
        d_s=scenario.d_nodes[support].copy(),
        log_u0_s=log_u0_s,
        w_s=w_full[support].copy(),
        w_full=w_full,
    )


def scenario_fingerprint(scenario: Scenario) -> str:
    """Stable hex digest of everything that determines a trajectory."""
    parts = [
        f"x_min={scenario.grid.x_min!r}",
        f"x_max={scenario.grid.x_max!r}",
        f"n_cells={scenario.grid.n_cells}",
        f"c0={scenario.c0!r}",
        f"b={scenario.b.source}",
        f"d={scenario.d.source}",
        f"u0={scenario.u0.source}",
        f"t_end={scenario.t_end!r}",
        f"dt={scenario.dt!r}",
        f"sample_every={scenario.sample_every}",
        f"scheme={scenario.scheme}",
        f"stop_tol={scenario.stop_tol!r}",
        f"snapshot_times={scenario.snapshot_times!r}",
        f"epsilon={scenario.epsilon!r}",
        f"tail_R={scenario.tail_R!r}",
    ]
    return hashlib.sha256("\n".join(parts).encode()).hexdigest()[:16]


def init_state(scenario: Scenario) -> PopulationState:
    """State at t = 0 with A = B = 0 and log_u taken from u0."""
    scenario.validate()
    u0 = scenario.u0_nodes
    rho0 = quadrature(u0, scenario.grid)
    if not (rho0 > 0.0):
        raise ValueError("u0 has zero initial mass (empty support)")
    with np.errstate(divide="ignore"):
        log_u = np.log(u0)
    log_u.setflags(write=False)
    return PopulationState(t=0.0, A=0.0, B=0.0, log_u=log_u, rho=rho0)


def _mass_at(t: _Tables, A: float, B: float) -> float:
    """Mass quadrature at exponents (A, B); the solver's innermost kernel.

    Plain summation while the largest density exponent is representable,
    max-shifted (log-sum-exp) otherwise; numpy's default error state already
    flushes underflow to zero, which is the wanted behavior for dying tails.
    """
    e = t.b_s * A
    e -= t.d_s * B
    e += t.log_u0_s
    m = float(e.max())
    if m <= _SAFE_EXP:
        np.exp(e, out=e)
        return float(t.w_s @ e)
    e -= m
    np.exp(e, out=e)
    log_rho = m + math.log(float(t.w_s @ e))
    if log_rho > _LOG_MAX:
        raise ExponentOverflow(
            f"total mass overflows: log rho = {log_rho:.6g} "
            f"(largest density exponent {m:.6g})",
            exponent=m,
        )
    return math.exp(log_rho)


def rho_from_exponents(A: float, B: float, scenario: Scenario) -> float:
    """Total mass of the closed-form density u0 * exp(b*A - d*B).

    Evaluated under a max shift (log-sum-exp) whenever exponentials could
    overflow; raises :class:`ExponentOverflow` only when the mass itself
    exceeds double range.
    """
    if not (math.isfinite(A) and math.isfinite(B)):
        raise ExponentOverflow(
            f"non-finite exponents A={A!r}, B={B!r}", exponent=math.inf
        )
    return _mass_at(_tables(scenario), A, B)


def _exponent_log_u(A: float, B: float, scenario: Scenario) -> np.ndarray:
    t = _tables(scenario)
    log_u = np.full(scenario.grid.n_nodes, -np.inf)
    log_u[t.support] = t.log_u0_s + t.b_s * A - t.d_s * B
    log_u.setflags(write=False)
    return log_u


def _advance_exponential(
    t: _Tables, c0: float, A: float, B: float, rho: float, dt: float
) -> tuple[float, float, float]:
    """One RK4 step of A' = 1/(1 + c0*rho(A, B)), B' = rho(A, B).

    ``rho`` must equal the mass at (A, B); the first stage reuses it, the
    refreshed mass at the new point is returned for the next step.
    """
    k1a = 1.0 / (1.0 + c0 * rho)
    k1b = rho
    k2b = _mass_at(t, A + 0.5 * dt * k1a, B + 0.5 * dt * k1b)
    k2a = 1.0 / (1.0 + c0 * k2b)
    k3b = _mass_at(t, A + 0.5 * dt * k2a, B + 0.5 * dt * k2b)
    k3a = 1.0 / (1.0 + c0 * k3b)
    k4b = _mass_at(t, A + dt * k3a, B + dt * k3b)
    k4a = 1.0 / (1.0 + c0 * k4b)
    A1 = A + dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
    B1 = B + dt / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
    return A1, B1, _mass_at(t, A1, B1)


def step_exponential(state: PopulationState, dt: float, scenario: Scenario) -> PopulationState:
    """One RK4 step of A' = 1/(1 + c0*rho(A, B)), B' = rho(A, B).

    log_u and rho are refreshed exactly from the new (A, B), so support and
    positivity carry no time-stepping error.
    """
    if not (dt > 0.0):
        raise ValueError(f"dt must be > 0, got {dt}")
    A1, B1, rho1 = _advance_exponential(
        _tables(scenario), scenario.c0, state.A, state.B, state.rho, dt
    )
    return PopulationState(
        t=state.t + dt,
        A=A1,
        B=B1,
        log_u=_exponent_log_u(A1, B1, scenario),
        rho=rho1,
        undershoot_clamps=state.undershoot_clamps,
    )


def step_direct(state: PopulationState, dt: float, scenario: Scenario) -> PopulationState:
    """One RK4 step of the per-node system u_i' = G(x_i, rho) u_i.

    The mass is recomputed by quadrature at every stage.  Nodes at exactly
    zero stay exactly zero (multiplicative right-hand side); negative
    undershoot from the RK4 combination is clipped to zero and counted.
    """
    if not (dt > 0.0):
        raise ValueError(f"dt must be > 0, got {dt}")
    t = _tables(scenario)
    max_log = float(np.max(state.log_u))
    if max_log > _LOG_MAX:
        raise ExponentOverflow(
            f"density overflows double precision at t = {state.t:.6g} "
            f"(max log density {max_log:.6g}); the direct scheme cannot continue",
            exponent=max_log,
        )
    with np.errstate(under="ignore"):
        u = np.exp(state.log_u)

    def mass(v: np.ndarray) -> float:
        return float(t.w_full @ v)

    def rates(rho: float) -> np.ndarray:
        return fitness_on_nodes(rho, scenario)

    r1 = state.rho
    k1 = rates(r1) * u
    u2 = u + 0.5 * dt * k1
    r2 = mass(u2)
    k2 = rates(r2) * u2
    u3 = u + 0.5 * dt * k2
    r3 = mass(u3)
    k3 = rates(r3) * u3
    u4 = u + dt * k3
    r4 = mass(u4)
    k4 = rates(r4) * u4

    u_new = u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    negative = u_new < 0.0
    clamps = int(np.count_nonzero(negative))
    if clamps:
        u_new = np.where(negative, 0.0, u_new)
    if not np.all(np.isfinite(u_new)):
        raise IntegrationError(
            f"non-finite density after direct step at t = {state.t:.6g} "
            f"(dt = {dt:.6g}); reduce dt"
        )
    rho_new = mass(u_new)
    c0 = scenario.c0
    A1 = state.A + dt / 6.0 * (
        1.0 / (1.0 + c0 * r1)
        + 2.0 / (1.0 + c0 * r2)
        + 2.0 / (1.0 + c0 * r3)
        + 1.0 / (1.0 + c0 * r4)
    )
    B1 = state.B + dt / 6.0 * (r1 + 2.0 * r2 + 2.0 * r3 + r4)
    with np.errstate(divide="ignore"):
        log_u = np.log(u_new)
    log_u.setflags(write=False)
    return PopulationState(
        t=state.t + dt,
        A=A1,
        B=B1,
        log_u=log_u,
        rho=rho_new,
        undershoot_clamps=state.undershoot_clamps + clamps,
    )


def _step_count(t_end: float, dt: float) -> int:
    n = int(round(t_end / dt))
    if abs(n * dt - t_end) > 1e-9 * max(1.0, abs(t_end)):
        warnings.warn(
            f"t_end = {t_end!r} is not an integer multiple of dt = {dt!r}; "
            f"integrating {n} steps to t = {n * dt!r}",
            stacklevel=3,
        )
    return n


def run(scenario: Scenario) -> Trajectory:
    """Integrate to t_end with fixed dt, sampling diagnostics as configured.

    A diagnostics record is emitted at t = 0, every ``sample_every`` steps
    and at the final step.  Sampled masses outside the a priori corridor
    (with :data:`CORRIDOR_TOL` slack) are recorded as breaches, not errors.
    With ``stop_tol`` set, the run stops once |rho - rho_bar| and W stay
    below it for :data:`STOP_WINDOW` consecutive samples.  Step failures
    raise :class:`IntegrationError` with the partial trajectory attached.
    """
    scenario.validate()
    pred = predict_equilibrium(scenario)
    state = init_state(scenario)
    dt = scenario.dt
    exponential = scenario.scheme == "exponential"
    tables = _tables(scenario)
    n_steps = _step_count(scenario.t_end, dt)
    snapshot_steps: dict[int, float] = {
        int(round(tau / dt)): tau for tau in scenario.snapshot_times
    }

    trajectory = Trajectory(
        scenario=scenario,
        prediction=pred,
        fingerprint=scenario_fingerprint(scenario),
        records=[diagnostics.make_record(state, scenario, pred)],
        final_state=state,
    )
    if 0 in snapshot_steps:
        trajectory.snapshots.append(
            DensitySnapshot(snapshot_steps[0], state.t, state.log_u)
        )

    def refreshed(s: PopulationState) -> PopulationState:
        # the exponential fast path reuses stale log_u between samples;
        # anything leaving this function gets the exact density for (A, B)
        if not exponential:
            return s
        return PopulationState(
            t=s.t,
            A=s.A,
            B=s.B,
            log_u=_exponent_log_u(s.A, s.B, scenario),
            rho=s.rho,
            undershoot_clamps=s.undershoot_clamps,
        )

    lo = pred.rho_m - CORRIDOR_TOL
    hi = pred.rho_M + CORRIDOR_TOL
    stop_streak = 0
    for k in range(1, n_steps + 1):
        try:
            if exponential:
                # advance the 2-D exponent system; materialize the density
                # only when something observes it
                A1, B1, rho1 = _advance_exponential(
                    tables, scenario.c0, state.A, state.B, state.rho, dt
                )
                observed = (
                    k % scenario.sample_every == 0
                    or k == n_steps
                    or k in snapshot_steps
                )
                state = PopulationState(
                    t=state.t + dt,
                    A=A1,
                    B=B1,
                    log_u=_exponent_log_u(A1, B1, scenario)
                    if observed
                    else state.log_u,
                    rho=rho1,
                )
            else:
                state = step_direct(state, dt, scenario)
        except IntegrationError as err:
            trajectory.final_state = refreshed(state)
            err.partial = trajectory
            raise
        if k in snapshot_steps:
            trajectory.snapshots.append(
                DensitySnapshot(snapshot_steps[k], state.t, state.log_u)
            )
        if k % scenario.sample_every == 0 or k == n_steps:
            rec = diagnostics.make_record(state, scenario, pred)
            trajectory.records.append(rec)
            if not (lo <= rec.rho <= hi):
                trajectory.breaches.append(
                    f"corridor breach at t = {rec.t:.6g}: rho = {rec.rho!r} "
                    f"outside [{pred.rho_m!r}, {pred.rho_M!r}]"
                )
            if scenario.stop_tol is not None:
                near = (
                    abs(rec.rho - pred.rho_bar) < scenario.stop_tol
                    and rec.W < scenario.stop_tol
                )
                stop_streak = stop_streak + 1 if near else 0
                if stop_streak >= STOP_WINDOW:
                    trajectory.early_stop_t = rec.t
                    break
    trajectory.final_state = refreshed(state)
    return trajectory
