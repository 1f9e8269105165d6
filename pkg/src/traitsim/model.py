"""Static problem analysis for the trait-selection model.

The dynamics couple a per-trait density u(x, t) to its total mass
rho(t) = integral of u dx through the fitness

    G(x, rho) = b(x) / (1 + c0 * rho) - d(x) * rho.

This module holds the problem description (:class:`Grid`,
:class:`Scenario`) and everything that can be said before integrating:
certified bounds of b and d on the grid, the predicted limit trait
``x_bar`` and limit mass ``rho_bar``, the a priori corridor trapping
rho(t), and the tail certificate for unbounded supports.

All functions here are pure and all types immutable, so they are safe to
share across threads.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .exprlang import TraitFunction

__all__ = [
    "AssumptionWarning",
    "Grid",
    "Scenario",
    "EquilibriumPrediction",
    "SCHEMES",
    "positive_root",
    "equilibrium_mass",
    "eval_fitness",
    "fitness_on_nodes",
    "quadrature",
    "trapezoid_weights",
    "support_runs",
    "closure_mask",
    "predict_equilibrium",
    "apriori_corridor",
    "check_tail_condition",
]

SCHEMES = ("exponential", "direct")


class AssumptionWarning(UserWarning):
    """A model assumption is violated or unverifiable; results may not apply."""


@dataclass(frozen=True)
class Grid:
    """Uniform node grid on [x_min, x_max] with n_cells cells (n_cells + 1 nodes)."""

    x_min: float
    x_max: float
    n_cells: int

    def __post_init__(self):
        if not (self.x_min < self.x_max):
            raise ValueError(f"grid needs x_min < x_max, got [{self.x_min}, {self.x_max}]")
        if self.n_cells < 2:
            raise ValueError(f"grid needs n_cells >= 2, got {self.n_cells}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    @cached_property
    def nodes(self) -> np.ndarray:
        # i/n is correctly rounded, so decimal fractions like 0.25 or 0.3 land
        # exactly on the doubles that scenario expressions parse to.
        i = np.arange(self.n_nodes, dtype=float)
        x = self.x_min + (self.x_max - self.x_min) * (i / self.n_cells)
        x[-1] = self.x_max
        x.setflags(write=False)
        return x


@dataclass(frozen=True)
class Scenario:
    """Full problem description: domain, coefficients and integration controls.

    Construction is cheap and does not evaluate the expressions; call
    :meth:`validate` (entry points do) to certify the invariants:
    grid-certified b > 0 and d > 0, nonnegative u0 with positive initial
    mass, positive dt and a known scheme.
    """

    grid: Grid
    c0: float
    b: TraitFunction
    d: TraitFunction
    u0: TraitFunction
    t_end: float
    dt: float
    sample_every: int
    scheme: str = "exponential"
    stop_tol: float | None = None
    snapshot_times: tuple[float, ...] = ()
    epsilon: float | None = None
    tail_R: float | None = None

    @cached_property
    def b_nodes(self) -> np.ndarray:
        v = self.b.sample(self.grid.nodes)
        v.setflags(write=False)
        return v

    @cached_property
    def d_nodes(self) -> np.ndarray:
        v = self.d.sample(self.grid.nodes)
        v.setflags(write=False)
        return v

    @cached_property
    def u0_nodes(self) -> np.ndarray:
        v = self.u0.sample(self.grid.nodes)
        v.setflags(write=False)
        return v

    @cached_property
    def support_mask(self) -> np.ndarray:
        m = self.u0_nodes > 0.0
        m.setflags(write=False)
        return m

    @property
    def concentration_epsilon(self) -> float:
        """Window for the Dirac-mass diagnostic; defaults to 5 grid cells."""
        return self.epsilon if self.epsilon is not None else 5.0 * self.grid.dx

    def initial_mass(self) -> float:
        return quadrature(self.u0_nodes, self.grid)

    def validate(self) -> "Scenario":
        if self.c0 < 0.0:
            raise ValueError(f"c0 must be >= 0, got {self.c0}")
        if not (self.dt > 0.0):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.t_end < 0.0:
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        if self.sample_every < 1:
            raise ValueError(f"sample_every must be >= 1, got {self.sample_every}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme '{self.scheme}', expected one of {SCHEMES}")
        if self.epsilon is not None and not (self.epsilon > 0.0):
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        b_m, b_M = self.b.bounds_on(self.grid)
        if not (b_m > 0.0) or not math.isfinite(b_M):
            raise ValueError(f"b must be positive and finite on the grid, range [{b_m}, {b_M}]")
        d_m, d_M = self.d.bounds_on(self.grid)
        if not (d_m > 0.0) or not math.isfinite(d_M):
            raise ValueError(f"d must be positive and finite on the grid, range [{d_m}, {d_M}]")
        u = self.u0_nodes
        if not np.all(np.isfinite(u)):
            raise ValueError("u0 must be finite on the grid")
        if np.any(u < 0.0):
            raise ValueError("u0 must be nonnegative on the grid")
        if not (self.initial_mass() > 0.0):
            raise ValueError("u0 has zero initial mass (empty support)")
        return self


@dataclass(frozen=True)
class EquilibriumPrediction:
    """Closed-form limit prediction plus the certified corridor constants.

    ``x_bar`` maximizes b/d over the closed support, ``rho_bar`` solves
    rho * (1 + c0 * rho) = kappa with kappa = b(x_bar) / d(x_bar), and
    [rho_m, rho_M] traps rho(t) for all time.  ``alpha_R`` is the tail
    certificate (negative certifies the tail assumption on the grid) or
    None when no nodes lie beyond the requested radius.
    """

    x_bar: float
    x_bar_index: int
    rho_bar: float
    kappa: float
    b_m: float
    b_M: float
    d_m: float
    d_M: float
    r_m: float
    r_M: float
    rho_m: float
    rho_M: float
    x_bar_on_boundary: bool
    alpha_R: float | None = None
    notes: tuple[str, ...] = field(default=(), compare=False)


def positive_root(kappa: float) -> float:
    """The nonnegative solution of rho * (1 + rho) = kappa.

    Monotone increasing in kappa; exact to a few ulps, so the defining
    identity is reproduced within 1e-12 relative.
    """
    if kappa < 0.0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    return 0.5 * (math.sqrt(1.0 + 4.0 * kappa) - 1.0)


def equilibrium_mass(kappa: float, c0: float) -> float:
    """Nonnegative solution of rho * (1 + c0 * rho) = kappa for general c0 >= 0.

    With c0 = 0 the crowding is linear and the root is kappa itself; with
    c0 = 1 this is :func:`positive_root`.
    """
    if kappa < 0.0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    if c0 < 0.0:
        raise ValueError(f"c0 must be >= 0, got {c0}")
    if c0 == 0.0:
        return kappa
    return (math.sqrt(1.0 + 4.0 * c0 * kappa) - 1.0) / (2.0 * c0)


def eval_fitness(x: float, rho: float, scenario: Scenario) -> float:
    """Per-capita growth rate G(x, rho); strictly decreasing in rho."""
    if rho < 0.0:
        raise ValueError(f"rho must be >= 0, got {rho}")
    return scenario.b(x) / (1.0 + scenario.c0 * rho) - scenario.d(x) * rho


def fitness_on_nodes(rho: float, scenario: Scenario) -> np.ndarray:
    """G(x_i, rho) on every grid node (vectorized counterpart of eval_fitness)."""
    return scenario.b_nodes / (1.0 + scenario.c0 * rho) - scenario.d_nodes * rho


def trapezoid_weights(grid: Grid) -> np.ndarray:
    w = np.full(grid.n_nodes, grid.dx)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def quadrature(values: np.ndarray, grid: Grid) -> float:
    """Trapezoid rule over the grid nodes; exact for node-wise linear data."""
    v = np.asarray(values, dtype=float)
    if v.shape != (grid.n_nodes,):
        raise ValueError(f"expected {grid.n_nodes} node values, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("quadrature input contains non-finite values")
    if np.any(v < 0.0):
        raise ValueError("quadrature input contains negative values")
    return grid.dx * (float(v.sum()) - 0.5 * (float(v[0]) + float(v[-1])))


def support_runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of True in ``mask`` as inclusive (first, last) index pairs."""
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [idx.size - 1]))
    return [(int(idx[s]), int(idx[e])) for s, e in zip(starts, ends)]


def closure_mask(support: np.ndarray) -> np.ndarray:
    """Support plus the nodes adjacent to it (the lattice closure)."""
    closed = support.copy()
    closed[:-1] |= support[1:]
    closed[1:] |= support[:-1]
    return closed


def predict_equilibrium(scenario: Scenario) -> EquilibriumPrediction:
    """Predict (x_bar, rho_bar) and the corridor from the scenario alone.

    The argmax of b/d is taken over grid nodes of the closed support, so
    prediction and simulation live on the same lattice.  Ties are broken
    toward the smallest x and reported with an :class:`AssumptionWarning`
    because the theory assumes a unique maximizer.
    """
    scenario.validate()
    grid = scenario.grid
    support = scenario.support_mask
    if not support.any():
        raise ValueError("u0 has empty support on the grid")
    closed = closure_mask(support)

    ratio = scenario.b_nodes / scenario.d_nodes
    if not np.all(np.isfinite(ratio)):
        raise ValueError("b/d is not finite on the grid")

    ratio_closed = np.where(closed, ratio, -np.inf)
    kappa = float(ratio_closed.max())
    maximizers = np.flatnonzero(ratio_closed == kappa)
    x_bar_index = int(maximizers[0])
    x_bar = float(grid.nodes[x_bar_index])
    notes: list[str] = []
    if maximizers.size > 1:
        note = (
            f"b/d attains its maximum at {maximizers.size} closed-support nodes; "
            f"taking the smallest x = {x_bar!r} (unique-maximizer assumption violated)"
        )
        notes.append(note)
        warnings.warn(note, AssumptionWarning, stacklevel=2)
    rho_bar = equilibrium_mass(kappa, scenario.c0)

    b_m, b_M = scenario.b.bounds_on(grid)
    d_m, d_M = scenario.d.bounds_on(grid)
    r_m = equilibrium_mass(b_m / d_M, scenario.c0)
    r_M = equilibrium_mass(b_M / d_m, scenario.c0)
    rho0 = scenario.initial_mass()
    rho_m, rho_M = min(r_m, rho0), max(r_M, rho0)

    # boundary means endpoint of a maximal run of the closed support
    on_boundary = False
    for first, last in support_runs(closed):
        if x_bar_index in (first, last):
            on_boundary = True
            break

    pred = EquilibriumPrediction(
        x_bar=x_bar,
        x_bar_index=x_bar_index,
        rho_bar=rho_bar,
        kappa=kappa,
        b_m=b_m,
        b_M=b_M,
        d_m=d_m,
        d_M=d_M,
        r_m=r_m,
        r_M=r_M,
        rho_m=rho_m,
        rho_M=rho_M,
        x_bar_on_boundary=on_boundary,
        alpha_R=None,
        notes=tuple(notes),
    )
    if scenario.tail_R is not None:
        alpha = check_tail_condition(scenario, pred, scenario.tail_R)
        extra: list[str] = list(notes)
        if alpha is not None and alpha >= 0.0:
            note = (
                f"tail certificate failed: alpha_R = {alpha!r} >= 0 at R = "
                f"{scenario.tail_R!r} (mass may escape to |x| >= R)"
            )
            extra.append(note)
            warnings.warn(note, AssumptionWarning, stacklevel=2)
        pred = replace(pred, alpha_R=alpha, notes=tuple(extra))
    return pred


def apriori_corridor(pred: EquilibriumPrediction, rho0: float) -> tuple[float, float]:
    """The invariant interval [min(r_m, rho0), max(r_M, rho0)] trapping rho(t)."""
    if not (rho0 > 0.0):
        raise ValueError(f"rho(0) must be > 0, got {rho0}")
    return min(pred.r_m, rho0), max(pred.r_M, rho0)


def check_tail_condition(
    scenario: Scenario, pred: EquilibriumPrediction, R: float
) -> float | None:
    """Tail certificate alpha_R = max over nodes |x| >= R of G(x, rho_bar).

    Returns None when no grid nodes lie at |x| >= R (the condition is vacuous
    for supports inside the radius); a negative value certifies that mass
    beyond R decays once rho is near its limit.
    """
    nodes = scenario.grid.nodes
    tail = np.abs(nodes) >= R
    if not tail.any():
        return None
    g = fitness_on_nodes(pred.rho_bar, scenario)
    return float(g[tail].max())
