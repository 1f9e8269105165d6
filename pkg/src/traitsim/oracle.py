"""Independent brute-force references for certifying simulator output.

Two oracles, both deliberately ignorant of the exponent reduction used by
the production integrator:

* :func:`integrate_atoms` evolves a finite list of point masses
  dm_i/dt = G_i(rho) m_i, rho = sum m_i, with tiny-step RK4.  A grid
  scenario whose support is a few isolated nodes has exactly these
  dynamics (mass per node = density * cell width), so the two routes must
  agree.
* :func:`reference_grid_run` reruns a scenario with the direct scheme at a
  much finer step, serving as numerical ground truth for trajectory-level
  claims.

Golden numbers frozen into tests are minted by these functions; each frozen
value carries the oracle call that produced it so ground truth can always
be regenerated.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .integrator import Trajectory, run
from .model import Scenario

__all__ = ["Atom", "AtomSystem", "integrate_atoms", "reference_grid_run", "ORACLE_MAX_DT"]

#: fidelity bound: the atom oracle refuses steps coarser than this
ORACLE_MAX_DT = 1e-4


@dataclass(frozen=True)
class Atom:
    b: float
    d: float
    m: float


@dataclass(frozen=True)
class AtomSystem:
    """Point masses at abstract traits, coupled only through the total mass."""

    atoms: tuple[Atom, ...]
    c0: float = 1.0

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("atom system needs at least one atom")
        for a in self.atoms:
            if not (a.b > 0.0 and a.d > 0.0):
                raise ValueError(f"atom rates must be positive, got b={a.b}, d={a.d}")
            if a.m < 0.0:
                raise ValueError(f"atom mass must be >= 0, got {a.m}")
        if not (self.rho > 0.0):
            raise ValueError("total mass must be positive")

    @property
    def rho(self) -> float:
        return sum(a.m for a in self.atoms)


def _rk4_atoms_py(b, d, m, c0, dt, n_steps):
    m = m.copy()
    n = m.size
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    for _ in range(n_steps):
        rho = 0.0
        for i in range(n):
            rho += m[i]
        for i in range(n):
            k1[i] = (b[i] / (1.0 + c0 * rho) - d[i] * rho) * m[i]
            tmp[i] = m[i] + 0.5 * dt * k1[i]
        rho = 0.0
        for i in range(n):
            rho += tmp[i]
        for i in range(n):
            k2[i] = (b[i] / (1.0 + c0 * rho) - d[i] * rho) * tmp[i]
            tmp[i] = m[i] + 0.5 * dt * k2[i]
        rho = 0.0
        for i in range(n):
            rho += tmp[i]
        for i in range(n):
            k3[i] = (b[i] / (1.0 + c0 * rho) - d[i] * rho) * tmp[i]
            tmp[i] = m[i] + dt * k3[i]
        rho = 0.0
        for i in range(n):
            rho += tmp[i]
        for i in range(n):
            k4[i] = (b[i] / (1.0 + c0 * rho) - d[i] * rho) * tmp[i]
            m[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return m


try:  # the loop runs ~1e7 steps at oracle fidelity; compile it when we can
    from numba import njit

    _rk4_atoms = njit(cache=True)(_rk4_atoms_py)
except ImportError:  # pragma: no cover - numba is a declared dependency
    _rk4_atoms = _rk4_atoms_py


def integrate_atoms(system: AtomSystem, t_end: float, dt: float) -> AtomSystem:
    """Advance the atom masses to t_end with fixed-step RK4.

    ``dt`` must not exceed :data:`ORACLE_MAX_DT`; the whole point of this
    oracle is that its time-stepping error is negligible against every
    tolerance it certifies.  Deterministic: same inputs, same bits.
    """
    if not (0.0 < dt <= ORACLE_MAX_DT):
        raise ValueError(f"oracle requires 0 < dt <= {ORACLE_MAX_DT}, got {dt}")
    if t_end < 0.0:
        raise ValueError(f"t_end must be >= 0, got {t_end}")
    b = np.array([a.b for a in system.atoms])
    d = np.array([a.d for a in system.atoms])
    m = np.array([a.m for a in system.atoms])
    n_steps = int(round(t_end / dt))
    m_final = _rk4_atoms(b, d, m, system.c0, dt, n_steps)
    atoms = tuple(
        Atom(a.b, a.d, float(mi)) for a, mi in zip(system.atoms, m_final)
    )
    return AtomSystem(atoms=atoms, c0=system.c0)


def reference_grid_run(scenario: Scenario, dt_fine: float) -> Trajectory:
    """Direct-scheme rerun at a finer step, used as trajectory ground truth.

    Requires dt_fine <= scenario.dt / 10 so the reference is decisively more
    accurate than the run it certifies.
    """
    if not (dt_fine > 0.0):
        raise ValueError(f"dt_fine must be > 0, got {dt_fine}")
    if dt_fine > scenario.dt / 10.0:
        raise ValueError(
            f"reference step dt_fine = {dt_fine} must be <= dt/10 = {scenario.dt / 10.0}"
        )
    fine = replace(scenario, dt=dt_fine, scheme="direct")
    return run(fine)
