"""traitsim: simulate and verify nonlocal trait-selection population dynamics.

The model couples a per-trait density u(x, t) to its total mass rho(t)
through the fitness G(x, rho) = b(x)/(1 + c0*rho) - d(x)*rho.  This package
predicts the long-time limit (a Dirac mass at the fittest supported trait),
integrates the dynamics with two independent schemes, and machine-checks
the supporting invariants: the a priori mass corridor, Lyapunov
monotonicity, residual decay, support conservation and concentration.
"""

__version__ = "0.1.0"

from .diagnostics import (
    BlowUpReport,
    ConcentrationReport,
    DiagnosticsRecord,
    blow_up_report,
    compute_D,
    compute_V,
    compute_W,
    concentration_report,
    lyapunov_P,
    lyapunov_Q,
)
from .exprlang import (
    EvalError,
    Expr,
    ExprError,
    ParseError,
    TraitFunction,
    bound_on_grid,
    eval_expr,
    parse,
    unparse,
)
from .integrator import (
    ExponentOverflow,
    IntegrationError,
    PopulationState,
    Trajectory,
    init_state,
    rho_from_exponents,
    run,
    step_direct,
    step_exponential,
)
from .model import (
    AssumptionWarning,
    EquilibriumPrediction,
    Grid,
    Scenario,
    apriori_corridor,
    check_tail_condition,
    equilibrium_mass,
    eval_fitness,
    positive_root,
    predict_equilibrium,
    quadrature,
)
from .oracle import Atom, AtomSystem, integrate_atoms, reference_grid_run

__all__ = [
    "__version__",
    "AssumptionWarning",
    "Atom",
    "AtomSystem",
    "BlowUpReport",
    "ConcentrationReport",
    "DiagnosticsRecord",
    "EquilibriumPrediction",
    "EvalError",
    "ExponentOverflow",
    "Expr",
    "ExprError",
    "Grid",
    "IntegrationError",
    "ParseError",
    "PopulationState",
    "Scenario",
    "TraitFunction",
    "Trajectory",
    "apriori_corridor",
    "blow_up_report",
    "bound_on_grid",
    "check_tail_condition",
    "compute_D",
    "compute_V",
    "compute_W",
    "concentration_report",
    "equilibrium_mass",
    "eval_expr",
    "eval_fitness",
    "init_state",
    "integrate_atoms",
    "lyapunov_P",
    "lyapunov_Q",
    "parse",
    "positive_root",
    "predict_equilibrium",
    "quadrature",
    "reference_grid_run",
    "rho_from_exponents",
    "run",
    "step_direct",
    "step_exponential",
    "unparse",
]
