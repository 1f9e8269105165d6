"""Command line front end: scenario files, runs, verification and sweeps.

Scenario files are sectioned key-value text (INI syntax)::

    [domain]
    x_min = 0.0
    x_max = 1.0
    n_cells = 2000

    [model]
    c0 = 1.0
    b = 2 - (x - 0.3)^2
    d = 1
    u0 = ind(0, 1)

    [run]
    t_end = 200.0
    dt = 1e-3
    sample_every = 100
    scheme = exponential
    # optional: stop_tol = 1e-9
    # optional: snapshot_times = 0, 100, 200

    [diagnostics]
    # optional: epsilon = 0.0025
    # optional: tail_R = 5.0

Commands: ``predict`` (closed-form limit and corridor), ``run`` (writes
trajectory.csv, snapshot_<t>.csv, summary.json and plot.gp), ``verify``
(machine-checks the theory's invariants, one PASS/FAIL line each) and
``sweep`` (convergence study over dt or n_cells).

Exit codes: 0 success, 1 verify found a failing invariant, 2 input error,
3 runtime error (overflow or NaN; partial outputs are flushed).

All numbers in output files are serialized with 17 significant digits so
they round-trip exactly; identical inputs produce byte-identical outputs.
The output directory is the --out flag, else $TRAITSIM_OUT, else the
current directory.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import DiagnosticsRecord, blow_up_report
from .exprlang import ExprError, TraitFunction
from .integrator import IntegrationError, Trajectory, run
from .model import Grid, Scenario, predict_equilibrium

__all__ = [
    "ScenarioFileError",
    "load_scenario",
    "evaluate_invariants",
    "build_parser",
    "main",
]

OUT_DIR_ENV = "TRAITSIM_OUT"

TRAJECTORY_COLUMNS = (
    "t",
    "rho",
    "V",
    "D",
    "W",
    "max_log_u",
    "x_mode",
    "mass_near_xbar",
    "tail_mass",
    "undershoot_clamps",
)

#: verification tolerances, pinned to the acceptance criteria
CORRIDOR_SLACK = 1e-6
LYAPUNOV_SLACK = 1e-8
RESIDUAL_DECAY_FACTOR = 1e-2
RHO_LIMIT_TOL_INTERIOR = 1e-3
RHO_LIMIT_TOL_BOUNDARY = 1e-2
CONCENTRATION_INTERIOR = 0.99
CONCENTRATION_BOUNDARY = 0.95


class ScenarioFileError(ValueError):
    pass


# --------------------------------------------------------------------------
# Scenario file parsing

def _require_section(cp: configparser.ConfigParser, name: str) -> None:
    if not cp.has_section(name):
        raise ScenarioFileError(f"missing section [{name}]")


def _require(cp: configparser.ConfigParser, section: str, key: str) -> str:
    if not cp.has_option(section, key):
        raise ScenarioFileError(f"missing key {section}.{key}")
    return cp.get(section, key)


def _as_float(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ScenarioFileError(f"invalid number for {where}: '{text}'") from None


def _as_int(text: str, where: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ScenarioFileError(f"invalid integer for {where}: '{text}'") from None


def _as_expression(text: str, where: str) -> TraitFunction:
    try:
        return TraitFunction.from_source(text)
    except ExprError as err:
        raise ScenarioFileError(f"invalid expression for {where}: {err}") from None


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate a scenario file; raises :class:`ScenarioFileError`."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as err:
        raise ScenarioFileError(f"cannot read scenario file: {err}") from None
    except configparser.Error as err:
        raise ScenarioFileError(f"malformed scenario file: {err}") from None

    for section in ("domain", "model", "run"):
        _require_section(cp, section)

    grid = Grid(
        x_min=_as_float(_require(cp, "domain", "x_min"), "domain.x_min"),
        x_max=_as_float(_require(cp, "domain", "x_max"), "domain.x_max"),
        n_cells=_as_int(_require(cp, "domain", "n_cells"), "domain.n_cells"),
    )

    snapshot_times: tuple[float, ...] = ()
    if cp.has_option("run", "snapshot_times"):
        raw = cp.get("run", "snapshot_times")
        snapshot_times = tuple(
            _as_float(part.strip(), "run.snapshot_times")
            for part in raw.split(",")
            if part.strip()
        )

    stop_tol = None
    if cp.has_option("run", "stop_tol"):
        stop_tol = _as_float(cp.get("run", "stop_tol"), "run.stop_tol")

    epsilon = None
    tail_R = None
    if cp.has_section("diagnostics"):
        if cp.has_option("diagnostics", "epsilon"):
            epsilon = _as_float(cp.get("diagnostics", "epsilon"), "diagnostics.epsilon")
        if cp.has_option("diagnostics", "tail_R"):
            tail_R = _as_float(cp.get("diagnostics", "tail_R"), "diagnostics.tail_R")

    scenario = Scenario(
        grid=grid,
        c0=_as_float(_require(cp, "model", "c0"), "model.c0"),
        b=_as_expression(_require(cp, "model", "b"), "model.b"),
        d=_as_expression(_require(cp, "model", "d"), "model.d"),
        u0=_as_expression(_require(cp, "model", "u0"), "model.u0"),
        t_end=_as_float(_require(cp, "run", "t_end"), "run.t_end"),
        dt=_as_float(_require(cp, "run", "dt"), "run.dt"),
        sample_every=_as_int(_require(cp, "run", "sample_every"), "run.sample_every"),
        scheme=_require(cp, "run", "scheme").strip(),
        stop_tol=stop_tol,
        snapshot_times=snapshot_times,
        epsilon=epsilon,
        tail_R=tail_R,
    )
    try:
        scenario.validate()
    except ValueError as err:
        raise ScenarioFileError(str(err)) from None
    return scenario


def _apply_overrides(scenario: Scenario, args: argparse.Namespace) -> Scenario:
    changes = {}
    if getattr(args, "scheme", None) is not None:
        changes["scheme"] = args.scheme
    if getattr(args, "dt", None) is not None:
        changes["dt"] = args.dt
    if getattr(args, "t_end", None) is not None:
        changes["t_end"] = args.t_end
    return replace(scenario, **changes) if changes else scenario


# --------------------------------------------------------------------------
# Serialization (17 significant digits: round-trip exact for doubles)

def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _fmt_short(x: float) -> str:
    return repr(float(x))


def _json_dump(value, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [
            f'{pad}  "{k}": {_json_dump(v, indent + 1)}' for k, v in value.items()
        ]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [f"{pad}  {_json_dump(v, indent + 1)}" for v in value]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return _fmt(v) if math.isfinite(v) else f'"{_fmt(v)}"'
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _record_row(rec: DiagnosticsRecord) -> str:
    return ",".join(
        [
            _fmt(rec.t),
            _fmt(rec.rho),
            _fmt(rec.V),
            _fmt(rec.D),
            _fmt(rec.W),
            _fmt(rec.max_log_u),
            _fmt(rec.x_mode),
            _fmt(rec.mass_near_xbar),
            _fmt(rec.tail_mass),
            str(rec.undershoot_clamps),
        ]
    )


def _record_dict(rec: DiagnosticsRecord) -> dict:
    return {
        "t": rec.t,
        "rho": rec.rho,
        "V": rec.V,
        "D": rec.D,
        "W": rec.W,
        "max_log_u": rec.max_log_u,
        "x_mode": rec.x_mode,
        "mass_near_xbar": rec.mass_near_xbar,
        "tail_mass": rec.tail_mass,
        "undershoot_clamps": rec.undershoot_clamps,
    }


def _prediction_dict(pred) -> dict:
    return {
        "x_bar": pred.x_bar,
        "x_bar_index": pred.x_bar_index,
        "rho_bar": pred.rho_bar,
        "kappa": pred.kappa,
        "b_m": pred.b_m,
        "b_M": pred.b_M,
        "d_m": pred.d_m,
        "d_M": pred.d_M,
        "r_m": pred.r_m,
        "r_M": pred.r_M,
        "rho_m": pred.rho_m,
        "rho_M": pred.rho_M,
        "x_bar_on_boundary": pred.x_bar_on_boundary,
        "alpha_R": pred.alpha_R,
        "notes": list(pred.notes),
    }


def _scenario_dict(scenario: Scenario) -> dict:
    return {
        "x_min": scenario.grid.x_min,
        "x_max": scenario.grid.x_max,
        "n_cells": scenario.grid.n_cells,
        "c0": scenario.c0,
        "b": scenario.b.source,
        "d": scenario.d.source,
        "u0": scenario.u0.source,
        "t_end": scenario.t_end,
        "dt": scenario.dt,
        "sample_every": scenario.sample_every,
        "scheme": scenario.scheme,
        "stop_tol": scenario.stop_tol,
        "snapshot_times": list(scenario.snapshot_times),
        "epsilon": scenario.epsilon,
        "tail_R": scenario.tail_R,
    }


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_trajectory_csv(trajectory: Trajectory, path: Path) -> None:
    lines = [",".join(TRAJECTORY_COLUMNS)]
    lines.extend(_record_row(rec) for rec in trajectory.records)
    _write_text(path, "\n".join(lines) + "\n")


def _snapshot_name(requested_t: float) -> str:
    return f"snapshot_{requested_t:g}.csv"


def _write_snapshots(trajectory: Trajectory, out_dir: Path) -> list[str]:
    names = []
    nodes = trajectory.scenario.grid.nodes
    for snap in trajectory.snapshots:
        with np.errstate(under="ignore", over="ignore"):
            u = np.exp(snap.log_u)
        lines = ["x,u,log_u"]
        lines.extend(
            f"{_fmt(xi)},{_fmt(ui)},{_fmt(li)}"
            for xi, ui, li in zip(nodes, u, snap.log_u)
        )
        name = _snapshot_name(snap.requested_t)
        _write_text(out_dir / name, "\n".join(lines) + "\n")
        names.append(name)
    return names


def _write_summary(trajectory: Trajectory, path: Path, error: str | None = None) -> None:
    doc = {
        "fingerprint": trajectory.fingerprint,
        "scenario": _scenario_dict(trajectory.scenario),
        "prediction": _prediction_dict(trajectory.prediction),
        "initial": _record_dict(trajectory.records[0]),
        "final": _record_dict(trajectory.records[-1]),
        "record_count": len(trajectory.records),
        "early_stop_t": trajectory.early_stop_t,
        "breaches": list(trajectory.breaches),
    }
    if error is not None:
        doc["error"] = error
    _write_text(path, _json_dump(doc) + "\n")


_PLOT_SCRIPT = """\
# generated by traitsim {version}; consumes trajectory.csv{snapshot_note}
set datafile separator ","
set key autotitle columnhead noenhanced
set terminal pngcairo size 1280,960
set output "trajectory.png"
set multiplot layout 2,2
set xlabel "t"
plot "trajectory.csv" using 1:2 with lines lw 2 title "rho(t)"
plot "trajectory.csv" using 1:3 with lines lw 2 title "V(t)"
set logscale y
plot "trajectory.csv" using 1:($5 > 0 ? $5 : NaN) with lines lw 2 title "W(t)"
unset logscale y
plot "trajectory.csv" using 1:8 with lines lw 2 title "mass near x_bar"
unset multiplot
"""

_PLOT_SNAPSHOTS = """\
set output "snapshots.png"
set xlabel "x"
set ylabel "u"
plot {plots}
"""


def _write_plot_script(trajectory: Trajectory, out_dir: Path, snapshot_names: list[str]) -> None:
    note = " and snapshot csvs" if snapshot_names else ""
    text = _PLOT_SCRIPT.format(version=__version__, snapshot_note=note)
    if snapshot_names:
        plots = ", \\\n     ".join(
            f'"{name}" using 1:2 with lines title "{name[:-4]}"'
            for name in snapshot_names
        )
        text += _PLOT_SNAPSHOTS.format(plots=plots)
    _write_text(out_dir / "plot.gp", text)


# --------------------------------------------------------------------------
# Invariant verification

def evaluate_invariants(trajectory: Trajectory) -> list[tuple[str, bool | None, str]]:
    """Check every theory invariant on a finished run.

    Returns (name, ok, detail) triples; ok None means not applicable.
    Tolerances match the acceptance criteria exactly.
    """
    pred = trajectory.prediction
    records = trajectory.records
    rhos = np.array([r.rho for r in records])
    Vs = np.array([r.V for r in records])
    Ds = np.array([r.D for r in records])
    checks: list[tuple[str, bool | None, str]] = []

    lo, hi = pred.rho_m - CORRIDOR_SLACK, pred.rho_M + CORRIDOR_SLACK
    ok = bool(np.all((rhos >= lo) & (rhos <= hi)))
    checks.append(
        (
            "corridor",
            ok,
            f"rho in [{rhos.min():.9g}, {rhos.max():.9g}], "
            f"allowed [{pred.rho_m:.9g} - {CORRIDOR_SLACK:g}, {pred.rho_M:.9g} + {CORRIDOR_SLACK:g}]",
        )
    )

    drops = Vs[1:] - (Vs[:-1] - LYAPUNOV_SLACK * (1.0 + np.abs(Vs[:-1])))
    ok = bool(np.all(drops >= 0.0))
    worst = float(drops.min()) if drops.size else 0.0
    checks.append(
        ("lyapunov_monotone", ok, f"worst tolerated increment {worst:.3e} (>= 0 required)")
    )

    ok = bool(np.all(Ds >= 0.0))
    checks.append(("dissipation_nonneg", ok, f"min D = {Ds.min():.3e}"))

    W0, WT = records[0].W, records[-1].W
    if W0 <= 1e-300:
        checks.append(("residual_decay", True, "W(0) = 0: already concentrated"))
    else:
        ok = WT <= RESIDUAL_DECAY_FACTOR * W0
        checks.append(
            (
                "residual_decay",
                ok,
                f"W(T)/W(0) = {WT / W0:.3e} (<= {RESIDUAL_DECAY_FACTOR:g} required)",
            )
        )

    tol = RHO_LIMIT_TOL_BOUNDARY if pred.x_bar_on_boundary else RHO_LIMIT_TOL_INTERIOR
    err = abs(records[-1].rho - pred.rho_bar)
    checks.append(
        (
            "rho_limit",
            err < tol,
            f"|rho(T) - rho_bar| = {err:.3e} (< {tol:g} required, "
            f"{'boundary' if pred.x_bar_on_boundary else 'interior'} maximizer)",
        )
    )

    if trajectory.scenario.scheme == "exponential" and trajectory.final_state is not None:
        initial = trajectory.scenario.support_mask
        final = trajectory.final_state.log_u > -np.inf
        ok = bool(np.array_equal(initial, final))
        checks.append(
            (
                "support_conserved",
                ok,
                f"{int(initial.sum())} initial vs {int(final.sum())} final positive nodes",
            )
        )
    else:
        checks.append(
            ("support_conserved", None, "exact only for the exponential scheme; skipped")
        )

    thr = CONCENTRATION_BOUNDARY if pred.x_bar_on_boundary else CONCENTRATION_INTERIOR
    final = records[-1]
    mode_ok = final.x_mode == pred.x_bar
    mass_ok = final.mass_near_xbar >= thr
    checks.append(
        (
            "concentration",
            bool(mode_ok and mass_ok),
            f"mass within epsilon of x_bar = {final.mass_near_xbar:.6f} (>= {thr:g}), "
            f"mode at {final.x_mode!r} vs predicted {pred.x_bar!r}",
        )
    )
    return checks


# --------------------------------------------------------------------------
# Commands

def _out_dir(args: argparse.Namespace) -> Path:
    out = getattr(args, "out", None) or os.environ.get(OUT_DIR_ENV) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _print(args: argparse.Namespace, message: str) -> None:
    if not getattr(args, "quiet", False):
        print(message)


def cmd_predict(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        pred = predict_equilibrium(scenario)
    rows = [
        ("x_bar", _fmt_short(pred.x_bar)),
        ("rho_bar", _fmt_short(pred.rho_bar)),
        ("kappa (b/d at x_bar)", _fmt_short(pred.kappa)),
        ("b range", f"[{_fmt_short(pred.b_m)}, {_fmt_short(pred.b_M)}]"),
        ("d range", f"[{_fmt_short(pred.d_m)}, {_fmt_short(pred.d_M)}]"),
        ("r_m", _fmt_short(pred.r_m)),
        ("r_M", _fmt_short(pred.r_M)),
        ("rho corridor", f"[{_fmt_short(pred.rho_m)}, {_fmt_short(pred.rho_M)}]"),
        ("x_bar on boundary", "yes" if pred.x_bar_on_boundary else "no"),
        ("alpha_R", "n/a" if pred.alpha_R is None else _fmt_short(pred.alpha_R)),
    ]
    if not args.quiet:
        width = max(len(name) for name, _ in rows)
        for name, value in rows:
            print(f"{name:<{width}}  {value}")
        for w in caught:
            print(f"warning: {w.message}")
        print()
    print(_json_dump(_prediction_dict(pred)))
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    out = _out_dir(args)
    try:
        trajectory = run(scenario)
        error = None
    except IntegrationError as err:
        if err.partial is None:
            print(f"error: {err}", file=sys.stderr)
            return 3
        trajectory = err.partial
        error = str(err)

    _write_trajectory_csv(trajectory, out / "trajectory.csv")
    snapshot_names = _write_snapshots(trajectory, out)
    _write_summary(trajectory, out / "summary.json", error=error)
    _write_plot_script(trajectory, out, snapshot_names)

    if error is not None:
        print(f"error: {error} (partial outputs in {out})", file=sys.stderr)
        return 3
    final = trajectory.records[-1]
    _print(
        args,
        f"wrote {out / 'trajectory.csv'} ({len(trajectory.records)} records), "
        f"summary.json, plot.gp"
        + (f", {len(snapshot_names)} snapshot(s)" if snapshot_names else ""),
    )
    _print(
        args,
        f"final: t = {final.t:g}, rho = {final.rho!r}, "
        f"mass near x_bar = {final.mass_near_xbar:.6f}"
        + (f", early stop at t = {trajectory.early_stop_t:g}" if trajectory.early_stop_t else ""),
    )
    for breach in trajectory.breaches[:5]:
        _print(args, f"breach: {breach}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    try:
        trajectory = run(scenario)
    except IntegrationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    checks = evaluate_invariants(trajectory)
    failed = 0
    for name, ok, detail in checks:
        if ok is None:
            status = "SKIP"
        elif ok:
            status = "PASS"
        else:
            status = "FAIL"
            failed += 1
        print(f"{status} {name:<20} {detail}")
    if trajectory.prediction.x_bar_on_boundary:
        try:
            report = blow_up_report(trajectory)
            print(
                f"info blow_up             monotone_growth={report.monotone_growth}, "
                f"log-density slope {report.growth_rate_estimate:.3e}, "
                f"boundary cell mass {report.boundary_cell_mass:.6f}"
            )
        except ValueError:
            pass
    for breach in trajectory.breaches[:5]:
        print(f"info breach              {breach}")
    return 1 if failed else 0


def _sweep_child(scenario: Scenario) -> tuple[float, float, str]:
    try:
        trajectory = run(scenario)
        final_rho = trajectory.records[-1].rho
        return final_rho, abs(final_rho - trajectory.prediction.rho_bar), "ok"
    except Exception as err:  # recorded per child; the sweep continues
        return math.nan, math.nan, f"error: {err}"


def cmd_sweep(args: argparse.Namespace) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    parameter = args.param
    raw_values = [v.strip() for v in args.values.split(",") if v.strip()]
    if len(raw_values) < 2:
        raise ScenarioFileError("sweep needs at least 2 values")
    if parameter == "dt":
        values = [_as_float(v, "--values") for v in raw_values]
        scenarios = [replace(scenario, dt=v) for v in values]
        steps = values
    elif parameter == "n_cells":
        values = [_as_int(v, "--values") for v in raw_values]
        g = scenario.grid
        scenarios = [
            replace(scenario, grid=Grid(g.x_min, g.x_max, v)) for v in values
        ]
        steps = [(g.x_max - g.x_min) / v for v in values]
    else:
        raise ScenarioFileError(f"unknown sweep parameter '{parameter}'")

    workers = min(len(scenarios), os.cpu_count() or 1)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_sweep_child, scenarios))

    # fitted order: errors against the most resolved successful run
    ok_idx = [i for i, (_, _, status) in enumerate(results) if status == "ok"]
    order = math.nan
    if len(ok_idx) >= 3:
        ref = min(ok_idx, key=lambda i: steps[i])
        pts = [
            (math.log(steps[i]), math.log(abs(results[i][0] - results[ref][0])))
            for i in ok_idx
            if i != ref and abs(results[i][0] - results[ref][0]) > 0.0
        ]
        if len(pts) >= 2:
            xs, ys = zip(*pts)
            order = float(np.polyfit(xs, ys, 1)[0])

    out = _out_dir(args)
    lines = [f"{parameter},rho_final,abs_err_vs_prediction,status"]
    for value, (final_rho, err, status) in zip(values, results):
        value_text = str(value) if parameter == "n_cells" else _fmt(value)
        lines.append(f"{value_text},{_fmt(final_rho)},{_fmt(err)},{status}")
    lines.append(f"# fitted_order {_fmt(order)}")
    _write_text(out / "sweep.csv", "\n".join(lines) + "\n")
    _print(args, f"wrote {out / 'sweep.csv'}; fitted order {order:.3f}")
    return 0 if ok_idx else 3


# --------------------------------------------------------------------------
# Entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="traitsim",
        description="Simulate and verify nonlocal trait-selection dynamics.",
    )
    parser.add_argument("--version", action="version", version=f"traitsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, overrides: bool = True) -> None:
        p.add_argument("scenario", help="path to a scenario file")
        p.add_argument("--out", default=None, help=f"output directory (default ${OUT_DIR_ENV} or .)")
        p.add_argument("--quiet", action="store_true", help="suppress progress text")
        if overrides:
            p.add_argument("--scheme", choices=["exponential", "direct"], default=None)
            p.add_argument("--dt", type=float, default=None)
            p.add_argument("--t-end", dest="t_end", type=float, default=None)

    p = sub.add_parser("predict", help="print the closed-form limit and corridor")
    common(p, overrides=False)
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("run", help="integrate and write trajectory/summary/plot files")
    common(p)
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser("verify", help="run and machine-check the theory invariants")
    common(p)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("sweep", help="convergence study over dt or n_cells")
    common(p)
    p.add_argument("--param", choices=["dt", "n_cells"], required=True)
    p.add_argument("--values", required=True, help="comma-separated list, e.g. 1e-2,5e-3,2.5e-3")
    p.set_defaults(handler=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except IntegrationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except (ScenarioFileError, ExprError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
