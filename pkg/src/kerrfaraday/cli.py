"""Command-line entry point.

Exit codes: 0 success, 2 precondition violation, 3 verification threshold
failure, 4 numerical failure (stalled orbit).  Failures print a JSON object
{"error": {...}} on stderr.
"""

from __future__ import annotations

import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import wraps
from pathlib import Path

import click

from .errors import KerrFaradayError, StalledOrbitError
from .geodesic import TRAJECTORY_HEADER, integrate
from .run import emit_plot_data, run_scenario, write_json, write_table
from .scenario import ScenarioError, load

EXIT_OK, EXIT_PRECONDITION, EXIT_VERIFY, EXIT_STALLED = 0, 2, 3, 4


def _error_object(exc: Exception) -> dict:
    err = {"type": type(exc).__name__, "message": str(exc),
           "exit_code": getattr(exc, "exit_code", 1)}
    if isinstance(exc, ScenarioError):
        err.update(file=exc.path, line=exc.line, key=exc.key, detail=exc.detail)
    if isinstance(exc, StalledOrbitError) or getattr(exc, "s", None) is not None:
        err["s"] = exc.s
    return {"error": err}


def _guarded(fn):
    """Translate package exceptions into JSON on stderr plus an exit code."""

    @wraps(fn)
    def inner(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except KerrFaradayError as exc:
            click.echo(json.dumps(_error_object(exc), sort_keys=True), err=True)
            sys.exit(exc.exit_code)

    return inner


def _scenario(path, tol, s_max):
    sc = load(path)
    if tol is not None or s_max is not None:
        sc = sc.replace(tol=tol, s_max=s_max)
    return sc


scenario_opt = click.option("--scenario", "scenario_path", required=True,
                            type=click.Path(dir_okay=False, path_type=Path), help="Scenario TOML file.")
out_opt = click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path),
                       default=Path("out"), show_default=True, help="Output directory.")
tol_opt = click.option("--tol", type=float, default=None, help="Override the integration tolerance.")
smax_opt = click.option("--s-max", "s_max", type=float, default=None, help="Override the affine span.")
fmt_opt = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
verify_opt = click.option("--verify", is_flag=True, help="Cross-check against the transport oracle.")


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Gravitational Faraday rotation along Kerr null geodesics."""


@main.command("integrate")
@scenario_opt
@out_opt
@tol_opt
@smax_opt
@fmt_opt
@_guarded
def integrate_cmd(scenario_path, out_dir, tol, s_max, fmt):
    """Integrate the geodesic and write the trajectory."""
    sc = _scenario(scenario_path, tol, s_max)
    res = sc.resolved()
    traj = integrate(sc.initial, sc.conserved, sc.params, sc.s_max, sc.tol, res["r_escape"], res["eps_horizon"])
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        path = out_dir / "trajectory.csv"
        traj.write_csv(path)
    else:
        path = out_dir / "trajectory.json"
        write_json(path, {"columns": TRAJECTORY_HEADER, "rows": traj.rows()})
    click.echo(f"{traj.termination} at s={traj.s_end:.6g}; wrote {path}")


def _run_and_report(sc, out_dir, verify, fmt):
    result = run_scenario(sc, out_dir, verify=verify, fmt=fmt)
    rep = result.report
    failed = [k for k, ok in rep["checks"].items() if not ok]
    click.echo(f"{sc.name}: {rep['termination']} at s={rep['s_end']:.6g}, "
               f"{len(rep['critical_points'])} critical point(s), "
               + ("all checks passed" if not failed else "FAILED: " + ", ".join(failed)))
    if failed:
        sys.exit(EXIT_VERIFY)
    return result


@main.command("faraday")
@scenario_opt
@out_opt
@tol_opt
@smax_opt
@fmt_opt
@verify_opt
@_guarded
def faraday_cmd(scenario_path, out_dir, tol, s_max, fmt, verify):
    """Write the trajectory, rotation curve and verification summary."""
    _run_and_report(_scenario(scenario_path, tol, s_max), out_dir, verify, fmt)


@main.command("verify")
@scenario_opt
@out_opt
@tol_opt
@smax_opt
@fmt_opt
@_guarded
def verify_cmd(scenario_path, out_dir, tol, s_max, fmt):
    """Full run with the oracle comparison; exit 3 if a threshold fails."""
    _run_and_report(_scenario(scenario_path, tol, s_max), out_dir, True, fmt)


@main.command("critical-points")
@scenario_opt
@out_opt
@tol_opt
@smax_opt
@fmt_opt
@_guarded
def critical_points_cmd(scenario_path, out_dir, tol, s_max, fmt):
    """Locate the stationary points of the rotation angle."""
    sc = _scenario(scenario_path, tol, s_max)
    result = run_scenario(sc, None, verify=False)
    rows = []
    for s in result.critical_points:
        y = result.trajectory.y_at(s)
        rows.append([s, float(y[1]), float(y[2]), float(y[3] % (2 * math.pi))])
    out_dir.mkdir(parents=True, exist_ok=True)
    header = ["s", "r", "theta", "phi"]
    if fmt == "csv":
        path = out_dir / "critical_points.csv"
        write_table(path, header, rows)
    else:
        path = out_dir / "critical_points.json"
        write_json(path, {"columns": header, "rows": rows})
    click.echo(f"{len(rows)} critical point(s); wrote {path}")


@main.command("emit-plots")
@scenario_opt
@out_opt
@tol_opt
@smax_opt
@_guarded
def emit_plots_cmd(scenario_path, out_dir, tol, s_max):
    """Write plot-ready orbit, rotation and ergosphere data."""
    sc = _scenario(scenario_path, tol, s_max)
    result = run_scenario(sc, out_dir)
    paths = emit_plot_data(result, out_dir)
    click.echo("wrote " + ", ".join(str(p) for p in paths.values()))


def _batch_one(args):
    path, out_dir, verify, fmt, tol, s_max = args
    try:
        sc = _scenario(path, tol, s_max)
        result = run_scenario(sc, Path(out_dir) / Path(path).stem, verify=verify, fmt=fmt)
        return {"scenario": sc.name, "path": str(path), "passed": result.passed, "exit_code": 0 if result.passed else 3}
    except KerrFaradayError as exc:
        return {"scenario": Path(path).stem, "path": str(path), "passed": False,
                "exit_code": exc.exit_code, **_error_object(exc)}


@main.command("batch")
@click.argument("scenarios", nargs=-1, required=True, type=click.Path(dir_okay=False, path_type=Path))
@out_opt
@tol_opt
@smax_opt
@fmt_opt
@verify_opt
@click.option("--jobs", type=int, default=None, help="Worker processes (default: CPU count).")
def batch_cmd(scenarios, out_dir, tol, s_max, fmt, verify, jobs):
    """Run several scenarios in parallel, each into OUT/<name>/."""
    names = [Path(p).stem for p in scenarios]
    if len(set(names)) != len(names):
        click.echo(json.dumps({"error": {"type": "DomainError", "exit_code": 2,
                                         "message": "scenario file names must be unique"}}), err=True)
        sys.exit(EXIT_PRECONDITION)
    tasks = [(str(p), str(out_dir), verify, fmt, tol, s_max) for p in scenarios]
    if jobs == 1 or len(tasks) == 1:
        outcomes = [_batch_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_batch_one, tasks))
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "batch.json", {"runs": outcomes})
    for o in outcomes:
        click.echo(f"{o['scenario']}: " + ("ok" if o["passed"] else f"exit {o['exit_code']}"))
    sys.exit(max(o["exit_code"] for o in outcomes))


if __name__ == "__main__":
    main()
