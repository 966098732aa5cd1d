"""Command line front end: ``esoreg run | check | sweep``.

Exit codes: 0 success, 1 a checker failed, 2 configuration error
(bad file, unknown model, rejected gains), 3 runtime divergence or model
fault during a simulation.
"""
import argparse
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import analysis
from .errors import ConfigurationError, SimulationFault
from .models import box_grid
from .scenario import bundled_path, load_scenario
from .simulate import SWEEP_PARAMETERS, run, sweep

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("esoreg")


def _clean(obj):
    """JSON-safe copy: numpy scalars and arrays become plain values, non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def dump_json(obj):
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _atomic_write(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trajectory_csv(traj):
    """Trajectory as CSV text; floats are written in their shortest round-trip form."""
    lines = [",".join(traj.header)]
    lines += [",".join(map(repr, row)) for row in traj.table().tolist()]
    return "\n".join(lines) + "\n"


def _resolve_path(arg):
    p = Path(arg)
    if p.exists() or p.suffix == ".ini" or os.sep in arg:
        return p
    return bundled_path(arg)


def _scenario(args):
    scen = load_scenario(_resolve_path(args.scenario))
    return scen.with_overrides(dt=args.dt, t_final=args.t_final)


def _out_dir(path):
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create output directory {out}: {exc.strerror}") from None
    return out


def cmd_run(args):
    scen = _scenario(args)
    out = _out_dir(args.out)
    model, gains, config, audit = scen.resolve()
    traj, rep = run(model, gains, config)
    theta_true = model.theta_true_many(np.array([config.rho]))[0]
    summary = {
        "scenario": scen.source,
        "model": model.name,
        "rho": list(config.rho),
        "theta_true": theta_true,
        "theta_hat_final": [traj[f"theta_hat_{i + 1}"][-1] for i in range(model.q)],
        "rows": len(traj),
        "dt": traj.dt,
        "report": rep.to_dict(),
        "resolved": audit,
    }
    _atomic_write(out / "trajectory.csv", trajectory_csv(traj))
    _atomic_write(out / "summary.json", dump_json(summary))
    print(f"final |y_e| = {rep.final_output_error:.3e}, |theta_hat - theta| = {rep.final_param_error:.3e}, "
          f"converged = {rep.converged}")
    if rep.diverged:
        print(f"error: run diverged at t = {rep.stop_time:g}: {rep.fault}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def run_checks(scen):
    """All checkers applicable to the scenario's model, in a fixed order."""
    model = scen.model
    c = scen.checks
    res = int(c.get("resolution", 21))
    reports = [
        analysis.check_attractor_bound(
            model, c.get("attractor_rho", box_grid(model.sets.P_box, 3)),
            warmup=c.get("attractor_warmup", 50.0), horizon=c.get("attractor_horizon", 200.0),
            bound=c.get("attractor_bound", 3.0), w0=scen.initial.get("w0")),
        analysis.check_b_lower_bound(model, model.sets, 5, b0=scen.b0),
    ]
    samples = analysis.sample_attractor(model, w0=scen.initial.get("w0"))
    reports.append(analysis.check_immersion(model, samples))
    if model.dphi_dtheta is not None:
        reports.append(analysis.check_monotonicity(model, model.sets, res,
                                                   tol=c.get("monotonicity_tol", 1e-10)))
    s_grid = box_grid(model.sets.theta_box(), int(c.get("pe_points", 9)))
    reports.append(analysis.check_pe(model, samples, s_grid, tol=c.get("pe_tol", 1e-6)))
    return reports, samples


def cmd_check(args):
    scen = _scenario(args)
    reports, samples = run_checks(scen)
    for r in reports:
        print(r.line())
    b = analysis.estimate_bounds(scen.model, scen.model.sets, int(scen.checks.get("resolution", 21)),
                                 tau_samples=samples)
    print(f"INFO bounds (attractor samples): a1={b.a1:.6g} a2={list(b.a2)} a3={b.a3:g}")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK_FAILED


SWEEP_FIELDS = ["final_output_error", "output_settle_time", "final_param_error", "diverged",
                "stop_time", "output_converged", "param_converged", "fault", "error"]


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    text = str(v)
    return '"' + text.replace('"', '""') + '"' if ("," in text or '"' in text) else text


def cmd_sweep(args):
    if args.param not in SWEEP_PARAMETERS:
        raise ConfigurationError(f"unknown sweep parameter '{args.param}'; allowed: {', '.join(SWEEP_PARAMETERS)}")
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"--values must be comma-separated numbers, got {args.values!r}") from None
    if not values:
        raise ConfigurationError("--values needs at least one value")
    scen = _scenario(args)
    out = _out_dir(args.out)
    model, gains, config, _ = scen.resolve()
    rows = sweep(model, gains, config, {args.param: values})
    lines = [",".join([args.param, *SWEEP_FIELDS])]
    for row in rows:
        rep = row.report.to_dict() if row.report else {}
        rep["error"] = row.error
        lines.append(",".join([_csv_cell(float(row.point[args.param]))] + [_csv_cell(rep.get(k)) for k in SWEEP_FIELDS]))
        verdict = "error: " + row.error if row.error else f"converged={row.report.converged}"
        print(f"{args.param}={row.point[args.param]:g}: {verdict}")
    _atomic_write(out / "sweep.csv", "\n".join(lines) + "\n")
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario", help="scenario file, or the name of a bundled scenario")
    common.add_argument("--dt", type=float, help="override the integration step")
    common.add_argument("--t-final", type=float, help="override the simulated duration")
    common.add_argument("--seedless", action="store_true",
                        help="accepted for scripting; the tool uses no random numbers")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="esoreg", description="Adaptive output regulation simulator and checkers.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="simulate a scenario, write trajectory.csv and summary.json")
    r.add_argument("--out", required=True, help="output directory")
    r.set_defaults(func=cmd_run)
    c = sub.add_parser("check", parents=[common], help="run the assumption checkers for a scenario's model")
    c.set_defaults(func=cmd_check)
    s = sub.add_parser("sweep", parents=[common], help="run a one-parameter grid, write sweep.csv")
    s.add_argument("--param", required=True, help=f"one of: {', '.join(SWEEP_PARAMETERS)}")
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationFault as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
