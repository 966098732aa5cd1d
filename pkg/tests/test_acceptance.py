"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` (``-s`` is the project default)
to see the verdicts.
"""
import json
import shutil
import subprocess
import sys
import time

import numpy as np
import pytest

from esoreg import SimConfig, run, sweep
from esoreg.analysis import (check_attractor_bound, check_immersion, check_monotonicity, sample_attractor,
                             tau_grid)
from esoreg.nonlinearities import DeadZoneParams, SatParams, dz, dz_deriv, sat, sat_deriv
from esoreg.prime import build_Fe, is_hurwitz
from esoreg.regulator import RegulatorState

OUTPUT_TOL, PARAM_TOL = 1e-2, 5e-2
RHOS = (-0.2, 0.0, 0.2)


def verdict(n, title, ok, detail):
    print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {title} | {detail}")
    assert ok, detail


def test_criterion_01_headline_reproduction(tmp_path):
    exe = shutil.which("esoreg")
    cmd = [exe] if exe else [sys.executable, "-m", "esoreg"]
    start = time.perf_counter()
    proc = subprocess.run([*cmd, "run", "example_rho02", "--out", str(tmp_path)], capture_output=True, text=True)
    elapsed = time.perf_counter() - start
    summary = json.loads((tmp_path / "summary.json").read_text())
    rep = summary["report"]
    th = summary["theta_hat_final"][0]
    ok = (proc.returncode == 0 and rep["final_output_error"] < OUTPUT_TOL
          and abs(th - 0.2) < PARAM_TOL and elapsed < 30.0)
    verdict(1, "rho=0.2, ell=10, kappa=30 converges", ok,
            f"|y_e(50)|={rep['final_output_error']:.3e} theta_hat(50)={th:.6f} wall={elapsed:.1f}s (cold process)")


def test_criterion_02_robust_over_rho(model, gains):
    rows = sweep(model, gains, SimConfig(), {"rho": list(RHOS)})
    ok = len(rows) == 3 and all(r.report is not None and r.report.final_output_error < OUTPUT_TOL
                                and r.report.final_param_error < PARAM_TOL for r in rows)
    detail = "; ".join(f"rho={r.point['rho']:+.1f}: y_e={r.report.final_output_error:.2e} "
                       f"dtheta={r.report.final_param_error:.2e}" for r in rows if r.report)
    verdict(2, "same gains converge for rho in {-0.2, 0, 0.2}", ok, detail)


def test_criterion_03_limit_cycle_containment(model):
    worst = []
    for rho in RHOS:
        rep = check_attractor_bound(model, [rho], warmup=50.0, horizon=150.0, bound=3.0, tol=1e-3, w0=(1.0, 0.0))
        worst.append(rep.worst_value)
    ok = max(worst) <= 3.0 + 1e-3
    verdict(3, "max|w_i| <= 3 on t in [50, 200]", ok,
            ", ".join(f"rho={r:+.1f}: {w:.4f}" for r, w in zip(RHOS, worst)))


def test_criterion_04_immersion_residual(model):
    samples = sample_attractor(model, RHOS, samples_per_rho=334)
    samples = samples.take(slice(0, 1000))
    rep = check_immersion(model, samples, tol=1e-8)
    ok = rep.passed and rep.samples_used == 1000
    verdict(4, "immersion identity residual <= 1e-8", ok,
            f"worst={rep.worst_value:.3e} over {rep.samples_used} samples")


def test_criterion_05_monotonicity(model):
    from dataclasses import replace
    tau = tau_grid(model, model.sets, 21)
    assert tau.min() == -3.0 and tau.max() == 3.0
    rep = check_monotonicity(model, model.sets, 21, tol=1e-10)
    linear = replace(model, phi=lambda s, r: s[0] * r[0], dphi_dtheta=lambda s, r: np.array([r[0]]),
                     beta=lambda r: np.array([r[0]]))
    counter = check_monotonicity(linear, linear.sets, 21, tol=1e-10)
    ok = rep.passed and rep.worst_value <= 1e-10 and counter.worst_value > 0
    verdict(5, "monotonicity grid check, linear counter-case positive", ok,
            f"example worst={rep.worst_value:.3e} ({rep.samples_used} points); "
            f"linear worst={counter.worst_value:.3e}")


def test_criterion_06_dead_zone_trapping(model, gains):
    hw = gains.dz_params[0].cube_halfwidth
    results = []
    for th0 in np.linspace(-5.0, 5.0, 10):
        reg = RegulatorState(np.zeros(2), [th0], np.zeros(2), 0.0)
        traj, _ = run(model, gains, SimConfig(regulator0=reg, record_every=1))
        inside = np.abs(traj["theta_hat_1"]) <= hw
        entered = bool(inside.any())
        stays = entered and bool(inside[int(np.argmax(inside)):].all())
        results.append((th0, entered, stays, float(traj.times[int(np.argmax(inside))])))
    ok = all(e and s for _, e, s, _ in results)
    bad = [f"{t:+.2f}" for t, e, s, _ in results if not (e and s)]
    verdict(6, f"theta_hat enters |theta| <= {hw:g} and stays", ok,
            f"10 starts in [-5,5], latest entry t={max(r[3] for r in results):.4f}s"
            + (f"; escaped: {bad}" if bad else ""))


def test_criterion_07_hurwitz_oracle():
    rng = np.random.default_rng(7)
    disagreements = 0
    for _ in range(100):
        d = int(rng.integers(1, 5))
        G, g_last = rng.uniform(-5, 5, d), rng.uniform(-5, 5)
        comp = np.zeros((d + 1, d + 1))
        comp[0] = -np.array([*G, g_last])
        comp[1:, :-1] = np.eye(d)
        oracle = bool(np.all(np.linalg.eigvals(comp).real < 0))
        disagreements += is_hurwitz(build_Fe(G, g_last)) != oracle
    verdict(7, "Routh test agrees with eigenvalue oracle", disagreements == 0,
            f"{disagreements} disagreements in 100 samples")


def test_criterion_08_c1_smoothness():
    h = 1e-4
    worst = 0.0
    cases = []
    for level in (0.2, 1.0, 3.0, 16.8):
        p = SatParams(level)
        cases += [(lambda s, p=p: sat(s, p), lambda s, p=p: sat_deriv(s, p), b, 1.0)
                  for b in (level, level + 1, -level, -level - 1)]
    for p in (DeadZoneParams(1.2, 4.0, 2.0), DeadZoneParams(5569.0, 0.2, 0.05)):
        k = p.c / p.eps0
        cases += [(lambda s, p=p: dz(s, p), lambda s, p=p: dz_deriv(s, p), b, k)
                  for b in (p.a0, p.a0 + p.eps0, -p.a0, -p.a0 - p.eps0)]
    ok = True
    for f, fp, b, k in cases:
        jump_value = abs(f(b + h) - f(b - h) - 2 * h * fp(b))  # O(h^2) iff value and slope are continuous
        jump_slope = abs(fp(b + h) - fp(b - h))                # O(h) iff the slope is continuous
        worst = max(worst, jump_value / (k * h * h), jump_slope / (k * h))
        ok &= jump_value <= 2 * k * h * h and jump_slope <= 2 * k * h
    verdict(8, "sat and dz are C1 at every breakpoint (h=1e-4)", ok,
            f"{len(cases)} breakpoints, worst normalised jump={worst:.3f} (limit 2)")


def test_criterion_09_determinism_and_step_halving(model, gains, headline):
    traj_a, rep_a = headline
    traj_b, rep_b = run(model, gains, SimConfig())
    identical = traj_a.states.tobytes() == traj_b.states.tobytes() and rep_a.to_dict() == rep_b.to_dict()
    _, rep_h = run(model, gains, SimConfig(dt=traj_a.dt / 2))
    change = abs(rep_h.final_output_error - rep_a.final_output_error) / rep_a.final_output_error
    ok = identical and change < 0.10
    verdict(9, "bit-identical reruns, dt halving changes final error < 10%", ok,
            f"identical={identical}; dt={traj_a.dt:g}: {rep_a.final_output_error:.4e}, "
            f"dt/2: {rep_h.final_output_error:.4e}, relative change={change:.2%}")


def test_criterion_10_negative_control(model, gains):
    bad = gains.replace(check=False, kappa=0.0)
    _, rep = run(model, bad, SimConfig())
    meets = rep.final_output_error < OUTPUT_TOL and rep.final_param_error < PARAM_TOL and not rep.diverged
    verdict(10, "kappa=0 does not meet the headline thresholds", not meets,
            f"diverged={rep.diverged} at t={rep.stop_time:g}, fault={rep.fault}")
