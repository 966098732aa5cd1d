"""How the residual gain kappa and the observer speed ell shape convergence.

Designs the remaining gains once, then sweeps (kappa, ell) on a small grid.
Small kappa or slow observers fail to settle inside the 50 s horizon, which
is the semiglobal trade-off in action.

    python3 demos/gain_sweep.py
"""
from esoreg import SimConfig, example_model, sweep
from esoreg.design import design_gains

model = example_model()
gains, _ = design_gains(model, ell=10.0, kappa=30.0)

rows = sweep(model, gains, SimConfig(rho=(0.2,)), {"ell": [5.0, 10.0], "kappa": [5.0, 10.0, 30.0, 100.0]})

print("  ell  kappa   settle[s]     |y_e(50)|   |dtheta(50)|")
for row in rows:
    p = row.point
    if row.error:
        print(f"{p['ell']:5g} {p['kappa']:6g}   error: {row.error}")
        continue
    r = row.report
    settle = "     -" if r.output_settle_time is None else f"{r.output_settle_time:9.3f}"
    print(f"{p['ell']:5g} {p['kappa']:6g} {settle:>11} {r.final_output_error:13.2e} {r.final_param_error:14.2e}")
