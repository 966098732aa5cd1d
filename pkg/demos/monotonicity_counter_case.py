"""The sign condition on a parameter-linear model.

For phi(s, r) = s * r1 with beta(r) = r1 the quadratic form in the
monotonicity condition is (s1 - theta)^2 r1^2, which is never negative.
The grid checker reports that honestly, next to the example model where the
form is non-positive everywhere.

    python3 demos/monotonicity_counter_case.py
"""
from dataclasses import replace

import numpy as np

from esoreg import example_model
from esoreg.analysis import check_monotonicity

model = example_model()
linear = replace(model, name="linear",
                 phi=lambda s, r: s[0] * r[0],
                 dphi_dtheta=lambda s, r: np.array([r[0]]),
                 beta=lambda r: np.array([r[0]]))

for m in (model, linear):
    rep = check_monotonicity(m, m.sets, 21)
    print(f"{m.name:8s} {rep.line()}")
    print(f"         witness: {rep.witness_point}")
