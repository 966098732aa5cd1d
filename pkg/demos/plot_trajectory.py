"""Plot a trajectory written by ``esoreg run`` (needs matplotlib).

    esoreg run example_rho02 --out out/
    python3 demos/plot_trajectory.py out/trajectory.csv out/trajectory.png
"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

src = sys.argv[1] if len(sys.argv) > 1 else "out/trajectory.csv"
dst = sys.argv[2] if len(sys.argv) > 2 else "trajectory.png"

data = np.genfromtxt(src, delimiter=",", names=True)
fig, ax = plt.subplots(3, 1, sharex=True, figsize=(7, 7))
ax[0].plot(data["t"], data["y_e"])
ax[0].set_ylabel("y_e")
ax[1].plot(data["t"], data["theta_hat_1"])
ax[1].set_ylabel("theta_hat")
ax[2].plot(data["t"], data["u"], label="u")
ax[2].plot(data["t"], data["w1"], "--", label="w1")
ax[2].set_ylabel("input")
ax[2].set_xlabel("t [s]")
ax[2].legend()
fig.tight_layout()
fig.savefig(dst, dpi=120)
print("wrote", dst)
