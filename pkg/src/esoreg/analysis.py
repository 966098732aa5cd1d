"""Grid-based checkers for the standing assumptions and the bound constants.

Every checker is deterministic (uniform grids with inclusive endpoints) and
returns a :class:`CheckReport` whose witness point reproduces the reported
worst value.  The stability assumptions on the zero dynamics cannot be
verified on a finite grid; :func:`check_attractor_bound` and closed-loop
simulation are the empirical stand-ins.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, SimulationFault
from .models import box_grid
from .prime import prime_triplet
from .nonlinearities import BoundConstants
from .simulate import integrate_autonomous

__all__ = [
    "CheckReport",
    "AttractorSamples",
    "sample_attractor",
    "tau_grid",
    "estimate_bounds",
    "check_monotonicity",
    "check_pe",
    "check_attractor_bound",
    "check_b_lower_bound",
    "check_immersion",
]


@dataclass
class CheckReport:
    name: str
    passed: bool
    worst_value: float
    witness_point: dict
    samples_used: int
    flags: tuple = ()
    detail: str = ""

    def line(self):
        verdict = "PASS" if self.passed else "FAIL"
        worst = "n/a" if self.worst_value is None else f"{self.worst_value:.6g}"
        flags = f" [{', '.join(self.flags)}]" if self.flags else ""
        return f"{verdict} {self.name}: worst={worst} samples={self.samples_used}{flags} {self.detail}".rstrip()


@dataclass
class AttractorSamples:
    """States of the zero dynamics recorded after convergence, one row per sample."""

    rho: np.ndarray
    w: np.ndarray
    z: np.ndarray
    tau: np.ndarray

    def __len__(self):
        return self.tau.shape[0]

    def take(self, idx):
        """Subset of the samples (any numpy index)."""
        return AttractorSamples(self.rho[idx], self.w[idx], self.z[idx], self.tau[idx])


def sample_attractor(model, rho_values=None, *, w0=None, z0=None, warmup=50.0, horizon=20.0,
                     dt=1e-3, samples_per_rho=200):
    """Integrate the zero dynamics and keep evenly spaced post-warmup samples.

    ``rho_values`` defaults to the corners and centre of the parameter box.
    """
    if rho_values is None:
        rho_values = box_grid(model.sets.P_box, 3)
    rho_values = np.atleast_2d(np.asarray(rho_values, dtype=float).reshape(-1, model.p))
    w0 = np.asarray(model.w0 if w0 is None else w0, dtype=float)
    z0 = np.zeros(model.n) if z0 is None else np.asarray(z0, dtype=float)
    nsteps = max(1, int(round(horizon / dt)))
    every = max(1, nsteps // samples_per_rho)
    rows = {"rho": [], "w": [], "z": []}
    for rho in rho_values:
        _, rec = integrate_autonomous(model, rho, np.concatenate([w0, z0]), dt, warmup, with_z=True)
        _, rec = integrate_autonomous(model, rho, rec[-1], dt, horizon, every=every, with_z=True)
        rec = rec[1:]
        rows["rho"].append(np.repeat(rho[None, :], rec.shape[0], axis=0))
        rows["w"].append(rec[:, :model.nw])
        rows["z"].append(rec[:, model.nw:])
    rho, w, z = (np.vstack(rows[k]) for k in ("rho", "w", "z"))
    return AttractorSamples(rho, w, z, model.tau_many(rho, w, z))


def tau_grid(model, sets, resolution=21, aux_resolution=5):
    """Distinct immersion coordinates over a grid of ``P x W x Cz``.

    The exogenous-state axes use ``resolution`` points; the parameter and
    plant axes use the coarser ``aux_resolution``.
    """
    rho = box_grid(sets.P_box, aux_resolution)
    w = box_grid(sets.W_box, resolution)
    z = box_grid(sets.Cz_box, aux_resolution)
    idx = np.array(np.meshgrid(np.arange(len(rho)), np.arange(len(w)), np.arange(len(z)), indexing="ij"))
    idx = idx.reshape(3, -1)
    tau = model.tau_many(rho[idx[0]], w[idx[1]], z[idx[2]])
    return np.unique(tau, axis=0)


def _tau_samples(model, sets, resolution, tau_samples):
    if tau_samples is None:
        return tau_grid(model, sets, resolution)
    if isinstance(tau_samples, AttractorSamples):
        tau_samples = tau_samples.tau
    tau = np.atleast_2d(np.asarray(tau_samples, dtype=float))
    if tau.shape[0] == 0:
        raise ConfigurationError("no immersion samples supplied")
    return tau


def estimate_bounds(model, sets, resolution=21, *, tau_samples=None, safety=1.1, a3=None):
    """Sampled bound constants, each maximum inflated by ``safety``.

    ``a1`` bounds ``|phi(s, r)|`` and ``a2_i`` bounds ``|beta_i(r)|`` over the
    estimate cube and the immersion samples (the attractor when
    ``tau_samples`` is given, otherwise a grid of the declared boxes).  For
    models whose immersion is exact on the attractor ``a3`` is 0.
    """
    r = _tau_samples(model, sets, resolution, tau_samples)
    s = box_grid(sets.theta_box(), resolution)
    ss = np.repeat(s, r.shape[0], axis=0)
    rr = np.tile(r, (s.shape[0], 1))
    a1 = safety * float(np.abs(model.phi_many(ss, rr)).max())
    a2 = safety * np.abs(model.beta_many(r)).max(axis=0)
    if a3 is None:
        a3 = 0.0 if model.exact_immersion else model.a3
    return BoundConstants(a1, tuple(a2), float(a3))


def check_monotonicity(model, sets, resolution=21, *, tau_samples=None, rho_resolution=5, tol=1e-10):
    """Worst value of ``(s1 - theta)' beta(r) dphi(s2, r)/ds2 (s1 - theta)``.

    Passes iff the maximum over the grid is at most ``tol``.
    """
    if model.dphi_dtheta is None:
        raise ConfigurationError("monotonicity check needs the model's dphi_dtheta")
    r = _tau_samples(model, sets, resolution, tau_samples)
    s = box_grid(sets.theta_box(), resolution)
    rhos = box_grid(sets.P_box, rho_resolution)
    thetas = model.theta_true_many(rhos)

    B = model.beta_many(r)                                       # (Nr, q)
    D = model.dphi_many(np.repeat(s, r.shape[0], axis=0),
                        np.tile(r, (s.shape[0], 1))).reshape(s.shape[0], r.shape[0], -1)
    s1 = np.repeat(s, thetas.shape[0], axis=0)
    th = np.tile(thetas, (s.shape[0], 1))
    delta = s1 - th                                              # (Nd, q)
    left = delta @ B.T                                           # (Nd, Nr)
    right = np.einsum("abq,cq->abc", D, delta)                   # (Ns2, Nr, Nd)
    val = right * left.T[None, :, :]
    a, b, c = np.unravel_index(np.argmax(val), val.shape)
    worst = float(val[a, b, c])
    witness = {
        "s1": s1[c].tolist(), "s2": s[a].tolist(), "r": r[b].tolist(),
        "theta": th[c].tolist(), "rho": rhos[c % thetas.shape[0]].tolist(),
    }
    return CheckReport("monotonicity", worst <= tol, worst, witness, int(val.size),
                       detail=f"tol={tol:g}")


def check_pe(model, attractor, s_grid, tol=1e-6):
    """Finite-sample excitation test on the attractor.

    For every pair of distinct grid values the largest separation
    ``|phi(s1, tau) - phi(s2, tau)|`` along the samples must exceed ``tol``;
    samples from different ``rho`` are treated as separate trajectories.
    The reported worst value is the smallest such separation.  A finite
    sample can only support the condition, never certify it.
    """
    if isinstance(attractor, AttractorSamples):
        if len(attractor) == 0:
            raise ConfigurationError("empty attractor sample")
        groups = [attractor.tau[np.all(attractor.rho == r, axis=1)] for r in np.unique(attractor.rho, axis=0)]
    else:
        tau = np.atleast_2d(np.asarray(attractor, dtype=float))
        if tau.size == 0:
            raise ConfigurationError("empty attractor sample")
        groups = [tau]
    s = np.asarray(s_grid, dtype=float).reshape(-1, model.q)
    s = np.unique(s, axis=0)
    if s.shape[0] < 2:
        return CheckReport("persistent_excitation", True, None, {}, 0, ("trivial",),
                           "fewer than two distinct parameter values")
    worst, witness, used = np.inf, {}, 0
    for gi, tau in enumerate(groups):
        vals = np.array([model.phi_many(si[None, :], tau) for si in s])      # (Ns, Nt)
        for i in range(s.shape[0]):
            sep = np.abs(vals[i + 1:] - vals[i]).max(axis=1)
            used += sep.size * tau.shape[0]
            if sep.size and sep.min() < worst:
                j = int(np.argmin(sep))
                worst = float(sep[j])
                k = int(np.argmax(np.abs(vals[i + 1 + j] - vals[i])))
                witness = {"s1": s[i].tolist(), "s2": s[i + 1 + j].tolist(),
                           "tau": tau[k].tolist(), "group": gi}
    return CheckReport("persistent_excitation", worst > tol, worst, witness, used,
                       detail=f"min separation over pairs, tol={tol:g}")


def check_attractor_bound(model, rho_values, *, warmup=50.0, horizon=200.0, bound=3.0, tol=1e-3,
                          w0=None, dt=1e-3):
    """Exosystem-only runs must stay in ``max_i |w_i| <= bound`` after the warmup."""
    rho_values = np.asarray(rho_values, dtype=float).reshape(-1, model.p)
    if rho_values.shape[0] == 0:
        return CheckReport("attractor_bound", True, None, {}, 0, ("trivial",), "no parameter values")
    w0 = np.asarray(model.w0 if w0 is None else w0, dtype=float)
    worst, witness, used, flags = -np.inf, {}, 0, []
    for rho in rho_values:
        try:
            _, rec = integrate_autonomous(model, rho, w0, dt, warmup)
            times, rec = integrate_autonomous(model, rho, rec[-1], dt, horizon)
        except SimulationFault as exc:
            return CheckReport("attractor_bound", False, None, {"rho": rho.tolist()}, used,
                               ("singular",), str(exc))
        mags = np.abs(rec).max(axis=1)
        k = int(np.argmax(mags))
        used += rec.shape[0]
        if mags[k] > worst:
            worst = float(mags[k])
            witness = {"rho": rho.tolist(), "t": float(warmup + times[k]), "w": rec[k].tolist()}
        if mags[k] < 1e-9 and "off-attractor" not in flags:
            flags.append("off-attractor")
    return CheckReport("attractor_bound", worst <= bound + tol, worst, witness, used, tuple(flags),
                       f"bound={bound:g} tol={tol:g}")


def check_b_lower_bound(model, sets, resolution=5, b0=None):
    """Smallest sampled input gain ``b`` over ``P x W x Cz x Cx`` against ``b0``."""
    if resolution < 1:
        raise ConfigurationError("grid resolution must be at least 1")
    b0 = model.b0 if b0 is None else float(b0)
    rho = box_grid(sets.P_box, resolution)
    w = box_grid(sets.W_box, resolution)
    z = box_grid(sets.Cz_box, resolution)
    xs = np.linspace(*sets.Cx_interval, resolution) if sets.Cx_interval[1] > sets.Cx_interval[0] \
        else np.array([sets.Cx_interval[0]])
    worst, witness, used = np.inf, {}, 0
    for r in rho:
        for wi in w:
            for zi in z:
                for x in xs:
                    b = float(model.b_fn(r, wi, zi, float(x)))
                    used += 1
                    if b < worst:
                        worst = b
                        witness = {"rho": r.tolist(), "w": wi.tolist(), "z": zi.tolist(), "x": float(x)}
    return CheckReport("b_lower_bound", worst >= b0, worst, witness, used, detail=f"b0={b0:g}")


def check_immersion(model, samples, *, h=1e-5, tol=1e-8):
    """Residual of the immersion identity along zero-dynamics samples.

    At every sample two residuals are formed: the rate of ``tau`` along the
    flow (central difference of step ``h``) against
    ``A tau + B phi(theta, tau)``, and the first entry of ``tau`` against
    the input ``-q / b`` that holds the output at zero.  The worst absolute
    entry over both must not exceed ``tol``.
    """
    if len(samples) == 0:
        raise ConfigurationError("empty attractor sample")
    pt = prime_triplet(model.d)
    worst, witness = -np.inf, {}
    for rho, w, z, tau in zip(samples.rho, samples.w, samples.z, samples.tau):
        dw = np.asarray(model.s_fn(rho, w))
        dz = np.asarray(model.f0(rho, w, z))
        fwd = np.asarray(model.tau(rho, w + h * dw, z + h * dz))
        bwd = np.asarray(model.tau(rho, w - h * dw, z - h * dz))
        rate = (fwd - bwd) / (2.0 * h)
        theta = np.asarray(model.theta_true(rho))
        flow = pt.A @ tau + pt.B[:, 0] * model.phi(theta, tau)
        u_ss = -model.q_fn(rho, w, z, 0.0) / model.b_fn(rho, w, z, 0.0)
        res = max(float(np.abs(rate - flow).max()), abs(float(tau[0]) - u_ss))
        if res > worst:
            worst = res
            witness = {"rho": rho.tolist(), "w": w.tolist(), "z": z.tolist()}
    return CheckReport("immersion", worst <= tol, worst, witness, len(samples), detail=f"tol={tol:g}")
