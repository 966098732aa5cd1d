"""Adaptive internal model with an extended-state observer, and the control law.

The regulator state is ``(eta, theta_hat, xi_hat, sigma_hat)``:

* ``eta`` (d) reproduces the steady-state input through ``phi(theta_hat, eta)``,
* ``theta_hat`` (q) estimates the uncertain parameter,
* ``xi_hat`` (d) and ``sigma_hat`` (1) form the extended-state observer of the
  internal-model error and of the lumped mismatch it suffers.

The control is ``u = v_u + eta_1`` with residual feedback ``v_u = -kappa * x``.
Functions in this module are the readable matrix-form reference; the
simulator's compiled kernel is checked against them in the test suite.
"""
from dataclasses import InitVar, dataclass, fields
from math import isfinite

import numpy as np

from .errors import ConfigurationError, GainValidationError
from .nonlinearities import BoundConstants, DeadZoneParams, dzv, min_deadzone_slope, sat, satv
from .prime import build_Fe, gain_scaling, prime_triplet, routh_hurwitz

__all__ = [
    "RegulatorGains",
    "RegulatorState",
    "StateLayout",
    "control_input",
    "regulator_derivatives",
    "closed_loop_derivatives",
    "observer_diagnostic",
]


@dataclass(frozen=True, eq=False)
class RegulatorGains:
    """Design parameters of the regulator.

    Construction validates the gains: ``Fe(G, g_last)`` must pass the Routh
    test, and when ``bounds`` are declared every dead-zone slope must
    exceed its lower bound.  Pass ``check=False`` (or use
    :meth:`unchecked`) to build deliberately bad gains for experiments.
    """

    lam: float
    ell: float
    kappa: float
    G: np.ndarray
    g_last: float
    sat_levels: np.ndarray
    dz_params: tuple
    bounds: BoundConstants = None
    check: InitVar[bool] = True

    def __post_init__(self, check):
        G = np.atleast_1d(np.asarray(self.G, dtype=float)).copy()
        levels = np.atleast_1d(np.asarray(self.sat_levels, dtype=float)).copy()
        dzp = tuple(p if isinstance(p, DeadZoneParams) else DeadZoneParams(*p) for p in self.dz_params)
        G.setflags(write=False)
        levels.setflags(write=False)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "sat_levels", levels)
        object.__setattr__(self, "dz_params", dzp)
        object.__setattr__(self, "g_last", float(self.g_last))
        object.__setattr__(self, "validated", bool(check))
        if G.size == 0 or levels.size != G.size + 1:
            raise ConfigurationError(f"need d observer gains and d+1 saturation levels, got {G.size} and {levels.size}")
        if not dzp:
            raise ConfigurationError("at least one dead-zone parameter set is required")
        if check:
            self._validate()

    def _validate(self):
        for name in ("lam", "ell", "kappa"):
            v = getattr(self, name)
            if not (isfinite(v) and v > 0):
                raise GainValidationError(f"{name} must be positive, got {v!r}")
        if np.any(self.sat_levels <= 0):
            raise GainValidationError("saturation levels must be positive")
        routh = routh_hurwitz(build_Fe(self.G, self.g_last).char_poly)
        if not routh.hurwitz:
            why = "zero pivot in Routh table" if routh.degenerate else "sign change in Routh first column"
            raise GainValidationError(
                f"observer error matrix is not Hurwitz ({why}; first column {routh.first_column})")
        if self.bounds is not None:
            eps0 = [p.eps0 for p in self.dz_params]
            lower = min_deadzone_slope(self.bounds, eps0)
            for i, (p, lo) in enumerate(zip(self.dz_params, lower)):
                if not p.c > lo:
                    raise GainValidationError(f"dead-zone slope c_{i + 1}={p.c} must exceed {lo}")

    @classmethod
    def unchecked(cls, **kw):
        return cls(**kw, check=False)

    @property
    def d(self):
        return self.G.size

    @property
    def q(self):
        return len(self.dz_params)

    def replace(self, check=True, **changes):
        """Copy with some fields changed; validation runs again unless ``check=False``."""
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return type(self)(**kw, check=check)

    def to_dict(self):
        return {
            "lambda": self.lam,
            "ell": self.ell,
            "kappa": self.kappa,
            "G": [float(g) for g in self.G],
            "g_last": self.g_last,
            "sat_levels": [float(v) for v in self.sat_levels],
            "dz": [{"c": p.c, "a0": p.a0, "eps0": p.eps0} for p in self.dz_params],
            "validated": self.validated,
        }


@dataclass(frozen=True, eq=False)
class RegulatorState:
    eta: np.ndarray
    theta_hat: np.ndarray
    xi_hat: np.ndarray
    sigma_hat: float

    def __post_init__(self):
        for name in ("eta", "theta_hat", "xi_hat"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        object.__setattr__(self, "sigma_hat", float(self.sigma_hat))
        if self.eta.size != self.xi_hat.size:
            raise ConfigurationError("eta and xi_hat must have the same dimension")

    @classmethod
    def zeros(cls, d, q):
        return cls(np.zeros(d), np.zeros(q), np.zeros(d), 0.0)

    @classmethod
    def from_vector(cls, v, d, q):
        v = np.asarray(v, dtype=float)
        if v.size != 2 * d + q + 1:
            raise ConfigurationError(f"regulator vector must have {2 * d + q + 1} entries")
        return cls(v[:d], v[d:d + q], v[d + q:2 * d + q], v[-1])

    def as_vector(self):
        return np.concatenate([self.eta, self.theta_hat, self.xi_hat, [self.sigma_hat]])

    def is_finite(self):
        return bool(np.all(np.isfinite(self.as_vector())))


class StateLayout:
    """Positions of each block in the flat closed-loop state vector.

    The order is ``w, z, x, eta, theta_hat, xi_hat, sigma_hat``; the
    exogenous parameter ``rho`` is constant and kept outside the vector.
    """

    def __init__(self, model):
        nw, n, d, q = model.nw, model.n, model.d, model.q
        self.nw, self.n, self.d, self.q = nw, n, d, q
        self.w = slice(0, nw)
        self.z = slice(nw, nw + n)
        self.x = nw + n
        self.eta = slice(self.x + 1, self.x + 1 + d)
        self.theta_hat = slice(self.eta.stop, self.eta.stop + q)
        self.xi_hat = slice(self.theta_hat.stop, self.theta_hat.stop + d)
        self.sigma_hat = self.xi_hat.stop
        self.size = self.sigma_hat + 1
        self.regulator = slice(self.eta.start, self.size)
        self.names = (
            [f"w{i + 1}" for i in range(nw)]
            + [f"z{i + 1}" for i in range(n)]
            + ["x"]
            + [f"eta_{i + 1}" for i in range(d)]
            + [f"theta_hat_{i + 1}" for i in range(q)]
            + [f"xi_hat_{i + 1}" for i in range(d)]
            + ["sigma_hat"]
        )

    def pack(self, w, z, x, reg):
        y = np.empty(self.size)
        y[self.w] = w
        y[self.z] = z
        y[self.x] = x
        y[self.regulator] = reg.as_vector()
        return y

    def regulator_state(self, y):
        return RegulatorState.from_vector(y[self.regulator], self.d, self.q)


def control_input(gains, state, y):
    """``u = -kappa * y + eta_1``; only the first internal-model state reaches the plant."""
    return -gains.kappa * float(y) + float(state.eta[0])


def _check_dims(gains, model):
    if gains.d != model.d or gains.q != model.q:
        raise ConfigurationError(
            f"gains are sized for d={gains.d}, q={gains.q} but the model has d={model.d}, q={model.q}")


def regulator_derivatives(gains, state, model, v_u):
    """Time derivative of the regulator state for a given residual input ``v_u``."""
    _check_dims(gains, model)
    if not state.is_finite():
        raise ConfigurationError("regulator state contains non-finite values")
    d = gains.d
    pt = prime_triplet(d)
    A, B = pt.A, pt.B[:, 0]
    levels = gains.sat_levels
    xi, sigma = state.xi_hat, state.sigma_hat

    s_xi = satv((A + gains.lam * np.eye(d)) @ xi, levels[:d])
    s_sigma = float(sat(sigma, levels[d]))
    innovation = v_u + xi[0]

    eta_dot = A @ state.eta + B * model.phi(state.theta_hat, state.eta) - s_xi - B * s_sigma
    theta_dot = np.asarray(model.beta(state.eta)) * s_sigma - dzv(state.theta_hat, gains.dz_params)
    xi_dot = (A @ xi + B * sigma - s_xi - B * s_sigma
              - gain_scaling(gains.ell, d) @ gains.G * innovation)
    sigma_dot = -gains.ell ** (d + 1) * gains.g_last * innovation
    return RegulatorState(eta_dot, theta_dot, xi_dot, sigma_dot)


def closed_loop_derivatives(model, gains, rho, y):
    """Derivative of the full closed-loop vector (see :class:`StateLayout`).

    ``rho`` is constant (its derivative is identically zero) and is passed
    separately.  The residual input is evaluated once and shared by the
    plant input and the observer innovation.
    """
    _check_dims(gains, model)
    lay = StateLayout(model)
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    y = np.asarray(y, dtype=float)
    w, z, x = y[lay.w], y[lay.z], float(y[lay.x])
    reg = lay.regulator_state(y)

    v_u = -gains.kappa * x
    u = v_u + reg.eta[0]
    dy = np.empty(lay.size)
    dy[lay.w] = model.s_fn(rho, w)
    dy[lay.z] = model.f0(rho, w, z) + model.f1(rho, w, z, x) * x
    dy[lay.x] = model.q_fn(rho, w, z, x) + model.b_fn(rho, w, z, x) * u
    dy[lay.regulator] = regulator_derivatives(gains, reg, model, v_u).as_vector()
    return dy


def observer_diagnostic(model, rho, y):
    """Internal-model error ``eta - tau`` and the observer's residual on it.

    The second output is ``(eta - tau) - xi_hat``; it is a meaningful
    estimation error where the immersion is exact on the attractor.
    """
    lay = StateLayout(model)
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    y = np.asarray(y, dtype=float)
    eta_err = y[lay.eta] - np.asarray(model.tau(rho, y[lay.w], y[lay.z]))
    return eta_err, eta_err - y[lay.xi_hat]
