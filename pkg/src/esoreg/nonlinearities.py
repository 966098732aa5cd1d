"""Smooth saturation and dead-zone functions, and the rules that size them.

Both nonlinearities are piecewise quadratic blends that are continuously
differentiable and odd.  The scalar kernels are numba ufuncs: they broadcast
over numpy arrays from Python and compile to plain scalar calls inside the
jitted closed-loop right-hand side, so one formula serves both paths.
"""
from dataclasses import dataclass
from itertools import product
from math import isfinite

import numpy as np
from numba import vectorize

from .errors import ConfigurationError

__all__ = [
    "SatParams",
    "DeadZoneParams",
    "BoundConstants",
    "SampleBox",
    "sat",
    "sat_deriv",
    "satv",
    "dz",
    "dz_deriv",
    "dzv",
    "min_deadzone_slope",
    "saturation_levels",
]


@vectorize(["float64(float64, float64)"], cache=True)
def sat_kernel(s, level):
    a = abs(s)
    if a <= level:
        return s
    sg = 1.0 if s > 0.0 else -1.0
    if a < level + 1.0:
        return s - sg * (a - level) ** 2 / 2.0
    return sg * (level + 0.5)


@vectorize(["float64(float64, float64)"], cache=True)
def sat_deriv_kernel(s, level):
    a = abs(s)
    if a <= level:
        return 1.0
    if a < level + 1.0:
        return 1.0 - (a - level)
    return 0.0


@vectorize(["float64(float64, float64, float64, float64)"], cache=True)
def dz_kernel(s, c, a0, eps0):
    a = abs(s)
    if a <= a0:
        return 0.0
    sg = 1.0 if s > 0.0 else -1.0
    if a < a0 + eps0:
        return sg * c * (a - a0) ** 2 / (2.0 * eps0)
    return c * s - c * (a0 + eps0 / 2.0) * sg


@vectorize(["float64(float64, float64, float64, float64)"], cache=True)
def dz_deriv_kernel(s, c, a0, eps0):
    a = abs(s)
    if a <= a0:
        return 0.0
    if a < a0 + eps0:
        return c * (a - a0) / eps0
    return c


@dataclass(frozen=True)
class SatParams:
    level: float

    def __post_init__(self):
        if not (isfinite(self.level) and self.level > 0):
            raise ConfigurationError(f"saturation level must be finite and positive, got {self.level!r}")


@dataclass(frozen=True)
class DeadZoneParams:
    c: float
    a0: float
    eps0: float

    def __post_init__(self):
        if not (isfinite(self.c) and self.c > 0):
            raise ConfigurationError(f"dead-zone slope must be positive, got {self.c!r}")
        if not (isfinite(self.a0) and self.a0 >= 0):
            raise ConfigurationError(f"dead-zone threshold must be non-negative, got {self.a0!r}")
        if not (isfinite(self.eps0) and self.eps0 > 0):
            raise ConfigurationError(f"dead-zone transition width must be positive, got {self.eps0!r}")

    @property
    def cube_halfwidth(self):
        """``a0 + eps0``: once inside this band the estimate must stay there."""
        return self.a0 + self.eps0


@dataclass(frozen=True)
class BoundConstants:
    """Bounds ``|phi| <= a1``, ``|beta_i| <= a2[i]`` and ``|nu| <= a3``."""

    a1: float
    a2: tuple
    a3: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "a2", tuple(float(v) for v in np.atleast_1d(self.a2)))
        if min((self.a1, self.a3, *self.a2)) < 0:
            raise ConfigurationError("bound constants must be non-negative")


@dataclass(frozen=True)
class SampleBox:
    """Axis-aligned region sampled when sizing the saturation levels.

    ``xi`` holds ``(lo, hi)`` per internal-model error coordinate and
    ``theta_hat`` the same per parameter-estimate coordinate.
    """

    xi: tuple
    theta_hat: tuple

    def __post_init__(self):
        for name in ("xi", "theta_hat"):
            box = np.asarray(getattr(self, name), dtype=float).reshape(-1, 2)
            if box.size == 0 or np.any(box[:, 0] > box[:, 1]) or not np.all(np.isfinite(box)):
                raise ConfigurationError(f"sample box '{name}' must be non-empty and bounded")
            object.__setattr__(self, name, tuple(map(tuple, box)))

    @classmethod
    def symmetric(cls, xi_halfwidth, theta_halfwidth):
        xi = [(-h, h) for h in np.atleast_1d(xi_halfwidth)]
        th = [(-h, h) for h in np.atleast_1d(theta_halfwidth)]
        return cls(tuple(xi), tuple(th))


def _level(p):
    return p.level if isinstance(p, SatParams) else SatParams(float(p)).level


def sat(s, p):
    """Smooth saturation with linear zone ``|s| <= level``, flat at ``level + 1/2``."""
    return sat_kernel(s, _level(p))


def sat_deriv(s, p):
    return sat_deriv_kernel(s, _level(p))


def satv(s, levels):
    """Componentwise :func:`sat`, each component with its own level."""
    s = np.asarray(s, dtype=float)
    lv = np.array([_level(p) for p in levels], dtype=float)
    if s.shape != lv.shape:
        raise ConfigurationError(f"satv: {s.size} inputs but {lv.size} levels")
    return sat_kernel(s, lv)


def dz(s, p):
    """Smooth dead zone: zero on ``[-a0, a0]``, slope ``c`` beyond ``a0 + eps0``."""
    return dz_kernel(s, p.c, p.a0, p.eps0)


def dz_deriv(s, p):
    return dz_deriv_kernel(s, p.c, p.a0, p.eps0)


def dzv(s, params):
    s = np.asarray(s, dtype=float)
    if s.shape != (len(params),):
        raise ConfigurationError(f"dzv: {s.size} inputs but {len(params)} dead-zone parameter sets")
    c, a0, e0 = (np.array([getattr(p, k) for p in params], dtype=float) for k in ("c", "a0", "eps0"))
    return dz_kernel(s, c, a0, e0)


def min_deadzone_slope(bounds, eps0):
    """Strict lower bounds on the dead-zone slopes, ``(4 a1 a2_i + 2 a2_i a3) / eps0_i``.

    The returned values are not admissible slopes themselves; pick ``c_i``
    strictly above them.
    """
    eps0 = np.atleast_1d(np.asarray(eps0, dtype=float))
    a2 = np.asarray(bounds.a2, dtype=float)
    if a2.shape != eps0.shape:
        raise ConfigurationError("a2 and eps0 must have one entry per parameter")
    if np.any(eps0 <= 0) or not np.all(np.isfinite(eps0)):
        raise ConfigurationError("transition widths eps0 must be positive")
    return (4.0 * bounds.a1 * a2 + 2.0 * a2 * bounds.a3) / eps0


def _grid(box, resolution):
    axes = [np.linspace(lo, hi, resolution) if hi > lo else np.array([lo]) for lo, hi in box]
    return np.array(list(product(*axes)), dtype=float)


def saturation_levels(sample_box, model, lam, margin=1.0, *, tau_samples, theta_true, resolution=21):
    """Saturation levels ``l_1..l_{d+1}`` by deterministic grid sampling.

    Parameters
    ----------
    sample_box : SampleBox
        Region of internal-model errors ``xi`` and estimates ``theta_hat``.
    model : SystemModel
        Supplies ``phi`` (vectorised through ``model.phi_many``).
    lam : float
        The observer damping ``lambda``.
    margin : float
        Added to every sampled maximum (at least 1).
    tau_samples : (N, d) array
        Immersion coordinates sampled on the attractor.
    theta_true : (M, q) array
        True parameter values to cover (one per sampled exogenous parameter).
    resolution : int
        Grid points per box axis.

    Returns
    -------
    numpy.ndarray of length ``d + 1``.
    """
    if margin < 1:
        raise ConfigurationError("saturation margin must be at least 1")
    if resolution < 1:
        raise ConfigurationError("grid resolution must be positive")
    tau_samples = np.atleast_2d(np.asarray(tau_samples, dtype=float))
    theta_true = np.atleast_2d(np.asarray(theta_true, dtype=float))
    if tau_samples.shape[0] == 0 or theta_true.shape[0] == 0:
        raise ConfigurationError("saturation_levels needs at least one attractor sample and one parameter value")
    xi = _grid(sample_box.xi, resolution)
    th = _grid(sample_box.theta_hat, resolution)
    d = xi.shape[1]

    m = lam * xi
    m[:, :-1] += xi[:, 1:]
    levels = np.empty(d + 1)
    levels[:d] = np.abs(m).max(axis=0) + margin

    # every (xi, theta_hat) pair, evaluated once per attractor sample
    xi_rep = np.repeat(xi, th.shape[0], axis=0)
    th_rep = np.tile(th, (xi.shape[0], 1))
    worst = 0.0
    for tau in tau_samples:
        est = model.phi_many(th_rep, xi_rep + tau)
        for theta in theta_true:
            ref = model.phi_many(theta[None, :], tau[None, :])[0]
            worst = max(worst, float(np.abs(est - ref).max()))
    levels[d] = worst + margin
    return levels
