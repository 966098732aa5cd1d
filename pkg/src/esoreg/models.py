"""Plant, exosystem and immersion data, plus the built-in worked example.

A :class:`SystemModel` bundles plain callables.  Vector arguments are float64
numpy arrays; ``phi`` and ``b_fn``/``q_fn`` return floats, everything else
returns arrays::

    s_fn(rho, w)            -> dw/dt                  (nw,)
    f0(rho, w, z)           -> drift of z             (n,)
    f1(rho, w, z, x)        -> coefficient of x in z' (n,)
    q_fn(rho, w, z, x)      -> drift of x             float
    b_fn(rho, w, z, x)      -> input gain of x        float
    tau(rho, w, z)          -> immersion coordinates  (d,)
    phi(theta, tau)         -> last immersed vector-field entry
    dphi_dtheta(theta, tau) -> gradient of phi in theta (q,)
    beta(tau)               -> adaptation direction   (q,)
    theta_true(rho)         -> true parameter         (q,)

When every callable is a numba ``njit`` function the simulator compiles the
whole closed loop; otherwise it falls back to a pure numpy integrator.
"""
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Callable

import numpy as np
from numba import njit
from numba.extending import is_jitted

from .errors import ConfigurationError, SingularInputError
from .nonlinearities import sat_deriv_kernel, sat_kernel

__all__ = [
    "CompactSets",
    "SystemModel",
    "PlantFunctions",
    "ImmersionData",
    "vdp_exosystem",
    "example_plant",
    "example_immersion",
    "example_model",
    "example_original_rhs",
    "coordinate_reduction",
    "coordinate_restore",
    "register_model",
    "get_model",
    "available_models",
    "box_grid",
]

RHO_RANGE = 0.2
TAU_LEVEL = 3.0
THETA_LEVEL = 0.2
THETA_BLEND = 0.1


def _box(box, name):
    b = np.asarray(box, dtype=float).reshape(-1, 2)
    if b.size == 0 or np.any(b[:, 0] > b[:, 1]) or not np.all(np.isfinite(b)):
        raise ConfigurationError(f"compact set '{name}' must be a non-empty bounded box")
    return tuple(map(tuple, b))


def box_grid(box, resolution):
    """Uniform grid over a box with inclusive endpoints, one row per point."""
    if resolution < 1:
        raise ConfigurationError("grid resolution must be at least 1")
    axes = [np.linspace(lo, hi, resolution) if hi > lo else np.array([lo]) for lo, hi in box]
    if not axes:
        return np.zeros((1, 0))
    return np.array(list(product(*axes)), dtype=float)


@dataclass(frozen=True)
class CompactSets:
    """Boxes over which assumptions are checked and bounds are sampled."""

    P_box: tuple
    W_box: tuple
    Cz_box: tuple
    Cx_interval: tuple
    theta_cube: tuple

    def __post_init__(self):
        for name in ("P_box", "W_box", "Cz_box"):
            object.__setattr__(self, name, _box(getattr(self, name), name))
        object.__setattr__(self, "Cx_interval", _box(self.Cx_interval, "Cx_interval")[0])
        cube = tuple(float(h) for h in np.atleast_1d(self.theta_cube))
        if not cube or min(cube) <= 0:
            raise ConfigurationError("theta_cube half-widths must be positive")
        object.__setattr__(self, "theta_cube", cube)

    def theta_box(self):
        return tuple((-h, h) for h in self.theta_cube)


@dataclass(frozen=True, eq=False)
class SystemModel:
    name: str
    n: int
    nw: int
    p: int
    d: int
    q: int
    s_fn: Callable
    f0: Callable
    f1: Callable
    q_fn: Callable
    b_fn: Callable
    tau: Callable
    phi: Callable
    dphi_dtheta: Callable
    beta: Callable
    theta_true: Callable
    b0: float
    eps0: tuple
    sets: CompactSets
    w0: tuple
    exact_immersion: bool = True
    a3: float = 0.0
    state_names: dict = field(default_factory=dict)

    def __post_init__(self):
        for k in ("n", "nw", "p", "d", "q"):
            if int(getattr(self, k)) < 1:
                raise ConfigurationError(f"model dimension {k} must be positive")
        if not self.b0 > 0:
            raise ConfigurationError("b0 must be positive")
        eps0 = tuple(float(e) for e in np.atleast_1d(self.eps0))
        if len(eps0) != self.q or min(eps0) <= 0:
            raise ConfigurationError("eps0 needs q positive entries")
        object.__setattr__(self, "eps0", eps0)
        if len(self.w0) != self.nw:
            raise ConfigurationError("default w0 has the wrong dimension")

    @property
    def jitted(self):
        fns = (self.s_fn, self.f0, self.f1, self.q_fn, self.b_fn, self.tau,
               self.phi, self.dphi_dtheta, self.beta, self.theta_true)
        return all(is_jitted(f) for f in fns)

    def dead_zone_thresholds(self, resolution=21):
        """``a0_i = max |theta_i(rho)|`` over a grid of the parameter box."""
        rhos = box_grid(self.sets.P_box, resolution)
        return np.abs(self.theta_true_many(rhos)).max(axis=0)

    # Batched evaluation, used by the grid checkers and level sizing.
    def phi_many(self, theta, tau):
        theta, tau = _pair(theta, tau)
        if is_jitted(self.phi):
            return _scalar_batch(self.phi)(theta, tau)
        return np.array([self.phi(a, b) for a, b in zip(theta, tau)], dtype=float)

    def dphi_many(self, theta, tau):
        theta, tau = _pair(theta, tau)
        if is_jitted(self.dphi_dtheta):
            return _vector_batch2(self.dphi_dtheta, self.q)(theta, tau)
        return np.array([self.dphi_dtheta(a, b) for a, b in zip(theta, tau)], dtype=float).reshape(-1, self.q)

    def beta_many(self, tau):
        tau = np.ascontiguousarray(np.atleast_2d(tau), dtype=float)
        if is_jitted(self.beta):
            return _vector_batch1(self.beta, self.q)(tau)
        return np.array([self.beta(t) for t in tau], dtype=float).reshape(-1, self.q)

    def theta_true_many(self, rho):
        rho = np.ascontiguousarray(np.atleast_2d(rho), dtype=float)
        if is_jitted(self.theta_true):
            return _vector_batch1(self.theta_true, self.q)(rho)
        return np.array([self.theta_true(r) for r in rho], dtype=float).reshape(-1, self.q)

    def tau_many(self, rho, w, z):
        rho, w, z = (np.ascontiguousarray(np.atleast_2d(a), dtype=float) for a in (rho, w, z))
        return np.array([self.tau(a, b, c) for a, b, c in zip(rho, w, z)], dtype=float).reshape(-1, self.d)


def _pair(a, b):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    n = max(a.shape[0], b.shape[0])
    a = np.ascontiguousarray(np.broadcast_to(a, (n, a.shape[1])))
    b = np.ascontiguousarray(np.broadcast_to(b, (n, b.shape[1])))
    return a, b


@lru_cache(maxsize=None)
def _scalar_batch(fn):
    @njit
    def run(a, b):
        out = np.empty(a.shape[0])
        for i in range(a.shape[0]):
            out[i] = fn(a[i], b[i])
        return out
    return run


@lru_cache(maxsize=None)
def _vector_batch2(fn, width):
    @njit
    def run(a, b):
        out = np.empty((a.shape[0], width))
        for i in range(a.shape[0]):
            out[i] = fn(a[i], b[i])
        return out
    return run


@lru_cache(maxsize=None)
def _vector_batch1(fn, width):
    @njit
    def run(a):
        out = np.empty((a.shape[0], width))
        for i in range(a.shape[0]):
            out[i] = fn(a[i])
        return out
    return run


# ---------------------------------------------------------------------------
# Worked example: a Van der Pol-type exosystem with uncertain damping profile
# driving a relative-degree-two plant reduced to relative degree one.

@njit(cache=True)
def _vdp_rhs(rho, w):
    den = 1.0 + rho[0] * w[0]
    if den == 0.0:
        raise SingularInputError("exosystem evaluated where 1 + rho*w1 = 0")
    return np.array([w[1], -w[0] + (1.0 - w[0] ** 2) * w[1] / den])


@njit(cache=True)
def _f0(rho, w, z):
    return np.array([rho[0] * z[0] - (z[0] + w[0]) ** 3 + w[1] + z[1], -z[1]])


@njit(cache=True)
def _f1(rho, w, z, x):
    return np.array([0.0, 1.0])


@njit(cache=True)
def _q(rho, w, z, x):
    return -w[0] - z[1] + z[0] * z[1] + x


@njit(cache=True)
def _b(rho, w, z, x):
    return 1.0


@njit(cache=True)
def _tau(rho, w, z):
    return np.array([w[0], w[1]])


@njit(cache=True)
def _clip_tau(v):
    return sat_kernel(v, TAU_LEVEL)


# Linear on |theta| <= 0.2 with a 0.1-wide blend, so |clip| <= 0.25 and the
# denominator 1 + clip(theta) clip(tau1) stays >= 1 - 0.25 * 3.5 > 0.
@njit(cache=True)
def _clip_theta(v):
    return THETA_BLEND * sat_kernel(v / THETA_BLEND, THETA_LEVEL / THETA_BLEND)


@njit(cache=True)
def _clip_theta_deriv(v):
    return sat_deriv_kernel(v / THETA_BLEND, THETA_LEVEL / THETA_BLEND)


@njit(cache=True)
def _phi(theta, tau):
    t1 = _clip_tau(tau[0])
    t2 = _clip_tau(tau[1])
    return -t1 + (1.0 - t1 * t1) * t2 / (1.0 + _clip_theta(theta[0]) * t1)


@njit(cache=True)
def _dphi(theta, tau):
    t1 = _clip_tau(tau[0])
    t2 = _clip_tau(tau[1])
    den = 1.0 + _clip_theta(theta[0]) * t1
    return np.array([-(1.0 - t1 * t1) * t2 * t1 * _clip_theta_deriv(theta[0]) / (den * den)])


@njit(cache=True)
def _beta(tau):
    t1 = _clip_tau(tau[0])
    t2 = _clip_tau(tau[1])
    return np.array([(1.0 - t1 * t1) * t1 * t2])


@njit(cache=True)
def _theta_true(rho):
    return np.array([rho[0]])


def vdp_exosystem(rho):
    """Right-hand side ``w -> dw/dt`` of the oscillator at a fixed ``rho``."""
    rho = float(rho)
    if abs(rho) > RHO_RANGE:
        warnings.warn(f"rho={rho} is outside the design range [-0.2, 0.2]", stacklevel=2)
    r = np.array([rho])

    def s(w):
        return _vdp_rhs(r, np.asarray(w, dtype=float))
    return s


@dataclass(frozen=True)
class PlantFunctions:
    f0: Callable
    f1: Callable
    q_fn: Callable
    b_fn: Callable
    b0: float
    n: int


@dataclass(frozen=True)
class ImmersionData:
    tau: Callable
    phi: Callable
    dphi_dtheta: Callable
    beta: Callable
    theta_true: Callable
    d: int
    q: int
    eps0: tuple


def example_plant():
    """Plant already reduced to relative degree one, state ``(z1, z2, x)``."""
    return PlantFunctions(_f0, _f1, _q, _b, b0=1.0, n=2)


def example_immersion():
    return ImmersionData(_tau, _phi, _dphi, _beta, _theta_true, d=2, q=1, eps0=(0.05,))


def coordinate_reduction(zeta):
    """Map the original plant state ``zeta`` to ``(z1, z2, x)`` with ``x = zeta2 + zeta3``."""
    zeta = np.asarray(zeta, dtype=float)
    return np.array([zeta[0], zeta[1], zeta[1] + zeta[2]])


def coordinate_restore(zx):
    zx = np.asarray(zx, dtype=float)
    return np.array([zx[0], zx[1], zx[2] - zx[1]])


def example_original_rhs(rho, w, zeta, u):
    """The plant before reduction; output ``zeta1``, relative degree two."""
    z1, z2, z3 = zeta
    return np.array([rho * z1 - (z1 + w[0]) ** 3 + w[1] + z2, z3, -w[0] + z1 * z2 + u])


def example_sets():
    return CompactSets(
        P_box=((-RHO_RANGE, RHO_RANGE),),
        W_box=((-3.0, 3.0), (-3.0, 3.0)),
        Cz_box=((-2.0, 2.0), (-2.0, 2.0)),
        Cx_interval=(-2.0, 2.0),
        theta_cube=(0.25,),
    )


def example_model():
    plant = example_plant()
    imm = example_immersion()
    return SystemModel(
        name="example",
        n=plant.n, nw=2, p=1, d=imm.d, q=imm.q,
        s_fn=_vdp_rhs, f0=plant.f0, f1=plant.f1, q_fn=plant.q_fn, b_fn=plant.b_fn,
        tau=imm.tau, phi=imm.phi, dphi_dtheta=imm.dphi_dtheta, beta=imm.beta,
        theta_true=imm.theta_true,
        b0=plant.b0, eps0=imm.eps0, sets=example_sets(), w0=(1.0, 0.0),
        exact_immersion=True, a3=0.0,
    )


_FACTORIES = {"example": example_model}
_INSTANCES = {}


def register_model(name, factory):
    """Add a model factory to the catalog used by scenario files."""
    if not name or not callable(factory):
        raise ConfigurationError("register_model needs a name and a zero-argument factory")
    _FACTORIES[name] = factory
    _INSTANCES.pop(name, None)


def get_model(name):
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown model '{name}'; available: {', '.join(sorted(_FACTORIES))}") from None
    if name not in _INSTANCES:
        _INSTANCES[name] = factory()
    return _INSTANCES[name]


def available_models():
    return sorted(_FACTORIES)
