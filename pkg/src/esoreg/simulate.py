"""Fixed-step RK4 simulation of the closed loop, with convergence metrics."""
import logging
from dataclasses import dataclass, field, replace
from itertools import product
from math import ceil, isfinite

import numpy as np

from . import _engine
from .errors import ConfigurationError, NonFiniteStateError, SimulationFault, SingularInputError
from .regulator import RegulatorState, StateLayout, closed_loop_derivatives

__all__ = [
    "SimConfig",
    "Trajectory",
    "ConvergenceReport",
    "SweepRow",
    "rk4_step",
    "auto_dt",
    "run",
    "sweep",
    "integrate_autonomous",
    "SWEEP_PARAMETERS",
]

log = logging.getLogger(__name__)

MAX_RECORDS = 100_000


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings; ``None`` entries are resolved by the default recipes.

    ``dt=None`` uses :func:`auto_dt`, ``record_every=None`` keeps at most
    about 1e5 recorded rows, ``w0=None`` takes the model's default exogenous
    start and ``z0``/``regulator0=None`` start from zero.
    """

    rho: tuple = (0.2,)
    w0: tuple = None
    z0: tuple = None
    x0: float = 0.0
    regulator0: RegulatorState = None
    dt: float = None
    t_final: float = 50.0
    exo_warmup: float = 30.0
    record_every: int = None
    output_tol: float = 1e-2
    param_tol: float = 5e-2
    divergence_limit: float = 1e8
    engine: str = "auto"

    def __post_init__(self):
        object.__setattr__(self, "rho", tuple(float(r) for r in np.atleast_1d(self.rho)))
        if self.dt is not None and not (isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError(f"dt must be positive, got {self.dt!r}")
        if not (isfinite(self.t_final) and self.t_final >= 0):
            raise ConfigurationError(f"t_final must be non-negative, got {self.t_final!r}")
        if self.dt is not None and 0 < self.t_final < self.dt:
            raise ConfigurationError("t_final must be zero or at least one step long")
        if not (isfinite(self.exo_warmup) and self.exo_warmup >= 0):
            raise ConfigurationError("exo_warmup must be non-negative")
        if self.record_every is not None and (int(self.record_every) != self.record_every or self.record_every < 1):
            raise ConfigurationError("record_every must be a positive integer")
        if self.engine not in ("auto", "numba", "python"):
            raise ConfigurationError(f"unknown engine '{self.engine}'")
        if not (self.output_tol > 0 and self.param_tol > 0 and self.divergence_limit > 0):
            raise ConfigurationError("tolerances and the divergence limit must be positive")


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    outputs: np.ndarray
    names: list
    rho: tuple
    dt: float

    def __len__(self):
        return self.times.size

    def __getitem__(self, name):
        if name == "t":
            return self.times
        if name == "u":
            return self.controls
        if name == "y_e":
            return self.outputs
        return self.states[:, self.names.index(name)]

    @property
    def header(self):
        return ["t", *self.names, "u", "y_e"]

    def table(self):
        """All recorded columns in :attr:`header` order."""
        return np.column_stack([self.times, self.states, self.controls, self.outputs])


@dataclass
class ConvergenceReport:
    final_output_error: float
    output_settle_time: float
    final_param_error: float
    sup_norms: dict
    diverged: bool
    stop_time: float
    output_tol: float
    param_tol: float
    fault: str = None

    @property
    def output_converged(self):
        return not self.diverged and self.final_output_error < self.output_tol

    @property
    def param_converged(self):
        return not self.diverged and self.final_param_error < self.param_tol

    @property
    def converged(self):
        return self.output_converged and self.param_converged

    def to_dict(self):
        return {
            "final_output_error": self.final_output_error,
            "output_settle_time": self.output_settle_time,
            "final_param_error": self.final_param_error,
            "sup_norms": dict(self.sup_norms),
            "diverged": self.diverged,
            "stop_time": self.stop_time,
            "fault": self.fault,
            "output_tol": self.output_tol,
            "param_tol": self.param_tol,
            "output_converged": self.output_converged,
            "param_converged": self.param_converged,
        }


def rk4_step(f, y, dt):
    """One classical fourth-order Runge-Kutta step of ``y' = f(y)``.

    Raises :class:`NonFiniteStateError` naming the first stage (1-4) whose
    slope is not finite, or stage 0 if only the combined update is.
    """
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    y = np.asarray(y, dtype=float)
    h = 0.5 * dt
    k1 = np.asarray(f(y), dtype=float)
    if not np.all(np.isfinite(k1)):
        raise NonFiniteStateError(1)
    k2 = np.asarray(f(y + h * k1), dtype=float)
    if not np.all(np.isfinite(k2)):
        raise NonFiniteStateError(2)
    k3 = np.asarray(f(y + h * k2), dtype=float)
    if not np.all(np.isfinite(k3)):
        raise NonFiniteStateError(3)
    k4 = np.asarray(f(y + dt * k3), dtype=float)
    if not np.all(np.isfinite(k4)):
        raise NonFiniteStateError(4)
    out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NonFiniteStateError(0)
    return out


def auto_dt(gains):
    """Default step: ``min(1e-3, 0.1 / ell**(d+1), 1 / max c_i)``.

    The observer's last correction carries ``ell**(d+1)`` and the dead zone
    has slope ``c_i`` outside its transition band; both bound the explicit
    RK4 step.
    """
    c_max = max(p.c for p in gains.dz_params)
    return min(1e-3, 0.1 / gains.ell ** (gains.d + 1), 1.0 / c_max)


def _steps(duration, dt):
    if duration == 0:
        return 0, dt
    n = max(1, ceil(duration / dt - 1e-9))
    return n, duration / n


def integrate_autonomous(model, rho, y0, dt, duration, every=1, with_z=False):
    """Integrate the exosystem (or the zero dynamics with ``with_z``) alone.

    Returns ``(times, states)``; states hold ``w`` or ``(w, z)``.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    y0 = np.asarray(y0, dtype=float)
    nsteps, dt = _steps(duration, dt)
    try:
        if model.jitted:
            rec, times, status = _engine.compile_model(model).autonomous(y0, rho, dt, nsteps, every, with_z)
            if status:
                raise SimulationFault("non-finite exogenous state")
            return times, rec
        nw = model.nw

        def f(y):
            out = np.empty_like(y)
            out[:nw] = model.s_fn(rho, y[:nw])
            if with_z:
                out[nw:] = model.f0(rho, y[:nw], y[nw:])
            return out
        return _python_loop(f, y0, dt, nsteps, every, np.inf)[:2]
    except (SingularInputError, ZeroDivisionError) as exc:
        raise SimulationFault(f"model fault while integrating exogenous dynamics: {exc}") from exc


def _python_loop(f, y0, dt, nsteps, every, limit):
    rows = [y0.copy()]
    times = [0.0]
    y = y0
    status, stage = 0, 0
    for i in range(nsteps):
        try:
            y = rk4_step(f, y, dt)
        except NonFiniteStateError as exc:
            status, stage = 2, exc.stage
            break
        if np.any(np.abs(y) > limit):
            status = 1
        if status or (i + 1) % every == 0 or i + 1 == nsteps:
            rows.append(y)
            times.append((i + 1) * dt)
        if status:
            break
    return np.array(times), np.array(rows), status, stage


def run(model, gains, config=SimConfig()):
    """Simulate the regulated closed loop.

    The exosystem is first integrated alone for ``config.exo_warmup``
    seconds so the loop starts with the exogenous signal on its attractor;
    the recorded time axis starts when the regulator is switched on.

    Returns
    -------
    (Trajectory, ConvergenceReport)
    """
    if gains.d != model.d or gains.q != model.q:
        raise ConfigurationError(
            f"gains are sized for d={gains.d}, q={gains.q} but the model has d={model.d}, q={model.q}")
    if len(config.rho) != model.p:
        raise ConfigurationError(f"rho must have {model.p} entries")
    lay = StateLayout(model)
    rho = np.array(config.rho)
    dt0 = config.dt if config.dt is not None else auto_dt(gains)
    nsteps, dt = _steps(config.t_final, dt0)
    every = config.record_every or max(1, ceil(nsteps / MAX_RECORDS))

    w0 = np.asarray(config.w0 if config.w0 is not None else model.w0, dtype=float)
    z0 = np.zeros(model.n) if config.z0 is None else np.asarray(config.z0, dtype=float)
    reg0 = config.regulator0 or RegulatorState.zeros(model.d, model.q)
    if w0.size != model.nw or z0.size != model.n or reg0.eta.size != model.d or reg0.theta_hat.size != model.q:
        raise ConfigurationError("initial conditions do not match the model dimensions")
    if config.exo_warmup > 0:
        _, wrec = integrate_autonomous(model, rho, w0, dt, config.exo_warmup)
        w0 = wrec[-1]
    y0 = lay.pack(w0, z0, config.x0, reg0)

    use_numba = config.engine == "numba" or (config.engine == "auto" and model.jitted)
    if use_numba and not model.jitted:
        raise ConfigurationError("the numba engine needs a model built from njit callables")
    log.debug("run: dt=%g steps=%d every=%d engine=%s", dt, nsteps, every, "numba" if use_numba else "python")
    try:
        if use_numba:
            k = _engine.compile_model(model)
            states, times, status, stage, _ = k.closed_loop(
                y0, rho, _engine.pack_gains(gains), dt, nsteps, every, config.divergence_limit)
        else:
            times, states, status, stage = _python_loop(
                lambda y: closed_loop_derivatives(model, gains, rho, y), y0, dt, nsteps, every,
                config.divergence_limit)
    except (SingularInputError, ZeroDivisionError) as exc:
        raise SimulationFault(f"model fault during closed-loop simulation: {exc}") from exc

    x = states[:, lay.x]
    controls = -gains.kappa * x + states[:, lay.eta.start]
    traj = Trajectory(times, states, controls, x.copy(), lay.names, tuple(config.rho), dt)
    fault = None
    if status == 1:
        fault = f"state magnitude exceeded {config.divergence_limit:g}"
    elif status == 2:
        fault = f"non-finite value in Runge-Kutta stage {stage}"
    return traj, _report(model, lay, traj, config, status != 0, fault)


def _report(model, lay, traj, config, diverged, fault):
    y = np.abs(traj.outputs)
    if diverged and fault and "non-finite" in fault:
        final_out = float("inf")
    else:
        final_out = float(y[-1])
    settle = None
    if len(traj) > 1 and not diverged:
        above = np.nonzero(y >= config.output_tol)[0]
        if above.size == 0:
            settle = float(traj.times[0])
        elif above[-1] + 1 < len(traj):
            settle = float(traj.times[above[-1] + 1])
    theta = model.theta_true_many(np.array([config.rho]))[0]
    err = traj.states[-1, lay.theta_hat] - theta
    final_param = float(np.linalg.norm(err)) if np.all(np.isfinite(err)) else float("inf")
    sup = {name: float(np.max(np.abs(traj.states[:, i]))) for i, name in enumerate(traj.names)}
    sup["u"] = float(np.max(np.abs(traj.controls)))
    return ConvergenceReport(
        final_output_error=final_out,
        output_settle_time=settle,
        final_param_error=final_param,
        sup_norms=sup,
        diverged=bool(diverged),
        stop_time=float(traj.times[-1]),
        output_tol=config.output_tol,
        param_tol=config.param_tol,
        fault=fault,
    )


def _set_gain(name):
    def apply(gains, config, value):
        return gains.replace(check=gains.validated, **{name: float(value)}), config
    return apply


def _set_rho(gains, config, value):
    return gains, replace(config, rho=(float(value),))


def _set_x0(gains, config, value):
    return gains, replace(config, x0=float(value))


def _set_theta0(gains, config, value):
    reg = config.regulator0 or RegulatorState.zeros(gains.d, gains.q)
    reg = RegulatorState(reg.eta, np.full(gains.q, float(value)), reg.xi_hat, reg.sigma_hat)
    return gains, replace(config, regulator0=reg)


SWEEP_PARAMETERS = {
    "rho": _set_rho,
    "ell": _set_gain("ell"),
    "kappa": _set_gain("kappa"),
    "lambda": _set_gain("lam"),
    "x0": _set_x0,
    "theta_hat0": _set_theta0,
}


@dataclass
class SweepRow:
    point: dict
    report: ConvergenceReport = None
    error: str = None


def sweep(model, gains, config, grid):
    """Run one simulation per point of the Cartesian grid.

    ``grid`` maps parameter names (see ``SWEEP_PARAMETERS``) to value lists.
    Rows come back in lexicographic grid order.  A point that fails (bad
    gains, model fault) is recorded with its error and the sweep continues.
    """
    grid = dict(grid)
    unknown = sorted(set(grid) - set(SWEEP_PARAMETERS))
    if unknown:
        raise ConfigurationError(f"unknown sweep parameter(s): {', '.join(unknown)}; "
                                 f"allowed: {', '.join(SWEEP_PARAMETERS)}")
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ConfigurationError("every sweep parameter needs at least one value")
    rows = []
    names = list(grid)
    for values in product(*(grid[k] for k in names)):
        point = dict(zip(names, values))
        try:
            g, c = gains, config
            for k, v in point.items():
                g, c = SWEEP_PARAMETERS[k](g, c, v)
            rows.append(SweepRow(point, run(model, g, c)[1]))
        except (ConfigurationError, SimulationFault) as exc:
            rows.append(SweepRow(point, error=str(exc)))
    return rows
