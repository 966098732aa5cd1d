"""numba kernels for the closed loop and the autonomous exogenous dynamics.

One set of kernels is compiled per model object (the model's jitted
callables are frozen into the closure); gains travel as a packed float
array so changing gains never triggers recompilation.

Status codes returned by the integrators: 0 completed, 1 a state exceeded
the divergence limit, 2 a Runge-Kutta stage went non-finite (the stage
index is returned alongside).
"""
from functools import lru_cache

import numpy as np
from numba import njit

from .nonlinearities import dz_kernel, sat_kernel


def pack_gains(gains):
    d, q = gains.d, gains.q
    return np.concatenate([
        [gains.lam, gains.ell, gains.kappa],
        gains.G,
        [gains.g_last],
        gains.sat_levels,
        [p.c for p in gains.dz_params],
        [p.a0 for p in gains.dz_params],
        [p.eps0 for p in gains.dz_params],
    ]).astype(float)


@njit(cache=True)
def _finite(v):
    for i in range(v.size):
        if not np.isfinite(v[i]):
            return False
    return True


@njit(cache=True)
def _too_big(v, limit):
    for i in range(v.size):
        if abs(v[i]) > limit:
            return True
    return False


@lru_cache(maxsize=None)
def compile_model(model):
    """Build the jitted kernels for ``model``; cached per model object."""
    s_fn, f0, f1, q_fn, b_fn = model.s_fn, model.f0, model.f1, model.q_fn, model.b_fn
    phi, beta = model.phi, model.beta
    nw, n, d, q = model.nw, model.n, model.d, model.q
    iz = nw
    ix = nw + n
    ieta = ix + 1
    ith = ieta + d
    ixi = ith + q
    isg = ixi + d
    ny = isg + 1
    # offsets into the packed gain vector
    oG = 3
    og = oG + d
    oL = og + 1
    oc = oL + d + 1
    oa = oc + q
    oe = oa + q

    @njit
    def rhs(y, rho, prm):
        lam = prm[0]
        ell = prm[1]
        kappa = prm[2]
        w = y[0:nw]
        z = y[iz:ix]
        x = y[ix]
        eta = y[ieta:ith]
        th = y[ith:ixi]
        xi = y[ixi:isg]
        sig = y[isg]
        out = np.empty(ny)

        v_u = -kappa * x
        u = v_u + eta[0]
        out[0:nw] = s_fn(rho, w)
        out[iz:ix] = f0(rho, w, z) + f1(rho, w, z, x) * x
        out[ix] = q_fn(rho, w, z, x) + b_fn(rho, w, z, x) * u

        s_last = sat_kernel(sig, prm[oL + d])
        innov = v_u + xi[0]
        gain = ell
        for i in range(d):
            if i < d - 1:
                m = lam * xi[i] + xi[i + 1]
                eta_next = eta[i + 1]
                xi_next = xi[i + 1]
                extra = 0.0
            else:
                m = lam * xi[i]
                eta_next = phi(th, eta)
                xi_next = sig
                extra = s_last
            s_i = sat_kernel(m, prm[oL + i])
            out[ieta + i] = eta_next - s_i - extra
            out[ixi + i] = xi_next - s_i - extra - gain * prm[oG + i] * innov
            gain = gain * ell
        bt = beta(eta)
        for j in range(q):
            out[ith + j] = bt[j] * s_last - dz_kernel(th[j], prm[oc + j], prm[oa + j], prm[oe + j])
        out[isg] = -gain * prm[og] * innov
        return out

    @njit
    def closed_loop(y0, rho, prm, dt, nsteps, every, limit):
        nrec = nsteps // every + 1
        if nsteps % every != 0:
            nrec += 1
        rec = np.empty((nrec, ny))
        times = np.empty(nrec)
        y = y0.copy()
        rec[0] = y
        times[0] = 0.0
        k = 1
        status = 0
        stage = 0
        h = 0.5 * dt
        steps_done = nsteps
        for i in range(nsteps):
            k1 = rhs(y, rho, prm)
            if not _finite(k1):
                status, stage = 2, 1
            else:
                k2 = rhs(y + h * k1, rho, prm)
                if not _finite(k2):
                    status, stage = 2, 2
                else:
                    k3 = rhs(y + h * k2, rho, prm)
                    if not _finite(k3):
                        status, stage = 2, 3
                    else:
                        k4 = rhs(y + dt * k3, rho, prm)
                        if not _finite(k4):
                            status, stage = 2, 4
                        else:
                            y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                            if not _finite(y):
                                status, stage = 2, 0
                            elif _too_big(y, limit):
                                status = 1
            if status == 2:
                steps_done = i
                break
            if status == 1 or (i + 1) % every == 0 or i + 1 == nsteps:
                rec[k] = y
                times[k] = (i + 1) * dt
                k += 1
            if status == 1:
                steps_done = i + 1
                break
        return rec[:k], times[:k], status, stage, steps_done

    @njit
    def _auto_rhs(y, rho, with_z):
        out = np.empty(y.size)
        w = y[0:nw]
        out[0:nw] = s_fn(rho, w)
        if with_z:
            out[nw:nw + n] = f0(rho, w, y[nw:nw + n])
        return out

    @njit
    def autonomous(y0, rho, dt, nsteps, every, with_z):
        # exosystem alone (with_z False) or the zero dynamics w' = s, z' = f0
        m = y0.size
        nrec = nsteps // every + 1
        if nsteps % every != 0:
            nrec += 1
        rec = np.empty((nrec, m))
        times = np.empty(nrec)
        y = y0.copy()
        rec[0] = y
        times[0] = 0.0
        k = 1
        h = 0.5 * dt
        for i in range(nsteps):
            k1 = _auto_rhs(y, rho, with_z)
            k2 = _auto_rhs(y + h * k1, rho, with_z)
            k3 = _auto_rhs(y + h * k2, rho, with_z)
            k4 = _auto_rhs(y + dt * k3, rho, with_z)
            y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not _finite(y):
                return rec[:k], times[:k], 2
            if (i + 1) % every == 0 or i + 1 == nsteps:
                rec[k] = y
                times[k] = (i + 1) * dt
                k += 1
        return rec[:k], times[:k], 0

    return Kernels(rhs, closed_loop, autonomous)


class Kernels:
    def __init__(self, rhs, closed_loop, autonomous):
        self.rhs = rhs
        self.closed_loop = closed_loop
        self.autonomous = autonomous
