"""Default recipes that turn a model plus a few headline gains into full regulator gains."""
import numpy as np

from .analysis import AttractorSamples, estimate_bounds, sample_attractor
from .nonlinearities import DeadZoneParams, SampleBox, min_deadzone_slope, saturation_levels
from .prime import default_observer_gains
from .regulator import RegulatorGains

__all__ = ["design_gains"]


def design_gains(model, *, ell, kappa, lam=1.0, G=None, g_last=None, sat_levels=None, dz=None,
                 level_box=0.5, margin=1.0, dz_factor=1.5, safety=1.1, resolution=21,
                 attractor=None, check=True):
    """Fill in every gain left as ``None`` and validate the result.

    Parameters
    ----------
    ell, kappa, lam : float
        Observer speed, residual feedback gain and observer damping.
    G, g_last : optional
        Observer gains; default to binomial coefficients (all poles at -1).
    sat_levels : optional
        Defaults to grid sampling of a ``[-level_box, level_box]^d`` box of
        internal-model errors around attractor samples, plus ``margin``.
    dz : optional
        Sequence of ``DeadZoneParams``.  The default threshold is the
        largest ``|theta(rho)|`` over the parameter box, the width is the
        model's ``eps0`` and the slope is ``dz_factor`` times its lower
        bound computed from attractor-sampled bound constants.
    attractor : AttractorSamples, optional
        Reused when given; otherwise the zero dynamics are sampled.

    Returns
    -------
    gains : RegulatorGains
    audit : dict
        Every resolved value together with the inputs that produced it.
    """
    audit = {"recipe": {"level_box": level_box, "margin": margin, "dz_factor": dz_factor,
                        "safety": safety, "resolution": resolution}}
    if G is None or g_last is None:
        G0, g0 = default_observer_gains(model.d)
        G = G0 if G is None else G
        g_last = g0 if g_last is None else g_last
        audit["observer_gains"] = "binomial"

    need_samples = sat_levels is None or dz is None
    if need_samples and attractor is None:
        attractor = sample_attractor(model)
    if isinstance(attractor, AttractorSamples):
        audit["attractor_samples"] = len(attractor)

    bounds = None
    if dz is None:
        bounds = estimate_bounds(model, model.sets, resolution, tau_samples=attractor, safety=safety)
        a0 = model.dead_zone_thresholds(resolution)
        lower = min_deadzone_slope(bounds, model.eps0)
        slopes = np.maximum(dz_factor * lower, 1.0)
        dz = tuple(DeadZoneParams(float(c), float(a), float(e)) for c, a, e in zip(slopes, a0, model.eps0))
        audit["bounds"] = {"a1": bounds.a1, "a2": list(bounds.a2), "a3": bounds.a3}
        audit["slope_lower_bound"] = [float(v) for v in lower]

    if sat_levels is None:
        box = SampleBox.symmetric(np.full(model.d, level_box), model.sets.theta_cube)
        rhos = np.unique(attractor.rho, axis=0) if isinstance(attractor, AttractorSamples) else model.sets.P_box
        tau = attractor.tau if isinstance(attractor, AttractorSamples) else attractor
        sat_levels = saturation_levels(box, model, lam, margin, tau_samples=tau,
                                       theta_true=model.theta_true_many(rhos), resolution=resolution)

    gains = RegulatorGains(lam=lam, ell=ell, kappa=kappa, G=G, g_last=g_last, sat_levels=sat_levels,
                           dz_params=dz, bounds=bounds, check=check)
    audit["gains"] = gains.to_dict()
    return gains, audit
