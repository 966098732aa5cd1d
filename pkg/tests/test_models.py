import warnings

import numpy as np
import pytest

from esoreg.errors import ConfigurationError, SingularInputError
from esoreg.models import (CompactSets, available_models, box_grid, coordinate_reduction, coordinate_restore,
                           example_immersion, example_original_rhs, example_plant, get_model, register_model,
                           vdp_exosystem)
from esoreg.prime import prime_triplet

R = np.array


def test_exosystem_examples():
    np.testing.assert_allclose(vdp_exosystem(0.2)(R([1.0, 0.0])), [0.0, -1.0])
    np.testing.assert_allclose(vdp_exosystem(0.0)(R([0.0, 1.0])), [1.0, 1.0])
    for rho in (-0.2, 0.1, 0.2):
        np.testing.assert_array_equal(vdp_exosystem(rho)(R([0.0, 0.0])), [0.0, 0.0])


def test_exosystem_singular_point():
    with pytest.raises(SingularInputError):
        vdp_exosystem(0.2)(R([-5.0, 1.0]))


def test_exosystem_warns_outside_range():
    with pytest.warns(UserWarning):
        vdp_exosystem(0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        vdp_exosystem(0.2)


def test_plant_examples():
    p = example_plant()
    rho, w, z = R([0.2]), R([1.0, 1.0]), R([0.0, 0.0])
    zdot = p.f0(rho, w, z) + p.f1(rho, w, z, 0.0) * 0.0
    np.testing.assert_allclose(zdot, [0.0, 0.0])
    assert p.q_fn(rho, w, z, 0.0) + p.b_fn(rho, w, z, 0.0) * 0.0 == -1.0
    zero = R([0.0, 0.0])
    np.testing.assert_array_equal(p.f0(R([0.2]), zero, zero), zero)
    assert p.q_fn(R([0.2]), zero, zero, 0.0) == 0.0
    assert p.b0 == 1.0


def test_steady_input_formula(rng):
    p = example_plant()
    for _ in range(20):
        w, z = rng.normal(size=2), rng.normal(size=2)
        u_ss = -p.q_fn(R([0.1]), w, z, 0.0) / p.b_fn(R([0.1]), w, z, 0.0)
        assert u_ss == pytest.approx(w[0] + z[1] - z[0] * z[1])


def test_coordinate_reduction():
    np.testing.assert_array_equal(coordinate_reduction([1, 2, 3]), [1, 2, 5])
    np.testing.assert_array_equal(coordinate_reduction([0, 0, 0]), [0, 0, 0])


def test_coordinate_roundtrip(rng):
    for zeta in rng.normal(size=(100, 3)) * 10:
        np.testing.assert_allclose(coordinate_restore(coordinate_reduction(zeta)), zeta, rtol=0, atol=1e-12)


def test_reduced_plant_matches_original(rng):
    # chain rule through the change of coordinates, checked at random points
    p = example_plant()
    for _ in range(50):
        rho = R([rng.uniform(-0.2, 0.2)])
        w, zeta, u = rng.normal(size=2), rng.normal(size=3), rng.normal()
        dzeta = example_original_rhs(rho[0], w, zeta, u)
        z1, z2, x = coordinate_reduction(zeta)
        z = R([z1, z2])
        zdot = p.f0(rho, w, z) + p.f1(rho, w, z, x) * x
        xdot = p.q_fn(rho, w, z, x) + p.b_fn(rho, w, z, x) * u
        np.testing.assert_allclose([*zdot, xdot], [dzeta[0], dzeta[1], dzeta[1] + dzeta[2]], atol=1e-12)


def test_immersion_examples():
    im = example_immersion()
    assert (im.d, im.q) == (2, 1)
    assert im.phi(R([0.2]), R([1.0, 1.0])) == pytest.approx(-1.0)
    assert im.beta(R([1.0, 1.0]))[0] == 0.0
    assert im.phi(R([0.0]), R([0.5, 1.0])) == pytest.approx(0.25)
    assert im.beta(R([0.5, 1.0]))[0] == pytest.approx(0.375)
    assert im.dphi_dtheta(R([0.0]), R([0.5, 1.0]))[0] == pytest.approx(-0.375)
    np.testing.assert_array_equal(im.theta_true(R([0.13])), [0.13])


def test_dphi_matches_finite_difference(rng):
    im = example_immersion()
    h = 1e-6
    for _ in range(200):
        th, tau = rng.uniform(-0.3, 0.3), rng.uniform(-3.6, 3.6, 2)
        fd = (im.phi(R([th + h]), tau) - im.phi(R([th - h]), tau)) / (2 * h)
        assert fd == pytest.approx(im.dphi_dtheta(R([th]), tau)[0], abs=1e-6)


def test_phi_denominator_bounded_away_from_zero():
    im = example_immersion()
    th = np.linspace(-10, 10, 401)
    tau = np.linspace(-10, 10, 401)
    vals = [im.phi(R([t]), R([a, 1.0])) for t in th for a in tau]
    assert np.all(np.isfinite(vals))


def test_product_sign_on_grid(model):
    grid = box_grid(((-3, 3), (-3, 3)), 41)
    th = np.linspace(-0.25, 0.25, 21)[:, None]
    B = model.beta_many(grid)
    for t in th:
        D = model.dphi_many(np.repeat(t[None], len(grid), 0), grid)
        assert np.all(B[:, 0] * D[:, 0] <= 0)


def test_immersion_identity_on_limit_cycle(model, attractor):
    pt = prime_triplet(2)
    samples = attractor.take(slice(0, 1000)) if len(attractor) >= 1000 else attractor
    for rho, w, z, tau in zip(samples.rho, samples.w, samples.z, samples.tau):
        wdot = model.s_fn(rho, w)
        resid = wdot - (pt.A @ tau + pt.B[:, 0] * model.phi(model.theta_true(rho), tau))
        assert np.abs(resid).max() <= 1e-8
        # output identity: the first immersion coordinate is the steady input on the attractor
        assert tau[0] == pytest.approx(-model.q_fn(rho, w, z, 0.0), abs=1e-8)


def test_compact_sets_validation():
    with pytest.raises(ConfigurationError):
        CompactSets(((1, 0),), ((-1, 1),), ((-1, 1),), (-1, 1), (0.25,))
    with pytest.raises(ConfigurationError):
        CompactSets(((0, 1),), ((-1, 1),), ((-1, 1),), (-1, 1), (0.0,))


def test_box_grid_inclusive():
    g = box_grid(((-1, 1), (0, 0)), 3)
    np.testing.assert_array_equal(g, [[-1, 0], [0, 0], [1, 0]])
    with pytest.raises(ConfigurationError):
        box_grid(((0, 1),), 0)


def test_catalog():
    assert "example" in available_models()
    assert get_model("example") is get_model("example")
    with pytest.raises(ConfigurationError, match="unknown model"):
        get_model("nope")
    register_model("example_copy", lambda: get_model("example"))
    assert get_model("example_copy").name == "example"
