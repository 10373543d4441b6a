import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from k3lab import brody
from k3lab.brody import CutoffProfile, DiscMap
from k3lab.hermspace import HermitianForm

OMEGA = HermitianForm.identity()


def test_derivative_matches_fd(rng):
    xi = DiscMap.random(rng, 6).recenter(0.1 + 0.2j, 1.7, 0.5)
    z = 0.05 - 0.03j
    h = 1e-6
    fd = (xi(z + h) - xi(z - h)) / (2 * h)
    assert np.allclose(xi.derivative(z), fd, atol=1e-6)


def test_recenter_is_affine_substitution(rng):
    xi = DiscMap.random(rng, 4)
    t = xi.recenter(0.3j, 2.5, 1.0)
    z = np.array([0.1, -0.2 + 0.1j])
    assert np.allclose(t(z), xi(0.3j + z / 2.5))


def test_degree_limit():
    with pytest.raises(ValueError):
        DiscMap(np.zeros((brody.MAX_DEGREE + 2, 2)))


def test_constant_map_rejected():
    with pytest.raises(brody.ConstantMapError):
        brody.brody_reparametrize(DiscMap(np.array([[1.0, 2.0]])), OMEGA)


def test_linear_map_centres_at_origin():
    r = brody.brody_reparametrize(DiscMap(np.array([[0, 0], [1, 0]])), OMEGA)
    assert abs(r.y) < 1e-6 and np.isclose(r.a, 1.0) and np.isclose(r.radius, 0.5)


def test_square_map():
    # delta(z) = 2|z|(1 - |z|) peaks on |z| = 1/2 with |xi'| = 1 there
    r = brody.brody_reparametrize(DiscMap(np.array([[0, 0], [0, 0], [1, 0]])), OMEGA)
    assert np.isclose(abs(r.y), 0.5, atol=1e-6)
    assert np.isclose(r.a, 1.0, atol=1e-6)
    assert np.isclose(r.delta_max, 0.5, atol=1e-10)
    assert np.isclose(r.radius, 0.25, atol=1e-6)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 12))
def test_contracts_on_random_maps(seed, degree):
    xi = DiscMap.random(np.random.default_rng(seed), degree)
    r = brody.brody_reparametrize(xi, OMEGA)
    assert abs(r.speed_at_zero - 1) <= brody.SUP_SLACK
    assert r.sup_half <= 2 + brody.SUP_SLACK


def test_brody_with_non_identity_form(rng):
    omega = HermitianForm(2.0, 0.5 + 0.2j, 1.0)
    r = brody.brody_reparametrize(DiscMap.random(rng, 5), omega)
    assert abs(r.speed_at_zero - 1) <= brody.SUP_SLACK


def test_eta_profile():
    t = np.array([0.0, 0.5, 1.0, 2.0, 3.0])
    assert np.allclose(brody.eta(t), [1, 1, 1, 0, 0])
    s = np.linspace(0.5, 2.5, 2001)
    h = 1e-6
    assert np.allclose(brody.eta_prime(s), (brody.eta(s + h) - brody.eta(s - h)) / (2 * h), atol=1e-5)
    assert np.allclose(brody.eta_second(s), (brody.eta_prime(s + h) - brody.eta_prime(s - h)) / (2 * h), atol=1e-4)
    # second derivative is continuous at both ends
    assert brody.eta_second(1.0) == 0 and brody.eta_second(2.0) == 0


def test_eta_derivative_suprema():
    s = np.linspace(1, 2, 200001)
    assert np.isclose(np.abs(brody.eta_second(s)).max(), 10 / np.sqrt(3), rtol=1e-8)
    assert np.isclose(np.abs(brody.eta_prime(s)).max(), 15 / 8, rtol=1e-8)


@pytest.mark.parametrize("r", [1.0, 10.0, 100.0])
def test_cutoff_closed_form_vs_fd(r):
    p = CutoffProfile(r)
    z = 1.5 * r * np.exp(0.7j)
    exact = brody.cutoff_laplacian(p, z)
    fd = brody.cutoff_laplacian_fd(p, z, 1e-3 * r)
    assert abs(fd - exact) / abs(exact) < 1e-5


def test_cutoff_vanishes_off_annulus():
    p = CutoffProfile(2.0)
    assert brody.cutoff_laplacian(p, 0.0) == 0
    assert brody.cutoff_laplacian(p, 1.0) == 0 and brody.cutoff_laplacian(p, 5.0) == 0


def test_cutoff_scaling():
    b = brody.cutoff_bound_check()
    assert b.spread < 1e-9
    assert max(b.scaled_sup.values()) <= b.constant


def test_disc_area_of_line():
    xi = DiscMap(np.array([[0, 0], [1, 0]]), radius=2.0)
    assert np.isclose(brody.disc_area(xi, OMEGA, 1.5), np.pi * 1.5 ** 2)


def test_area_by_parts(rng):
    xi = DiscMap.random(rng, 5).recenter(0.0, 1.0, 3.0)
    omega = HermitianForm(1.5, 0.2 - 0.1j, 0.8)
    direct, parts = brody.cutoff_area(xi, omega, 1.2)
    assert abs(direct - parts) <= 1e-6 * abs(direct)


def test_area_radius_checked():
    xi = DiscMap(np.array([[0, 0], [1, 0]]))
    with pytest.raises(ValueError):
        brody.cutoff_area(xi, OMEGA, 0.8)
