import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from k3lab import torus
from k3lab.hermspace import HermitianForm, dist, wedge_ratio


def test_cat_map_entropy(cat):
    # golden ratio squared is the expanding eigenvalue
    phi2 = (3 + np.sqrt(5)) / 2
    assert np.isclose(cat.h, 2 * np.log(phi2))
    assert np.isclose(cat.lambda_u * cat.lambda_s, 1.0)


@pytest.mark.parametrize("M", [[[1, 0], [0, 1]], [[1, 1], [0, 1]], [[2, 0], [0, 1]], [[0, 1], [-1, 0]], [[1.5, 0], [0, 1]]])
def test_rejects_non_hyperbolic(M):
    with pytest.raises(torus.NotHyperbolicError):
        torus.make_system(M)


def test_det_minus_one_is_accepted():
    s = torus.make_system([[1, 1], [1, 0]])
    assert np.isclose(s.lambda_u * s.lambda_s, -1.0)
    assert np.isclose(s.h, np.log((3 + np.sqrt(5)) / 2))


def test_eigenframe_is_unimodular_and_diagonalises(cat):
    E = cat.E
    assert np.isclose(abs(np.linalg.det(E)), 1.0)
    D = np.linalg.inv(E) @ cat.matrix @ E
    assert np.allclose(D, np.diag([cat.lambda_u, cat.lambda_s]))


def test_inverse(cat):
    assert np.array_equal(cat.matrix @ cat.inverse, np.eye(2, dtype=np.int64))


def test_samples_are_dyadic_and_reproducible():
    a = torus.sample_volume(7, 100)
    b = torus.sample_volume(7, 100)
    assert np.array_equal(a, b)
    assert np.all((a >= 0) & (a < 1))
    assert np.array_equal(a * 2.0 ** torus.DYADIC_BITS, np.round(a * 2.0 ** torus.DYADIC_BITS))


def test_orbit_is_exact_and_invertible(cat):
    x = torus.sample_volume(0, 50)
    y = torus.apply(cat, x, 25)
    assert np.array_equal(torus.apply(cat, y, -25), x)
    orb = torus.orbit(cat, x, 5)
    assert np.array_equal(orb[5], torus.apply(cat, x, 5))


def test_fixed_points_are_two_torsion(cat):
    p = torus.fixed_points()
    assert len(p) == 16
    assert np.array_equal(torus.reduce(-p), p)
    # a linear map permutes two-torsion points
    q = torus.step(cat, p)
    assert {tuple(r) for r in q} == {tuple(r) for r in p}


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-2 ** 42, 2 ** 42), min_size=4, max_size=4))
def test_orbifold_representative(v):
    # dyadic points, as produced by the sampler
    x = np.array(v, dtype=float) / 2.0 ** torus.DYADIC_BITS
    r1 = torus.to_orbifold(x)
    r2 = torus.to_orbifold(-x)
    assert np.array_equal(r1, r2)


def test_complex_roundtrip():
    x = torus.sample_volume(1, 10)
    assert np.array_equal(torus.from_complex(torus.as_complex(x)), x)


def test_flat_metric_equivariance(cat):
    # M^* omega_t = omega_{t+h}
    for t in (0.0, 1.0, -2.0):
        lhs = torus.flat_yau_metric(cat, t).pullback(cat.matrix.astype(float))
        rhs = torus.flat_yau_metric(cat, t + cat.h)
        assert np.allclose([lhs.a, lhs.d], [rhs.a, rhs.d]) and np.isclose(lhs.b, rhs.b)
        assert torus.flat_yau_metric(cat, t).is_unimodular()


def test_eigencurrents(cat):
    ep, em = torus.eigencurrent_forms(cat)
    M = cat.matrix.astype(float)
    p = ep.pullback(M)
    assert np.allclose([p.a, p.d], np.exp(cat.h) * np.array([ep.a, ep.d]))
    assert np.isclose(float(ep.det), 0.0, atol=1e-12)


def test_flat_distance_grows_linearly(cat):
    # distance between omega_0 and omega_{Nh} is N h
    w0 = torus.flat_yau_metric(cat, 0.0)
    for N in (1, 3):
        assert np.isclose(float(dist(w0, torus.flat_yau_metric(cat, N * cat.h))), N * cat.h)


def test_fekete_profile_converges_to_half_entropy(cat):
    prof = torus.fekete_profile(cat, 60)
    assert np.all(np.diff(prof * np.arange(1, 61)) <= np.log(np.linalg.norm(cat.matrix, 2)) + 1e-12)
    assert abs(prof[-1] - cat.h / 2) < 0.02


def test_eigencurrent_pair_has_unit_density(cat):
    ep, em = torus.eigencurrent_forms(cat)
    s = ep + em
    assert np.isclose(wedge_ratio(s, s) / 2, 1.0)
    assert np.isclose(wedge_ratio(ep, em), 1.0)
