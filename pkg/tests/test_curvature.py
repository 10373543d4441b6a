import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from k3lab import curvature
from k3lab.curvature import TrigPoly


def test_trigpoly_values():
    a = TrigPoly.cosine(2.0, 1, 0, 1.0)
    assert np.isclose(a(0.0), 3.0) and np.isclose(a(0.5 + 0.3j), 1.0)


def test_random_positive_lower_bound(rng):
    p = TrigPoly.random_positive(rng)
    z = rng.uniform(0, 1, 500) + 1j * rng.uniform(0, 1, 500)
    assert np.all(p(z) >= 0.5 - 1e-12)


def test_pure_component_matches_closed_form():
    # a = 2 + cos(2 pi x): d a = -pi sin, d dbar a = -pi^2 cos
    a, b = TrigPoly.cosine(2.0, 1, 0, 1.0), TrigPoly.constant(1.0)
    z = np.array([0.13 + 0.4j, 0.7 - 0.2j])
    R = curvature.curvature_tensor(a, b, z, 1e-3)
    x = z[0].real
    c, s = np.cos(2 * np.pi * x), np.sin(2 * np.pi * x)
    expected = np.pi ** 2 * c + np.pi ** 2 * s * s / (2 + c)
    assert abs(R[0, 0, 0, 0] - expected) < 1e-4 * abs(expected)
    assert abs(R[1, 1, 1, 1]) < 1e-5


def test_cosine_example_vanishes():
    a, b = TrigPoly.cosine(2.0, 1, 0, 1.0), TrigPoly.constant(1.0)
    r = curvature.split_metric_curvature(a, b, np.array([0.21 + 0.37j, 0.4 + 0.1j]), 1e-3)
    assert abs(r.extrapolated["R_22_11"]) < 1e-6
    assert r.max_abs("extrapolated") < 1e-6


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_mixed_components_are_second_order(seed):
    rng = np.random.default_rng(seed)
    a = TrigPoly.random_positive(rng)
    b = TrigPoly.random_positive(rng)
    z = rng.uniform(0, 1, 2) + 1j * rng.uniform(0, 1, 2)
    r = curvature.split_metric_curvature(a, b, z, 1e-2)
    # errors fall by four under halving unless already at rounding level
    if r.max_abs("coarse") > 1e-6:
        assert abs(r.order - 2) <= 0.3
    assert r.max_abs("extrapolated") < r.max_abs("coarse")


def test_step_range_enforced():
    a = TrigPoly.constant(1.0)
    with pytest.raises(ValueError):
        curvature.curvature_tensor(a, a, np.zeros(2, dtype=complex), 0.1)


def test_nonpositive_metric_rejected():
    a = TrigPoly.cosine(0.5, 1, 0, 1.0)
    with pytest.raises(curvature.StencilError):
        curvature.curvature_tensor(a, TrigPoly.constant(1.0), np.array([0.5, 0.0], dtype=complex), 1e-3)


def test_chart_independence():
    a = TrigPoly.cosine(2.0, 1, 1, 0.5)
    b = TrigPoly.cosine(3.0, 0, 1, 1.0)
    z = np.array([0.3 + 0.1j, 0.2 + 0.6j])
    R1 = curvature.curvature_tensor(a, b, z, 1e-3)
    R2 = curvature.curvature_tensor(a, b, z, 1e-3, chart=np.array([[1.1, 0.3j], [0.2, 0.8 - 0.1j]]))
    assert np.allclose(R1, R2, atol=1e-4)
