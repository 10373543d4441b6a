import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from k3lab import cocycle, torus
from k3lab.cocycle import MetricField
from k3lab.hermspace import HermitianForm


def perturbed(sys_, seed, **kw):
    return cocycle.random_field(sys_, np.random.default_rng(seed), **kw)


def ddbar_fd(field, x, h=1e-4):
    """Complex Hessian d_j dbar_k of the potential by central differences in real coordinates."""
    def phi(y):
        return field.potential(y)
    H = np.zeros((4, 4))
    for r in range(4):
        for s in range(4):
            er, es = np.eye(4)[r] * h, np.eye(4)[s] * h
            H[r, s] = (phi(x + er + es) - phi(x + er - es) - phi(x - er + es) + phi(x - er - es)) / (4 * h * h)
    out = np.zeros((2, 2), dtype=complex)
    for j in range(2):
        for k in range(2):
            uj, vj, uk, vk = 2 * j, 2 * j + 1, 2 * k, 2 * k + 1
            # d_j = (d_u - i d_v)/2, dbar_k = (d_u + i d_v)/2
            out[j, k] = 0.25 * (H[uj, uk] + 1j * H[uj, vk] - 1j * H[vj, uk] + H[vj, vk])
    return out


def test_evaluate_matches_fd_hessian(cat):
    field = perturbed(cat, 3, count=3, max_mode=2)
    x = torus.sample_volume(5, 3)
    for xi in x:
        got = field.evaluate(xi).matrix() - field.base.matrix()
        assert np.allclose(got, ddbar_fd(field, xi), atol=1e-6)


def test_positivity_is_enforced(cat):
    with pytest.raises(cocycle.EvaluationError):
        MetricField(cat, [[1, 0, 0, 0]], [1.0])


def test_modes_merge_with_their_negatives(cat):
    f = MetricField(cat, [[1, 0, 1, 0], [-1, 0, -1, 0]], [0.001, 0.002])
    assert len(f.modes) == 1 and np.isclose(f.coeffs[0], 0.003)


def test_pullback_field_is_the_pullback(cat):
    field = perturbed(cat, 1)
    x = torus.sample_volume(2, 20)
    for N in (1, 2):
        direct = field.pullback(N).evaluate(x)
        MN = np.linalg.matrix_power(cat.matrix, N).astype(float)
        oracle = field.evaluate(torus.apply(cat, x, N)).pullback(MN)
        assert np.allclose(direct.a, oracle.a, rtol=1e-9)
        assert np.allclose(direct.b, oracle.b, rtol=1e-9, atol=1e-9)


def test_flat_expansion_is_half_entropy(cat):
    x = torus.sample_volume(0, 200)
    field = MetricField.flat(cat)
    for N in (1, 5, 20):
        assert np.max(np.abs(cocycle.expansion_factor(field, x, N) - N * cat.h / 2)) < 1e-10


def test_flat_cocycles_are_constant(cat):
    x = torus.sample_volume(0, 100)
    rec = cocycle.rho_and_beta(MetricField.flat(cat), x)
    assert np.allclose(rec.rho_u, cat.h / 2) and np.allclose(rec.rho_s, -cat.h / 2)
    assert np.allclose(rec.beta, 0.0, atol=1e-12)


def test_beta_for_euclidean_base():
    # the unimodular eigenframe of [[2,1],[3,2]] has a0*d0 = 4/3 for the identity form
    sys_ = torus.make_system([[2, 1], [3, 2]])
    field = MetricField.euclidean(sys_)
    E = sys_.E
    a0, d0 = E[:, 0] @ E[:, 0], E[:, 1] @ E[:, 1]
    assert np.isclose(a0 * d0, 4 / 3)
    b = cocycle.beta(field, torus.sample_volume(0, 4))
    assert np.allclose(b, 0.5 * np.log(4 / 3))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_coboundary_identity(seed):
    sys_ = torus.make_system([[2, 1], [1, 1]])
    field = perturbed(sys_, seed)
    x = torus.sample_volume(seed, 200)
    assert np.max(np.abs(cocycle.coboundary_identity_residual(field, x))) < 1e-10


def test_telescoping_matches_birkhoff_sum(cat):
    field = perturbed(cat, 8)
    x = torus.sample_volume(4, 100)
    for N in (1, 4, 9):
        su, _ = cocycle.cocycle_sums(field, x, N)
        assert np.max(np.abs(su - cocycle.telescoped_rho_u(field, x, N))) < 1e-10


def test_birkhoff_sum_of_indicator_like_function(cat):
    x = torus.sample_volume(9, 10)
    s = cocycle.birkhoff_sum(lambda y: y[..., 0], cat, x, 3)
    orb = torus.orbit(cat, x, 2)
    assert np.allclose(s, orb[..., 0].sum(axis=0))


def test_distance_identity_and_bound(cat):
    field = perturbed(cat, 11)
    x = torus.sample_volume(6, 200)
    for N in range(1, 11):
        chk = cocycle.dist_identity_residual(field, x, N)
        assert chk.residual.max() < 1e-9
        assert chk.excess.max() <= 1e-9


def test_rho_u_integrates_to_half_entropy(cat):
    field = perturbed(cat, 2)
    rec = cocycle.rho_and_beta(field, torus.sample_volume(1, 20000))
    se = rec.rho_u.std() / np.sqrt(len(rec.rho_u))
    assert abs(rec.rho_u.mean() - cat.h / 2) < 4 * se + 1e-12
    assert abs(rec.rho_s.mean() + cat.h / 2) < 4 * rec.rho_s.std() / np.sqrt(len(rec.rho_s)) + 1e-12


@pytest.mark.parametrize("N", [1, 2, 3])
def test_jensen_integral(cat, N):
    rng = np.random.default_rng(N)
    f1 = cocycle.random_field(cat, rng, max_mode=3)
    f2 = cocycle.random_field(cat, rng, max_mode=3, level=N * cat.h)
    r = cocycle.jensen_integral_check(f1, f2, 16)
    assert abs(r.target - (np.exp(N * cat.h) + np.exp(-N * cat.h))) < 1e-9 * r.target
    assert abs(r.integral - r.target) < 1e-8


def test_jensen_with_pullback_field(cat):
    f1 = perturbed(cat, 4, max_mode=1)
    r = cocycle.jensen_integral_check(f1, f1.pullback(1), 16)
    assert abs(r.integral - r.target) < 1e-8


def test_jensen_rejects_aliasing(cat):
    f = perturbed(cat, 4, max_mode=3)
    with pytest.raises(cocycle.AliasingError):
        cocycle.jensen_integral_check(f, f, 6)


def test_jensen_gap_vanishes_for_flat(cat):
    r = cocycle.jensen_integral_check(MetricField.flat(cat), MetricField.flat(cat, cat.h), 4)
    assert abs(r.jensen_gap) < 1e-12


def test_cocycles_do_not_depend_on_the_unimodular_frame(cat):
    field = perturbed(cat, 12)
    x = torus.sample_volume(3, 50)
    ref = cocycle.rho_and_beta(field, x)
    c = 1.7 * np.exp(0.4j)
    other = cat.E @ np.diag([c, 1 / c])
    rec = cocycle.rho_and_beta(field, x, frame=other)
    assert np.allclose(rec.rho_u, ref.rho_u) and np.allclose(rec.rho_s, ref.rho_s)
    assert np.allclose(rec.beta, ref.beta)


def test_beta_is_nonnegative_for_unit_volume(cat):
    # a constant unimodular form induces the reference volume everywhere
    sys_ = torus.make_system([[2, 1], [3, 2]])
    rng = np.random.default_rng(0)
    for h in hermspace_random(rng):
        field = MetricField(sys_, base=h)
        assert cocycle.beta(field, torus.sample_volume(0, 3)).min() >= -1e-14


def hermspace_random(rng):
    from k3lab.hermspace import random_unimodular
    return [random_unimodular(rng, 1)[0] for _ in range(20)]
