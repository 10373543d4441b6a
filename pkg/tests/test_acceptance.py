"""Acceptance checks, one per criterion, each reporting a single PASS/FAIL line.

Run ``pytest tests/test_acceptance.py`` (the lines appear in the terminal summary)
or ``python tests/test_acceptance.py`` to print them directly.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from k3lab import brody, cobsolve, cocycle, curvature, hermspace, torus, wehler
from k3lab.cocycle import MetricField
from k3lab.hermspace import HermitianForm

REPORT: list[str] = []

CAT = [[2, 1], [1, 1]]


def report(n: int, name: str, passed: bool, detail: str) -> bool:
    REPORT.append(f"[{n:2d}] {'PASS' if passed else 'FAIL'}  {name}: {detail}")
    return passed


def hyperboloid_projection(h: HermitianForm) -> np.ndarray:
    """Oracle: unimodular forms as unit vectors in R^{1,3}; the diagonal geodesic is the
    slice by span(e0, e1), and nearest-point projection is orthogonal projection
    onto that plane followed by renormalisation.  Returns the diagonal entry ``a``."""
    x0, x1 = (h.a + h.d) / 2, (h.a - h.d) / 2
    s = np.sqrt(x0 * x0 - x1 * x1)
    return (x0 + x1) / s


def test_01_h3_geometry():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    n = 10_000
    h1, h2, h3 = (hermspace.random_unimodular(rng, n) for _ in range(3))
    p1 = hermspace.project_to_geodesic(h1)
    proj_err = float(np.max(np.abs(p1.a - hyperboloid_projection(h1)) / p1.a))
    proj_err = max(proj_err, float(np.max(np.abs(p1.a * p1.d - 1))), float(np.max(np.abs(p1.b))))
    d12, d21 = hermspace.dist(h1, h2), hermspace.dist(h2, h1)
    sym = float(np.max(np.abs(d12 - d21)))
    tri = float(np.max(hermspace.dist(h1, h3) - d12 - hermspace.dist(h2, h3)))
    p2 = hermspace.project_to_geodesic(h2)
    contr = float(np.max(hermspace.dist(p1, p2) - d12))
    dt = time.perf_counter() - t0
    ok = proj_err < 1e-12 and sym < 1e-9 and tri < 1e-9 and contr < 1e-9 and dt < 5
    assert report(1, "H3 geometry", ok,
                  f"projection err={proj_err:.2e} (<1e-12), symmetry={sym:.1e}, triangle excess={tri:.2e}, "
                  f"contraction excess={contr:.2e} (<1e-9), {dt:.2f}s (<5s)")


def test_02_kummer_equality():
    t0 = time.perf_counter()
    sys_ = torus.make_system(CAT)
    field = MetricField.flat(sys_)
    x = torus.sample_volume(0, 1000)
    worst = max(float(np.max(np.abs(cocycle.expansion_factor(field, x, N) - N * sys_.h / 2)))
                for N in range(1, 21))
    dt = time.perf_counter() - t0
    assert report(2, "Kummer equality", worst < 1e-10 and dt < 10,
                  f"max|lambda(x,N) - Nh/2| = {worst:.2e} (<1e-10) over 1000 points, N<=20, {dt:.2f}s (<10s)")


def test_03_cohomological_integral():
    t0 = time.perf_counter()
    sys_ = torus.make_system(CAT)
    rng = np.random.default_rng(3)
    f0 = cocycle.random_field(sys_, rng, max_mode=3)
    errs = []
    for N in (1, 2, 3):
        fN = cocycle.random_field(sys_, rng, max_mode=3, level=N * sys_.h)
        r = cocycle.jensen_integral_check(f0, fN, 16)
        exact = np.exp(N * sys_.h) + np.exp(-N * sys_.h)
        errs.append(abs(r.integral - exact))
    dt = time.perf_counter() - t0
    worst = max(errs)
    assert report(3, "cohomological integral", worst < 1e-8 and dt < 60,
                  f"max|integral - (e^Nh + e^-Nh)| = {worst:.2e} (<1e-8) for N=1,2,3 at grid 16^4, {dt:.2f}s (<60s)")


def test_04_coboundary_identity():
    sys_ = torus.make_system(CAT)
    x = torus.sample_volume(4, 10_000)
    worst = 0.0
    for seed in (0, 1, 2):
        field = cocycle.random_field(sys_, np.random.default_rng(seed))
        worst = max(worst, float(np.max(np.abs(cocycle.coboundary_identity_residual(field, x)))))
    assert report(4, "coboundary identity", worst < 1e-10,
                  f"max|T*beta - beta - rho_u - rho_s| = {worst:.2e} (<1e-10), 10^4 points x 3 fields")


def test_05_distance_identity():
    sys_ = torus.make_system(CAT)
    field = cocycle.random_field(sys_, np.random.default_rng(5))
    x = torus.sample_volume(5, 1000)
    res = exc = -np.inf
    for N in range(1, 11):
        chk = cocycle.dist_identity_residual(field, x, N)
        res = max(res, float(chk.residual.max()))
        exc = max(exc, float(chk.excess.max()))
    assert report(5, "distance identity", res < 1e-9 and exc <= 1e-9,
                  f"max|dist(theta_0, theta_Nh) - |S_N rho_u - S_N rho_s|| = {res:.2e} (<1e-9), "
                  f"max(|S_N rho_u - S_N rho_s| - 2 lambda) = {exc:.2e} (<=1e-9), N<=10")


def test_06_coboundary_solver():
    t0 = time.perf_counter()
    sys_ = torus.make_system(CAT)
    psi = cobsolve.TrigObservable(np.array([[1, 0, 1, 0], [0, 1, 0, -1], [1, 1, 0, 0]]),
                                  [0.2, -0.1, 0.05], [0.05, 0.0, 0.1])
    sol = cobsolve.solve_transfer(cobsolve.planted_coboundary(psi, sys_), sys_, 32)
    g = cocycle.torus_grid(32)
    exact = (psi(g) - psi.mean()).reshape(sol.alpha.shape)
    rel = float(np.linalg.norm(sol.alpha - exact) / np.linalg.norm(exact))
    v = cobsolve.is_coboundary(cobsolve.TrigObservable.constant(0.3), sys_)
    dt = time.perf_counter() - t0
    ok = rel <= 1e-3 and v.verdict == "NotCoboundary" and abs(v.slope - 1) <= 0.05 and dt < 120
    assert report(6, "coboundary solver", ok,
                  f"planted psi rel L2 err = {rel:.2e} (<=1e-3); constant observable {v.verdict} "
                  f"with slope {v.slope:.4f} (1 +/- 0.05), {dt:.2f}s (<120s)")


def test_07_exponential_integrability():
    sys_ = torus.make_system(CAT)
    psi = cobsolve.TrigObservable(np.array([[1, 0, 1, 0], [0, 1, 0, -1]]), [0.3, -0.2], [0.1, 0.0])
    f = cobsolve.planted_coboundary(psi, sys_)
    t = cobsolve.exp_moment_check(f, sys_, 0.15, 100, 7, 4000)
    bound = cobsolve.telescoping_bound(psi, 0.15)
    top = float(t.gamma_moment.max())
    L = np.linspace(0, 10, 41)
    tail = cobsolve.tail_bound_check(f, sys_, L, 100, 7, 4000)
    margin = float(np.max(tail.empirical - tail.bound - 3 * tail.stderr))
    ok = t.bounded and top <= bound and tail.passed
    assert report(7, "exponential integrability", ok,
                  f"max_N<=100 int e^(0.15|S_N f|) = {top:.4f} <= telescoping bound {bound:.4f}, "
                  f"bounded={t.bounded}; tail table worst margin {margin:.2e} (<=0) at {len(L)} levels")


def test_08_brody_contracts():
    t0 = time.perf_counter()
    omega = HermitianForm.identity()
    dev0 = sup = 0.0
    for seed in range(100):
        xi = brody.DiscMap.random(np.random.default_rng(seed), 1 + seed % 12)
        r = brody.brody_reparametrize(xi, omega)
        dev0 = max(dev0, abs(r.speed_at_zero - 1))
        sup = max(sup, r.sup_half)
    fd = 0.0
    for r in (1.0, 10.0, 100.0):
        p = brody.CutoffProfile(r)
        z = 1.5 * r * np.exp(0.4j)
        exact = brody.cutoff_laplacian(p, z)
        fd = max(fd, abs(brody.cutoff_laplacian_fd(p, z, 1e-3 * r) - exact) / abs(exact))
    b = brody.cutoff_bound_check()
    dt = time.perf_counter() - t0
    ok = dev0 <= 1e-6 and sup <= 2 + 1e-6 and fd < 1e-5 and b.spread < 1e-9
    assert report(8, "Brody contracts", ok,
                  f"max||Dxi~|(0) - 1| = {dev0:.1e} (<=1e-6), max sup = {sup:.10f} (<=2+1e-6) on 100 maps; "
                  f"cutoff fd rel err = {fd:.1e} (<1e-5); C r^2 spread = {b.spread:.1e} (<1e-9), {dt:.1f}s")


def test_09_curvature():
    rng = np.random.default_rng(9)
    orders, worst_ratio = [], 0.0
    for _ in range(10):
        a = curvature.TrigPoly.random_positive(rng)
        b = curvature.TrigPoly.random_positive(rng)
        z = rng.uniform(0, 1, 2) + 1j * rng.uniform(0, 1, 2)
        r = curvature.split_metric_curvature(a, b, z, 1e-2)
        orders.append(r.order)
        # components at step h are bounded by a constant times h^2
        worst_ratio = max(worst_ratio, r.max_abs("coarse") / 1e-2 ** 2)
    anchor = curvature.split_metric_curvature(curvature.TrigPoly.cosine(2.0, 1, 0, 1.0),
                                              curvature.TrigPoly.constant(1.0),
                                              np.array([0.21 + 0.37j, 0.4 + 0.1j]), 1e-3)
    r2211 = abs(anchor.extrapolated["R_22_11"])
    dev = max(abs(o - 2) for o in orders)
    ok = dev <= 0.3 and r2211 < 1e-6
    assert report(9, "split-metric curvature", ok,
                  f"orders {min(orders):.3f}..{max(orders):.3f} (2 +/- 0.3) on 10 random metrics, "
                  f"max|R|/step^2 = {worst_ratio:.2f}; a=2+cos: |R_22_11| = {r2211:.1e} (<1e-6, step 1e-3)")


def test_10_wehler():
    t0 = time.perf_counter()
    S = wehler.WehlerSurface.default()
    P = S.random_points(np.random.default_rng(10), 1000)
    res = float(S.residual(P).max())
    for a in range(3):
        Q = S.involution(P, a)
        res = max(res, float(S.residual(Q).max()),
                  float(np.abs(S.involution(Q, a) - wehler.normalize(P)).max()))
    ce = wehler.cohomology_entropy(S)
    exact = all(wehler.is_isometric_involution(m) for m in ce.reflections)
    rho_err = abs(ce.spectral_radius - (9 + 4 * np.sqrt(5)))
    seeds = list(range(10))
    ly = wehler.lyapunov_estimate(S, seeds, 100_000)
    est = ly.estimate
    spread = float((est.max() - est.min()) / est.mean())
    vol = wehler.volume_invariance_check(S, seed=10, N=1000)
    dt = time.perf_counter() - t0
    ok = (res < 1e-9 and exact and rho_err < 1e-9 and est.min() > 0 and spread <= 0.05
          and vol.max_log_jacobian < 1e-6 and dt < 120)
    assert report(10, "Wehler", ok,
                  f"residual {res:.1e} (<1e-9); integer isometries {exact}; |rho - (9+4 sqrt 5)| = {rho_err:.1e} "
                  f"(<1e-9); Lyapunov {est.min():.4f}..{est.max():.4f}, spread {spread:.2%} (<=5%) over "
                  f"{len(seeds)} seeds at N=1e5; max|log|J|| = {vol.max_log_jacobian:.1e} (<1e-6); {dt:.1f}s (<120s)")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_"):
            try:
                fn()
            except AssertionError:
                pass
    print("\n".join(REPORT))
