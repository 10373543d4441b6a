"""Telling coboundaries apart by the growth of their Birkhoff sums, then solving for them."""

import numpy as np

from k3lab import cobsolve, cocycle, torus
from k3lab.cobsolve import TrigObservable

sys_ = torus.make_system([[2, 1], [1, 1]])
psi = TrigObservable(np.array([[1, 0, 1, 0], [0, 1, 0, -1]]), [0.2, -0.1], [0.05, 0.0])
cases = {
    "planted psi o T - psi": cobsolve.planted_coboundary(psi, sys_),
    "constant 0.3": TrigObservable.constant(0.3),
    "cos(2 pi x1)": TrigObservable.cosine([1, 0, 0, 0]),
}
for name, f in cases.items():
    v = cobsolve.is_coboundary(f, sys_)
    print(f"{name:24s} -> {v.verdict:14s} slope {v.slope:.3f} ({v.reason})")

sol = cobsolve.solve_transfer(cases["planted psi o T - psi"], sys_, 32)
g = cocycle.torus_grid(32)
exact = (psi(g) - psi.mean()).reshape(sol.alpha.shape)
print(f"transfer solve: band K={sol.band}, relative error {np.linalg.norm(sol.alpha - exact) / np.linalg.norm(exact):.1e}")

field = cocycle.random_field(sys_, np.random.default_rng(0), count=3, max_mode=1, strength=0.2)
d = cobsolve.recover_delta(field, 16)
print(f"alpha_u + alpha_s = beta + delta with delta = {d.delta:.6f}")

t = cobsolve.exp_moment_check(cases["planted psi o T - psi"], sys_, 0.15, 100, 0, 2000)
print(f"gamma moments stay below {cobsolve.telescoping_bound(psi, 0.15):.4f}: max {t.gamma_moment.max():.4f}")
