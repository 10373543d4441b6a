"""Brody rescaling of polynomial discs and the radial cutoff used in the area estimate."""

import numpy as np

from k3lab import brody
from k3lab.hermspace import HermitianForm

omega = HermitianForm.identity()
square = brody.DiscMap(np.array([[0, 0], [0, 0], [1, 0]]))
r = brody.brody_reparametrize(square, omega)
print(f"z -> (z^2, 0): y = {r.y:.6f} (|y| = {abs(r.y):.6f}), a = {r.a:.6f}, radius {r.radius:.6f}")

for seed in range(3):
    xi = brody.DiscMap.random(np.random.default_rng(seed), 8)
    r = brody.brody_reparametrize(xi, omega)
    print(f"random degree 8, seed {seed}: |Dxi~|(0) = {r.speed_at_zero:.12f}, sup on half disc {r.sup_half:.6f}")

b = brody.cutoff_bound_check()
print(f"sup |i dd^c chi_r| r^2 = {list(b.scaled_sup.values())[0]:.6f} for every r, below C = {b.constant:.6f}")

xi = brody.DiscMap.random(np.random.default_rng(5), 4).recenter(0.0, 1.0, 3.0)
direct, parts = brody.cutoff_area(xi, omega, 1.0)
print(f"cutoff area {direct:.10f} directly, {parts:.10f} by parts")
