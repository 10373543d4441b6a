"""Brody reparametrisation of polynomial disc maps and radial cutoff functions.

A :class:`DiscMap` is ``xi(z) = P(center + z / scale)`` on ``|z| < radius`` with
``P`` a polynomial map C -> C^2.  Reparametrising by an affine change of the input
only updates ``center`` and ``scale``, so derivatives stay exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hermspace import HermitianForm

MAX_DEGREE = 64
SUP_SLACK = 1e-6


class ConstantMapError(ValueError):
    pass


class CertificationError(RuntimeError):
    """The reparametrised map could not be certified on the finer grid."""


@dataclass(frozen=True)
class DiscMap:
    coeffs: np.ndarray  # (deg + 1, 2), row k multiplies w^k
    radius: float = 1.0
    center: complex = 0.0
    scale: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).reshape(-1, 2)
        if len(c) - 1 > MAX_DEGREE:
            raise ValueError(f"degree {len(c) - 1} exceeds {MAX_DEGREE}")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def _inner(self, z):
        return self.center + np.asarray(z, dtype=complex) / self.scale

    def __call__(self, z) -> np.ndarray:
        w = self._inner(z)
        out = np.zeros(np.shape(w) + (2,), dtype=complex)
        for c in self.coeffs[::-1]:
            out = out * w[..., None] + c
        return out

    def derivative(self, z) -> np.ndarray:
        w = self._inner(z)
        k = np.arange(1, len(self.coeffs))[:, None]
        dc = self.coeffs[1:] * k
        out = np.zeros(np.shape(w) + (2,), dtype=complex)
        for c in dc[::-1]:
            out = out * w[..., None] + c
        return out / self.scale

    def speed(self, z, omega: HermitianForm) -> np.ndarray:
        """``|D xi|_omega(z)``."""
        return np.sqrt(omega.evaluate(self.derivative(z)))

    def is_constant(self) -> bool:
        return not np.any(self.coeffs[1:])

    def recenter(self, y: complex, a: float, radius: float) -> "DiscMap":
        """``z -> xi(y + z / a)`` on ``|z| < radius``."""
        return DiscMap(self.coeffs, radius, self.center + y / self.scale, self.scale * a)

    @classmethod
    def random(cls, rng: np.random.Generator, degree: int = 10) -> "DiscMap":
        c = rng.normal(size=(degree + 1, 2)) + 1j * rng.normal(size=(degree + 1, 2))
        return cls(c)


def _disc_points(R: float, n: int) -> np.ndarray:
    g = np.linspace(-R, R, n)
    z = g[:, None] + 1j * g[None, :]
    return z[np.abs(z) < R]


_INVPHI = (np.sqrt(5) - 1) / 2


def _golden_max(g, lo: float, hi: float, tol: float = 1e-14) -> float:
    """Golden-section search for a maximum of the unimodal ``g`` on ``[lo, hi]``."""
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    gc, gd = g(c), g(d)
    while hi - lo > tol:
        if gc >= gd:
            hi, d, gd = d, c, gc
            c = hi - _INVPHI * (hi - lo)
            gc = g(c)
        else:
            lo, c, gc = c, d, gd
            d = lo + _INVPHI * (hi - lo)
            gd = g(d)
    return 0.5 * (lo + hi)


def _golden_refine(fun, z0: complex, width: float, sweeps: int = 30) -> complex:
    """Coordinate-wise golden-section maximisation of ``fun`` around ``z0``."""
    z = complex(z0)
    for _ in range(sweeps):
        prev = z
        for direction in (1.0, 1j):
            t = _golden_max(lambda t: fun(z + t * direction), -width, width)
            if fun(z + t * direction) >= fun(z):
                z = z + t * direction
        if abs(z - prev) < 1e-14:
            break
        width = max(2 * abs(z - prev), 1e-10)
    return z


@dataclass(frozen=True)
class BrodyResult:
    reparam: DiscMap
    y: complex
    a: float
    radius: float
    delta_max: float
    speed_at_zero: float
    sup_half: float


def brody_reparametrize(xi: DiscMap, omega: HermitianForm, grid: int = 256,
                        candidates: int = 8) -> BrodyResult:
    """Rescale ``xi`` at a maximiser ``y`` of ``delta(z) = (R - |z|) |D xi|(z)``.

    Returns ``xi~(z) = xi(y + z / a)`` with ``a = |D xi|(y)``, defined on the disc of
    radius ``a (R - |y|)``; ``radius`` is half of that, where ``|D xi~| <= 2``.
    Both postconditions are re-checked on a grid four times finer than the search.
    """
    if xi.is_constant():
        raise ConstantMapError("constant map has no Brody reparametrisation")
    R = xi.radius

    dc = [tuple(complex(v) for v in row * k) for k, row in enumerate(xi.coeffs) if k][::-1]
    ha, hd, hb = float(omega.a), float(omega.d), complex(omega.b)

    def delta(z):
        # scalar Horner in plain Python; numpy overhead dominates for single points
        if abs(z) >= R:
            return -np.inf
        w = xi.center + z / xi.scale
        p = q = 0j
        for c1, c2 in dc:
            p = p * w + c1
            q = q * w + c2
        p /= xi.scale
        q /= xi.scale
        val = ha * abs(p) ** 2 + hd * abs(q) ** 2 + 2 * (p.conjugate() * hb * q).real
        return (R - abs(z)) * np.sqrt(val)

    z = _disc_points(R, grid)
    vals = (R - np.abs(z)) * xi.speed(z, omega)
    h = 2 * R / (grid - 1)
    # refine separated local candidates that could plausibly beat the best one
    order = np.argsort(-vals)
    order = order[vals[order] >= 0.98 * vals[order[0]]]
    top = []
    for i in order:
        if all(abs(z[i] - z[j]) > 4 * h for j in top):
            top.append(i)
            if len(top) == candidates:
                break
    best_y, best_v = None, -np.inf
    for z0 in z[top]:
        y = _golden_refine(delta, z0, 2 * h)
        v = delta(y)
        # near-ties go to the smallest |y|
        if v > best_v * (1 + 1e-12) or (v >= best_v * (1 - 1e-12) and abs(y) < abs(best_y)):
            best_y, best_v = y, v
    y = best_y
    a = float(xi.speed(y, omega))
    r = R - abs(y)
    full = a * r
    tilde = xi.recenter(y, a, full)
    s0 = float(tilde.speed(0.0, omega))
    fine = _disc_points(full / 2, 4 * grid)
    sup = float(np.max(tilde.speed(fine, omega))) if fine.size else s0
    if abs(s0 - 1) > SUP_SLACK or sup > 2 + SUP_SLACK:
        raise CertificationError(
            f"certification failed: |D xi~|(0) = {s0!r}, sup on half disc = {sup!r} "
            f"(y = {y!r}, search grid {grid})")
    return BrodyResult(tilde, y, a, full / 2, best_v, s0, sup)


# Radial cutoff: eta = 1 on [0, 1], 0 on [2, inf), quintic smootherstep between.

def eta(t):
    t = np.asarray(t, dtype=float)
    s = np.clip(t - 1.0, 0.0, 1.0)
    return 1.0 - s ** 3 * (10 - 15 * s + 6 * s * s)


def eta_prime(t):
    t = np.asarray(t, dtype=float)
    s = np.clip(t - 1.0, 0.0, 1.0)
    return -30 * s * s * (1 - s) ** 2


def eta_second(t):
    t = np.asarray(t, dtype=float)
    s = np.clip(t - 1.0, 0.0, 1.0)
    return -60 * s * (1 - s) * (1 - 2 * s)


# sup|eta''| = 10/sqrt(3) and sup|eta'| = 15/8, and 1/t <= 1 on the support
CUTOFF_CONSTANT = (10 / np.sqrt(3) + 15 / 8) / 4


@dataclass(frozen=True)
class CutoffProfile:
    r: float = 1.0

    def __call__(self, z):
        return eta(np.abs(np.asarray(z)) / self.r)


def cutoff_laplacian(profile: CutoffProfile, z):
    """Density of ``i dd^c chi_r`` against ``i dz ^ dz-bar``: ``eta''/4r^2 + eta'/(4 r |z|)``."""
    r = profile.r
    rho = np.abs(np.asarray(z, dtype=complex))
    t = rho / r
    safe = np.where(rho > 0, rho, 1.0)
    # eta is constant near 0, so the density vanishes there
    return np.where(rho > 0, eta_second(t) / (4 * r * r) + eta_prime(t) / (4 * r * safe), 0.0)


def cutoff_laplacian_fd(profile: CutoffProfile, z, step: float = 1e-3):
    """Quarter of the 5-point Laplacian of ``chi_r``."""
    z = np.asarray(z, dtype=complex)
    c = profile
    lap = (c(z + step) + c(z - step) + c(z + 1j * step) + c(z - 1j * step) - 4 * c(z)) / step ** 2
    return lap / 4


@dataclass(frozen=True)
class CutoffBound:
    scaled_sup: dict
    constant: float
    spread: float


def cutoff_bound_check(radii=(1.0, 10.0, 100.0), samples: int = 20001) -> CutoffBound:
    """``sup |i dd^c chi_r| * r^2`` for each ``r``; it should not depend on ``r``."""
    out = {}
    for r in radii:
        p = CutoffProfile(r)
        z = np.linspace(r, 2 * r, samples).astype(complex)
        out[float(r)] = float(np.max(np.abs(cutoff_laplacian(p, z))) * r * r)
    vals = np.array(list(out.values()))
    spread = float((vals.max() - vals.min()) / vals.max())
    return CutoffBound(out, CUTOFF_CONSTANT, spread)


def _polar_rule(r0: float, r1: float, n_rad: int, n_ang: int):
    t, w = np.polynomial.legendre.leggauss(n_rad)
    rho = 0.5 * (r1 - r0) * t + 0.5 * (r1 + r0)
    wr = 0.5 * (r1 - r0) * w * rho
    th = 2 * np.pi * np.arange(n_ang) / n_ang
    z = rho[:, None] * np.exp(1j * th[None, :])
    W = wr[:, None] * (2 * np.pi / n_ang) * np.ones_like(th)[None, :]
    return z.ravel(), W.ravel()


def _rule_size(xi: DiscMap, grid: int):
    return max(grid, xi.degree + 8), max(2 * grid, 4 * xi.degree + 8)


def disc_area(xi: DiscMap, omega: HermitianForm, r: float, grid: int = 32) -> float:
    """``int_{|z|<r} |xi'(z)|_omega^2 dx dy``; ``pi r^2`` for ``z -> (z, 0)`` and the identity form."""
    if r > xi.radius:
        raise ValueError("r exceeds the domain radius")
    n_rad, n_ang = _rule_size(xi, grid)
    z, w = _polar_rule(0.0, r, n_rad, n_ang)
    return float(np.sum(w * omega.evaluate(xi.derivative(z))))


def cutoff_area(xi: DiscMap, omega: HermitianForm, r: float, grid: int = 32) -> tuple[float, float]:
    """``int chi_r |xi'|^2`` computed directly and by moving the Laplacian onto ``chi_r``.

    The second value is ``int (phi o xi) * (1/4) Delta chi_r`` with the potential
    ``phi(w) = w^H H w``, whose Laplacian along a holomorphic curve is ``4 |xi'|^2``.
    """
    if 2 * r > xi.radius:
        raise ValueError("2r exceeds the domain radius")
    n_rad, n_ang = _rule_size(xi, grid)
    prof = CutoffProfile(r)
    direct = parts = 0.0
    for r0, r1 in ((0.0, r), (r, 2 * r)):
        z, w = _polar_rule(r0, r1, n_rad, n_ang)
        direct += np.sum(w * prof(z) * omega.evaluate(xi.derivative(z)))
        parts += np.sum(w * omega.evaluate(xi(z)) * cutoff_laplacian(prof, z))
    return float(direct), float(parts)
