"""Expansion factors and the cocycles rho_u, rho_s, beta for metrics on a Kummer torus.

A :class:`MetricField` is a Kaehler form ``omega_0 + i dd^c phi`` whose potential is
a real trig polynomial ``phi(x) = sum_m c_m cos(2 pi m.x)``.  Its hermitian matrix
at ``x`` is exact: a mode ``m`` with complex wavevector ``k = (m1 + i m2, m3 + i m4)``
contributes ``-pi^2 c_m cos(2 pi m.x) conj(k) k^T``.

Because the dynamics is linear, pulling back a field by ``T^N`` gives another
field of the same kind, with base ``(M^N)^T omega_0 M^N`` and modes ``(A^T)^N m``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .hermspace import HermitianForm, dist, project_to_geodesic, wedge_ratio
from .torus import KummerSystem, flat_yau_metric, reduce, step

POSITIVITY_GRID = 64


class EvaluationError(ValueError):
    """A metric field failed to be positive definite somewhere it was evaluated."""


class AliasingError(ValueError):
    """The quadrature grid cannot resolve the Fourier modes of the integrand."""


def _canonical_modes(modes, coeffs):
    """Merge ``m`` and ``-m`` (cos is even) and drop the constant mode."""
    merged: dict[tuple, float] = {}
    for m, c in zip(modes, coeffs):
        m = tuple(int(v) for v in m)
        if not any(m):
            continue
        nz = next(v for v in m if v != 0)
        if nz < 0:
            m = tuple(-v for v in m)
        merged[m] = merged.get(m, 0.0) + float(c)
    keys = [m for m, c in merged.items() if c != 0.0]
    M = np.array(keys, dtype=np.int64).reshape(-1, 4)
    C = np.array([merged[m] for m in keys], dtype=float)
    return M, C


@dataclass(frozen=True)
class MetricField:
    """The form ``base + i dd^c phi`` on the torus of ``system``.

    ``base`` defaults to the flat metric ``flat_yau_metric(system, level)``.
    Positivity is checked once at construction; pass ``check=False`` only for
    fields known to be positive (pullbacks of positive fields).
    """
    system: KummerSystem
    modes: np.ndarray
    coeffs: np.ndarray
    base: HermitianForm
    level: float = 0.0

    def __init__(self, system: KummerSystem, modes=(), coeffs=(), *,
                 base: HermitianForm | None = None, level: float = 0.0, check: bool = True):
        M, C = _canonical_modes(np.asarray(modes, dtype=np.int64).reshape(-1, 4),
                                np.asarray(coeffs, dtype=float).ravel())
        object.__setattr__(self, "system", system)
        object.__setattr__(self, "modes", M)
        object.__setattr__(self, "coeffs", C)
        object.__setattr__(self, "base", base if base is not None else flat_yau_metric(system, level))
        object.__setattr__(self, "level", float(level))
        if check:
            self._check_positive()

    @classmethod
    def flat(cls, system: KummerSystem, level: float = 0.0) -> "MetricField":
        return cls(system, level=level)

    @classmethod
    def euclidean(cls, system: KummerSystem, modes=(), coeffs=()) -> "MetricField":
        return cls(system, modes, coeffs, base=HermitianForm.identity())

    @property
    def wavevectors(self) -> np.ndarray:
        return self.modes[:, 0::2] + 1j * self.modes[:, 1::2]

    def max_mode(self) -> int:
        return int(np.abs(self.modes).max()) if len(self.modes) else 0

    def potential(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.cos(2 * np.pi * x @ self.modes.T) @ self.coeffs

    def _weights(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return -np.pi ** 2 * np.cos(2 * np.pi * x @ self.modes.T) * self.coeffs

    def evaluate(self, x, frame: np.ndarray | None = None) -> HermitianForm:
        """The form at points ``x`` (shape (..., 4)), in the standard frame or in ``frame``."""
        base = self.base if frame is None else self.base.pullback(frame)
        k = self.wavevectors if frame is None else self.wavevectors @ frame
        w = self._weights(x)
        a = base.a + w @ np.abs(k[:, 0]) ** 2
        d = base.d + w @ np.abs(k[:, 1]) ** 2
        b = base.b + w @ (np.conj(k[:, 0]) * k[:, 1])
        return HermitianForm(a, b, d)

    def pullback(self, N: int) -> "MetricField":
        """The field ``(T^N)^* omega``; exact, with mapped modes."""
        A = np.linalg.matrix_power(self.system.action.T, N)
        MN = np.linalg.matrix_power(self.system.matrix, N)
        return MetricField(self.system, self.modes @ A.T, self.coeffs,
                           base=self.base.pullback(MN.astype(float)),
                           level=self.level + N * self.system.h, check=False)

    def _check_positive(self):
        if not self.base.is_positive():
            raise EvaluationError("base form is not positive definite")
        if not len(self.modes):
            return
        lam_min = np.linalg.eigvalsh(self.base.matrix())[0]
        # operator norm of each rank-one term is pi^2 |c| |k|^2
        bound = np.pi ** 2 * np.sum(np.abs(self.coeffs) * np.sum(np.abs(self.modes) ** 2, axis=1))
        if bound < lam_min:
            return
        g = np.arange(POSITIVITY_GRID) / POSITIVITY_GRID
        pts = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3)
        for v in g:
            x = np.column_stack([np.full(len(pts), v), pts])
            h = self.evaluate(x)
            bad = ~((h.a > 0) & (h.det > 0))
            if bad.any():
                raise EvaluationError(f"field is not positive at x = {x[bad][0].tolist()}")


def _require_positive_at(h: HermitianForm, x):
    bad = ~((h.a > 0) & (h.d > 0) & (h.det > 0))
    if np.any(bad):
        where = np.asarray(x).reshape(-1, 4)[np.ravel(bad)][0]
        raise EvaluationError(f"metric is not positive at x = {where.tolist()}")


def frame_entries(field: MetricField, x) -> HermitianForm:
    """Entries of ``omega(x)`` in the unimodular eigenframe ``(e_u, e_s)``."""
    h = field.evaluate(x, frame=field.system.E)
    _require_positive_at(h, x)
    return h


def pulled_entries(field: MetricField, x, N: int) -> HermitianForm:
    """Eigenframe entries of ``(T^N)^* omega`` at ``x``.

    ``M^N`` is diagonal in the eigenframe, so the entries are those of
    ``omega(T^N x)`` scaled by powers of the eigenvalues.  This avoids forming
    ``M^N`` and the cancellation that comes with it.
    """
    sys = field.system
    F = frame_entries(field, _iterate(sys, x, N))
    lu, ls = sys.lambda_u ** N, sys.lambda_s ** N
    return HermitianForm(lu * lu * F.a, lu * ls * F.b, ls * ls * F.d)


def _iterate(sys: KummerSystem, x, N: int):
    x = reduce(x)
    for _ in range(N):
        x = step(sys, x)
    return x


def _normalized(h: HermitianForm, det=None) -> HermitianForm:
    s = 1.0 / np.sqrt(h.det if det is None else det)
    return h.scale(s)


def expansion_factor(field: MetricField, x, N: int):
    """``lambda(x, N)``: half the distance between ``omega(x)`` and ``(T^N)^* omega(x)``.

    Both forms are rescaled to determinant one first.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    x = reduce(x)
    F0 = frame_entries(field, x)
    if N == 0:
        return np.zeros(F0.shape)
    FN = pulled_entries(field, x, N)
    # det of the pulled form equals det omega(T^N x); computing it from the
    # scaled entries would cancel catastrophically
    detN = frame_entries(field, _iterate(field.system, x, N)).det
    return 0.5 * dist(_normalized(F0), _normalized(FN, detN))


@dataclass(frozen=True)
class CocycleRecord:
    lambda_N: np.ndarray
    rho_u: np.ndarray
    rho_s: np.ndarray
    beta: np.ndarray


def _beta(F: HermitianForm):
    return 0.5 * np.log(F.a * F.d / F.det)


def rho_and_beta(field: MetricField, x, N: int = 1, frame: np.ndarray | None = None) -> CocycleRecord:
    """Cocycle values at ``x`` read in a unimodular frame spanning ``W^u, W^s``.

    ``rho_u = 1/2 log(a_h / a_0)`` and ``rho_s = 1/2 log(d_h / d_0)`` compare the
    det-normalised entries of ``omega(x)`` and ``T^* omega(x)``; the pullback is
    formed directly from ``M``.  ``beta = 1/2 log(a_0 d_0 / det omega(x))``.
    ``lambda_N`` is ``expansion_factor(field, x, N)``.
    """
    sys = field.system
    E = sys.E if frame is None else np.asarray(frame)
    x = reduce(x)
    h0 = field.evaluate(x)
    h1 = field.evaluate(step(sys, x))
    _require_positive_at(h0, x)
    _require_positive_at(h1, x)
    F0 = h0.pullback(E)
    Fh = h1.pullback(sys.matrix.astype(float) @ E)
    n0, nh = np.sqrt(h0.det), np.sqrt(h1.det)
    rho_u = 0.5 * np.log((Fh.a / nh) / (F0.a / n0))
    rho_s = 0.5 * np.log((Fh.d / nh) / (F0.d / n0))
    return CocycleRecord(expansion_factor(field, x, N), rho_u, rho_s, _beta(F0))


def beta(field: MetricField, x) -> np.ndarray:
    return _beta(frame_entries(field, reduce(x)))


def coboundary_identity_residual(field: MetricField, x) -> np.ndarray:
    """``beta(Tx) - beta(x) - rho_u(x) - rho_s(x)``; zero up to rounding."""
    x = reduce(x)
    rec = rho_and_beta(field, x, N=0)
    return beta(field, step(field.system, x)) - rec.beta - rec.rho_u - rec.rho_s


def birkhoff_sum(f: Callable, sys: KummerSystem, x, N: int) -> np.ndarray:
    """``S_N f(x) = sum_{k<N} f(T^k x)``, with ``f`` vectorised over points."""
    if N < 0:
        raise ValueError("N must be >= 0")
    x = reduce(x)
    total = np.zeros(np.shape(x)[:-1])
    for _ in range(N):
        total = total + f(x)
        x = step(sys, x)
    return total


def cocycle_sums(field: MetricField, x, N: int):
    """``(S_N rho_u, S_N rho_s)`` accumulated along the orbit of ``x``."""
    su = sr = 0.0
    y = reduce(x)
    for _ in range(N):
        rec = rho_and_beta(field, y, N=0)
        su = su + rec.rho_u
        sr = sr + rec.rho_s
        y = step(field.system, y)
    return su, sr


@dataclass(frozen=True)
class DistanceCheck:
    """``residual = |dist(theta_0, theta_Nh) - |S_N rho_u - S_N rho_s||`` and
    ``excess = |S_N rho_u - S_N rho_s| - 2 lambda(x, N)`` (non-positive up to rounding)."""
    residual: np.ndarray
    excess: np.ndarray
    geodesic_dist: np.ndarray
    sum_gap: np.ndarray


def dist_identity_residual(field: MetricField, x, N: int) -> DistanceCheck:
    """Compare the projected distance on the eigen-geodesic with the Birkhoff sums."""
    if N < 1:
        raise ValueError("N must be >= 1")
    x = reduce(x)
    F0 = frame_entries(field, x)
    FN = pulled_entries(field, x, N)
    detN = frame_entries(field, _iterate(field.system, x, N)).det
    t0 = project_to_geodesic(_normalized(F0))
    tN = project_to_geodesic(_normalized(FN, detN))
    gd = dist(t0, tN)
    su, sr = cocycle_sums(field, x, N)
    gap = np.abs(su - sr)
    lam = expansion_factor(field, x, N)
    return DistanceCheck(np.abs(gd - gap), gap - 2 * lam, gd, gap)


def telescoped_rho_u(field: MetricField, x, N: int) -> np.ndarray:
    """``1/2 log(a_Nh / a_0)`` from det-normalised entries; equals ``S_N rho_u``."""
    x = reduce(x)
    F0 = frame_entries(field, x)
    FN = pulled_entries(field, x, N)
    detN = frame_entries(field, _iterate(field.system, x, N)).det
    return 0.5 * np.log((FN.a / np.sqrt(detN)) / (F0.a / np.sqrt(F0.det)))


def torus_grid(grid: int) -> np.ndarray:
    g = np.arange(grid) / grid
    return np.stack(np.meshgrid(g, g, g, g, indexing="ij"), -1).reshape(-1, 4)


@dataclass(frozen=True)
class JensenResult:
    integral: float
    target: float
    jensen_gap: float
    grid: int


def jensen_integral_check(field1: MetricField, field2: MetricField, grid: int) -> JensenResult:
    """Grid quadrature of ``omega_1 ^ omega_2`` against its cohomological value.

    ``field2`` represents the class reached after ``N`` steps, e.g. a field at
    level ``N h`` or ``field1.pullback(N)``.  The exact-form terms integrate to zero,
    so the target is ``wedge_ratio`` of the two bases (``e^{Nh} + e^{-Nh}`` for the
    flat family).  The integrand has Fourier modes up to the sum of the two largest
    modes, so ``grid`` must exceed twice the largest one.

    ``jensen_gap`` is ``log(target) - mean log(wedge of det-normalised forms)``,
    i.e. the slack in Jensen's inequality.  It is non-negative when both fields
    carry the reference volume pointwise, and vanishes for the flat family.
    """
    need = 2 * max(field1.max_mode(), field2.max_mode())
    if grid <= need:
        raise AliasingError(f"grid {grid} must exceed {need} to resolve the modes")
    x = torus_grid(grid)
    chunks = np.array_split(np.arange(len(x)), max(1, len(x) // 65536))
    wedge_parts, log_parts = [], []
    for idx in chunks:
        h1 = field1.evaluate(x[idx])
        h2 = field2.evaluate(x[idx])
        _require_positive_at(h1, x[idx])
        _require_positive_at(h2, x[idx])
        wedge_parts.append(wedge_ratio(h1, h2))
        log_parts.append(np.log(wedge_ratio(h1.normalized(), h2.normalized())))
    integral = float(np.mean(np.concatenate(wedge_parts)))
    target = float(wedge_ratio(field1.base, field2.base))
    gap = float(np.log(target) - np.mean(np.concatenate(log_parts)))
    return JensenResult(integral, target, gap, grid)


def random_modes(rng: np.random.Generator, count: int, max_mode: int = 3,
                 amplitude: float = 0.01) -> tuple[np.ndarray, np.ndarray]:
    """Seeded nonzero modes; each term of the form has operator norm at most ``amplitude``."""
    modes = []
    while len(modes) < count:
        m = rng.integers(-max_mode, max_mode + 1, size=4)
        if m.any():
            modes.append(m)
    modes = np.array(modes)
    norm2 = np.sum(modes ** 2, axis=1)
    return modes, rng.uniform(-amplitude, amplitude, count) / (np.pi ** 2 * norm2)


def random_field(system: KummerSystem, rng: np.random.Generator, count: int = 4,
                 max_mode: int = 3, strength: float = 0.5, level: float = 0.0,
                 base: HermitianForm | None = None) -> MetricField:
    """A perturbed field whose perturbation is at most ``strength`` times the
    smallest eigenvalue of the base, so it is positive by the cheap bound."""
    base = base if base is not None else flat_yau_metric(system, level)
    lam_min = np.linalg.eigvalsh(base.matrix())[0]
    modes, coeffs = random_modes(rng, count, max_mode, strength * lam_min / count)
    return MetricField(system, modes, coeffs, base=base, level=level)
