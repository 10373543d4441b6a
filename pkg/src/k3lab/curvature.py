"""Finite-difference curvature of split Kaehler metrics ``a(z1)|dz1|^2 + b(z2)|dz2|^2``.

The curvature tensor of a Kaehler metric ``g`` is

    R_{i jb k lb} = -d_i d_jb g_{k lb} + g^{p qb} d_i g_{k qb} d_jb g_{p lb}.

For a split metric the mixed components vanish identically in the product
coordinates, and there the finite-difference stencil would return an exact zero
that tests nothing.  The evaluation is therefore done in a generic linear chart
``w = P z`` where every metric entry depends on both variables, and the tensor is
transformed back to ``z`` coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STEP_RANGE = (1e-4, 1e-2)
# a fixed, well-conditioned complex chart with no special alignment
DEFAULT_CHART = np.array([[1.0 + 0.3j, 0.4 - 0.2j], [-0.35 + 0.1j, 0.9 + 0.25j]])

# (i, j, k, l) indices of the components reported by split_metric_curvature
COMPONENTS = {"R_22_11": (1, 1, 0, 0), "R_11_12": (0, 0, 0, 1), "R_12_22": (0, 1, 1, 1)}


class StencilError(ValueError):
    """The metric is not positive at some stencil point."""


@dataclass(frozen=True)
class TrigPoly:
    """``f(x, y) = c0 + sum_j (cc_j cos + cs_j sin)(2 pi (p_j x + q_j y))`` for ``z = x + i y``."""
    c0: float
    freqs: np.ndarray
    cos_coeffs: np.ndarray
    sin_coeffs: np.ndarray

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        x, y = z.real[..., None], z.imag[..., None]
        ph = 2 * np.pi * (self.freqs[:, 0] * x + self.freqs[:, 1] * y)
        return self.c0 + np.cos(ph) @ self.cos_coeffs + np.sin(ph) @ self.sin_coeffs

    @classmethod
    def constant(cls, c: float) -> "TrigPoly":
        return cls(float(c), np.zeros((0, 2)), np.zeros(0), np.zeros(0))

    @classmethod
    def cosine(cls, c0: float, p: int, q: int, amp: float) -> "TrigPoly":
        return cls(float(c0), np.array([[p, q]], dtype=float), np.array([amp]), np.zeros(1))

    @classmethod
    def random_positive(cls, rng: np.random.Generator, terms: int = 3, max_freq: int = 2) -> "TrigPoly":
        """Random trig polynomial bounded below by 0.5."""
        freqs = rng.integers(-max_freq, max_freq + 1, size=(terms, 2)).astype(float)
        cc = rng.uniform(-1, 1, terms)
        cs = rng.uniform(-1, 1, terms)
        c0 = 0.5 + np.sum(np.abs(cc) + np.abs(cs))
        return cls(c0, freqs, cc, cs)


def _metric_in_chart(a: TrigPoly, b: TrigPoly, w, Q):
    """``G~(w) = Q^T G(Q w) conj(Q)``: the metric matrix in the chart ``w``."""
    z = np.einsum("ij,...j->...i", Q, w)
    av, bv = a(z[..., 0]), b(z[..., 1])
    if np.any(av <= 0) or np.any(bv <= 0):
        raise StencilError("split metric is not positive on the stencil")
    G = np.zeros(z.shape[:-1] + (2, 2), dtype=complex)
    G[..., 0, 0] = av
    G[..., 1, 1] = bv
    return np.einsum("ai,...ab,bj->...ij", Q, G, np.conj(Q))


def _curvature_in_chart(a, b, w0, Q, h):
    """Full tensor ``R[i, j, k, l]`` at ``w0`` by central differences in real coordinates."""
    e = np.zeros((4, 2), dtype=complex)
    e[0, 0], e[1, 0], e[2, 1], e[3, 1] = 1, 1j, 1, 1j  # u1, v1, u2, v2

    def G(w):
        return _metric_in_chart(a, b, w, Q)

    G0 = G(w0)
    d1 = np.empty((4, 2, 2), dtype=complex)
    for r in range(4):
        d1[r] = (G(w0 + h * e[r]) - G(w0 - h * e[r])) / (2 * h)
    d2 = np.empty((4, 4, 2, 2), dtype=complex)
    for r in range(4):
        d2[r, r] = (G(w0 + h * e[r]) - 2 * G0 + G(w0 - h * e[r])) / h ** 2
        for s in range(r + 1, 4):
            d2[r, s] = (G(w0 + h * (e[r] + e[s])) - G(w0 + h * (e[r] - e[s]))
                        - G(w0 - h * (e[r] - e[s])) + G(w0 - h * (e[r] + e[s]))) / (4 * h * h)
            d2[s, r] = d2[r, s]
    # holomorphic and antiholomorphic derivatives, index i over w1, w2
    dw = np.stack([0.5 * (d1[0] - 1j * d1[1]), 0.5 * (d1[2] - 1j * d1[3])])
    dwb = np.stack([0.5 * (d1[0] + 1j * d1[1]), 0.5 * (d1[2] + 1j * d1[3])])
    ddb = np.empty((2, 2, 2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            ui, vi, uj, vj = 2 * i, 2 * i + 1, 2 * j, 2 * j + 1
            ddb[i, j] = 0.25 * (d2[ui, uj] + 1j * d2[ui, vj] - 1j * d2[vi, uj] + d2[vi, vj])
    ginv = np.linalg.inv(G0.T)  # ginv[p, q] pairs with g_{k qb}
    quad = np.einsum("pq,ikq,jpl->ijkl", ginv, dw, dwb)
    return -ddb + quad


def curvature_tensor(a: TrigPoly, b: TrigPoly, z, step: float, chart=DEFAULT_CHART) -> np.ndarray:
    """``R[i, j, k, l] = R_{i jb k lb}`` of the split metric at ``z``, in ``z`` coordinates."""
    if not STEP_RANGE[0] <= step <= STEP_RANGE[1]:
        raise ValueError(f"step must lie in {STEP_RANGE}, got {step}")
    P = np.asarray(chart, dtype=complex)
    Q = np.linalg.inv(P)
    w0 = P @ np.asarray(z, dtype=complex)
    Rw = _curvature_in_chart(a, b, w0, Q, step)
    Pc = np.conj(P)
    return np.einsum("ijkl,ia,jb,kc,ld->abcd", Rw, P, Pc, P, Pc)


@dataclass(frozen=True)
class CurvatureResult:
    """Components at ``step`` and ``step/2``, their Richardson extrapolation and the
    observed convergence order ``log2(|R(step)| / |R(step/2)|)`` of the largest one."""
    coarse: dict
    fine: dict
    extrapolated: dict
    order: float

    def max_abs(self, which: str = "fine") -> float:
        return max(abs(v) for v in getattr(self, which).values())


def split_metric_curvature(a: TrigPoly, b: TrigPoly, z, step: float = 1e-3,
                           chart=DEFAULT_CHART) -> CurvatureResult:
    """The mixed components ``R_{2 2b 1 1b}``, ``R_{1 1b 1 2b}``, ``R_{1 2b 2 2b}``."""
    R1 = curvature_tensor(a, b, z, step, chart)
    R2 = curvature_tensor(a, b, z, step / 2, chart)
    coarse = {k: complex(R1[idx]) for k, idx in COMPONENTS.items()}
    fine = {k: complex(R2[idx]) for k, idx in COMPONENTS.items()}
    extra = {k: (4 * fine[k] - coarse[k]) / 3 for k in COMPONENTS}
    big = max(COMPONENTS, key=lambda k: abs(coarse[k]))
    if abs(fine[big]) > 0:
        order = float(np.log2(abs(coarse[big]) / abs(fine[big])))
    else:
        order = float("inf")
    return CurvatureResult(coarse, fine, extra, order)
