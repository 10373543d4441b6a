"""Linear automorphisms of the complex torus C^2 / (Z + iZ)^2 and their Kummer quotients.

Points are float arrays of shape (..., 4) holding the real coordinates
``(Re z1, Im z1, Re z2, Im z2)`` reduced to [0, 1).  An integer matrix ``M``
acts complex-linearly, so on real coordinates it acts by ``kron(M, I2)``.

Volume samples live on the dyadic lattice ``2**-40 Z^4``.  Products with small
integer matrices are then exact in double precision, so orbits of sampled
points carry no rounding error at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hermspace import GeodesicSplitting, HermitianForm, UnimodularFrame

DYADIC_BITS = 40


class NotHyperbolicError(ValueError):
    """Raised for matrices that are not unimodular hyperbolic integer matrices."""


@dataclass(frozen=True)
class KummerSystem:
    """A hyperbolic matrix in GL(2, Z) with its entropy and eigen-splitting.

    ``lambda_u``/``lambda_s`` are the (signed, real) expanding and contracting
    eigenvalues, ``frame`` holds the matching eigenvectors scaled to a
    unimodular frame of equal Euclidean lengths.
    """
    matrix: np.ndarray
    h: float
    lambda_max: float
    lambda_u: float
    lambda_s: float
    frame: UnimodularFrame
    eigencurrent_scale: tuple = (1.0, 1.0)
    action: np.ndarray = field(repr=False, default=None)

    @property
    def splitting(self) -> GeodesicSplitting:
        return GeodesicSplitting(self.frame)

    @property
    def E(self) -> np.ndarray:
        return self.frame.matrix().real

    @property
    def inverse(self) -> np.ndarray:
        p, q, r, s = self.matrix.ravel()
        det = p * s - q * r
        return det * np.array([[s, -q], [-r, p]], dtype=np.int64)


def make_system(M) -> KummerSystem:
    """Validate ``M`` and derive entropy ``h = 2 log lambda_max`` and the eigenframe."""
    M = np.asarray(M)
    if M.shape != (2, 2) or not np.all(np.equal(np.round(M), M)):
        raise NotHyperbolicError(f"expected a 2x2 integer matrix, got {M!r}")
    M = np.round(M).astype(np.int64)
    p, q, r, s = (int(v) for v in M.ravel())
    det = p * s - q * r
    tr = p + s
    if abs(det) != 1:
        raise NotHyperbolicError(f"|det M| must be 1, got det = {det}")
    disc = tr * tr - 4 * det
    if disc <= 0 or (det == 1 and abs(tr) <= 2) or (det == -1 and tr == 0):
        raise NotHyperbolicError(
            f"M = {M.tolist()} is not hyperbolic (trace {tr}, det {det})")
    root = np.sqrt(float(disc))
    lam_u = 0.5 * (tr + root) if tr >= 0 else 0.5 * (tr - root)
    lam_s = det / lam_u
    vecs = []
    for lam in (lam_u, lam_s):
        c1 = np.array([q, lam - p], dtype=float)
        c2 = np.array([lam - s, r], dtype=float)
        v = c1 if np.linalg.norm(c1) >= np.linalg.norm(c2) else c2
        vecs.append(v / np.linalg.norm(v))
    eu, es = vecs
    d = eu[0] * es[1] - eu[1] * es[0]
    if d < 0:
        es = -es
        d = -d
    k = 1.0 / np.sqrt(d)
    frame = UnimodularFrame(k * eu, k * es)
    return KummerSystem(
        matrix=M, h=2.0 * np.log(abs(lam_u)), lambda_max=abs(lam_u),
        lambda_u=lam_u, lambda_s=lam_s, frame=frame,
        action=np.kron(M, np.eye(2, dtype=np.int64)),
    )


def reduce(x) -> np.ndarray:
    """Canonical representative with every real coordinate in [0, 1)."""
    x = np.asarray(x, dtype=float)
    y = x - np.floor(x)
    return np.where(y >= 1.0, 0.0, y)


def step(sys: KummerSystem, x, inverse: bool = False) -> np.ndarray:
    A = np.kron(sys.inverse, np.eye(2)) if inverse else sys.action
    return reduce(np.asarray(x, dtype=float) @ A.T)


def apply(sys: KummerSystem, x, n: int) -> np.ndarray:
    """``M^n x`` reduced mod the lattice; negative ``n`` iterates the inverse."""
    x = reduce(x)
    A = np.kron(sys.inverse, np.eye(2)) if n < 0 else sys.action.astype(float)
    for _ in range(abs(n)):
        x = reduce(x @ A.T)
    return x


def orbit(sys: KummerSystem, x, n: int) -> np.ndarray:
    """Array of shape (n + 1, ...) with ``x, Tx, ..., T^n x``."""
    x = reduce(x)
    out = np.empty((n + 1,) + x.shape)
    out[0] = x
    A = sys.action.astype(float)
    for k in range(n):
        out[k + 1] = reduce(out[k] @ A.T)
    return out


def as_complex(x) -> np.ndarray:
    """(..., 4) real coordinates to (..., 2) complex ``(z1, z2)``."""
    x = np.asarray(x, dtype=float)
    return x[..., 0::2] + 1j * x[..., 1::2]


def from_complex(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    x = np.empty(z.shape[:-1] + (4,))
    x[..., 0::2] = z.real
    x[..., 1::2] = z.imag
    return reduce(x)


def eigencurrent_forms(sys: KummerSystem):
    """Constant forms ``eta_+ = c+ |dw_u|^2`` and ``eta_- = c- |dw_s|^2``.

    ``w_u, w_s`` are the coordinates dual to the eigenframe, so ``M^* eta_+ =
    e^h eta_+`` and ``M^* eta_- = e^-h eta_-``; with ``c+ c- = 1`` the pairing
    ``eta_+ ^ eta_-`` has unit density.
    """
    Einv = np.linalg.inv(sys.E)
    cp, cm = sys.eigencurrent_scale
    ru, rs = Einv[0], Einv[1]
    return (HermitianForm.from_matrix(cp * np.outer(ru, ru)),
            HermitianForm.from_matrix(cm * np.outer(rs, rs)))


def flat_yau_metric(sys: KummerSystem, t: float = 0.0) -> HermitianForm:
    """The flat metric ``e^t eta_+ + e^-t eta_-`` in the standard frame.

    It is unimodular, and ``M^* omega_t == omega_{t+h}``.
    """
    ep, em = eigencurrent_forms(sys)
    return ep.scale(np.exp(t)) + em.scale(np.exp(-t))


def to_orbifold(x) -> np.ndarray:
    """Representative of ``{x, -x}`` that is lexicographically smaller."""
    x = reduce(x)
    y = reduce(-x)
    take_y = np.zeros(x.shape[:-1], dtype=bool)
    decided = np.zeros(x.shape[:-1], dtype=bool)
    for i in range(4):
        lt = (y[..., i] < x[..., i]) & ~decided
        gt = (y[..., i] > x[..., i]) & ~decided
        take_y |= lt
        decided |= lt | gt
    return np.where(take_y[..., None], y, x)


def fixed_points() -> np.ndarray:
    """The 16 two-torsion points, fixed by ``z -> -z``."""
    grid = np.array(np.meshgrid(*[[0.0, 0.5]] * 4, indexing="ij"))
    return grid.reshape(4, -1).T


def sample_volume(seed: int, count: int) -> np.ndarray:
    """Uniform samples of the normalised volume on the dyadic lattice ``2**-40 Z^4``.

    Uses numpy's PCG64 generator, so a seed fixes the sequence bit for bit.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    k = rng.integers(0, 2 ** DYADIC_BITS, size=(count, 4), dtype=np.int64)
    return k.astype(float) / 2.0 ** DYADIC_BITS


def fekete_profile(sys: KummerSystem, n_max: int, metric: HermitianForm | None = None) -> np.ndarray:
    """``log ||M^n|| / n`` for ``n = 1..n_max``, norms taken for a constant metric.

    Since ``DT^n = M^n`` everywhere, this is ``I_n / n`` for any invariant measure.
    The default metric is the Euclidean one.
    """
    H = (metric or HermitianForm.identity()).matrix()
    w, U = np.linalg.eigh(H)
    root = U @ np.diag(np.sqrt(w)) @ U.conj().T
    iroot = U @ np.diag(1 / np.sqrt(w)) @ U.conj().T
    out = np.empty(n_max)
    P = np.eye(2, dtype=complex)
    log_scale = 0.0
    for n in range(1, n_max + 1):
        P = root @ sys.matrix @ iroot @ P
        s = np.linalg.norm(P, 2)
        P /= s
        log_scale += np.log(s)
        out[n - 1] = log_scale / n
    return out
