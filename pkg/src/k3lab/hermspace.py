"""Hermitian forms on C^2 with a fixed volume, viewed as points of hyperbolic 3-space.

A form is stored by its entries ``[[a, b], [conj(b), d]]`` in an explicit frame and
evaluates a tangent vector as ``h(v) = v^H H v``.  The entries may be numpy arrays,
in which case every operation below acts elementwise on the batch.

Unimodular forms (``a*d - |b|^2 == 1``) are the points of SL(2, C)/SU(2).  The
distance between two of them is the log of the largest eigenvalue of one relative
to the other, and the wedge pairing is normalised so that ``wedge_ratio(I, I) == 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNIMODULAR_TOL = 1e-12
NONUNIQUE_GAP = 1e-10


class InvalidFormError(ValueError):
    """Raised when a form is not positive definite or not unimodular."""


class InvalidSplittingError(ValueError):
    """Raised when a frame does not define a splitting of C^2."""


@dataclass(frozen=True)
class HermitianForm:
    a: np.ndarray | float
    b: np.ndarray | complex
    d: np.ndarray | float

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=complex))
        object.__setattr__(self, "d", np.asarray(self.d, dtype=float))

    @classmethod
    def from_matrix(cls, H) -> "HermitianForm":
        """Build from a (..., 2, 2) hermitian array; the lower corner is ignored."""
        H = np.asarray(H)
        return cls(H[..., 0, 0].real, H[..., 0, 1], H[..., 1, 1].real)

    @classmethod
    def identity(cls) -> "HermitianForm":
        return cls(1.0, 0.0, 1.0)

    @classmethod
    def diag(cls, a, d) -> "HermitianForm":
        return cls(a, np.zeros_like(np.asarray(a, dtype=complex)), d)

    def matrix(self) -> np.ndarray:
        a, b, d = np.broadcast_arrays(self.a, self.b, self.d)
        H = np.empty(a.shape + (2, 2), dtype=complex)
        H[..., 0, 0] = a
        H[..., 0, 1] = b
        H[..., 1, 0] = np.conj(b)
        H[..., 1, 1] = d
        return H

    @property
    def det(self):
        return self.a * self.d - np.abs(self.b) ** 2

    @property
    def shape(self):
        return np.broadcast_shapes(self.a.shape, self.b.shape, self.d.shape)

    def __getitem__(self, idx) -> "HermitianForm":
        a, b, d = np.broadcast_arrays(self.a, self.b, self.d)
        return HermitianForm(a[idx], b[idx], d[idx])

    def __add__(self, other: "HermitianForm") -> "HermitianForm":
        return HermitianForm(self.a + other.a, self.b + other.b, self.d + other.d)

    def scale(self, c) -> "HermitianForm":
        return HermitianForm(c * self.a, c * self.b, c * self.d)

    def is_positive(self) -> bool:
        return bool(np.all(self.a > 0) and np.all(self.d > 0) and np.all(self.det > 0))

    def is_unimodular(self, tol: float = UNIMODULAR_TOL) -> bool:
        # relative to a*d so that large forms are not rejected for rounding
        scale = np.maximum(1.0, np.abs(self.a * self.d))
        return bool(np.all(np.abs(self.det - 1.0) <= tol * scale))

    def normalized(self) -> "HermitianForm":
        """Rescale to determinant one."""
        _require_positive(self)
        return self.scale(1.0 / np.sqrt(self.det))

    def evaluate(self, v) -> np.ndarray:
        """``h(v) = v^H H v`` for vectors of shape (..., 2)."""
        v = np.asarray(v, dtype=complex)
        v1, v2 = v[..., 0], v[..., 1]
        return (self.a * np.abs(v1) ** 2 + self.d * np.abs(v2) ** 2
                + 2 * np.real(np.conj(v1) * self.b * v2))

    def pullback(self, L) -> "HermitianForm":
        """The form ``v -> h(L v)``, i.e. the matrix ``L^H H L``."""
        L = np.asarray(L, dtype=complex)
        return HermitianForm.from_matrix(np.conj(np.swapaxes(L, -1, -2)) @ self.matrix() @ L)


@dataclass(frozen=True)
class UnimodularFrame:
    """A basis ``(e1, e2)`` of C^2 with ``|det(e1, e2)| == 1``."""
    e1: np.ndarray
    e2: np.ndarray

    def __post_init__(self):
        e1 = np.asarray(self.e1, dtype=complex)
        e2 = np.asarray(self.e2, dtype=complex)
        object.__setattr__(self, "e1", e1)
        object.__setattr__(self, "e2", e2)
        if abs(abs(np.linalg.det(self.matrix())) - 1.0) > UNIMODULAR_TOL:
            raise InvalidSplittingError(
                f"frame is not unimodular: |det| = {abs(np.linalg.det(self.matrix()))!r}")

    def matrix(self) -> np.ndarray:
        return np.column_stack([self.e1, self.e2])

    @classmethod
    def standard(cls) -> "UnimodularFrame":
        return cls(np.array([1.0, 0.0]), np.array([0.0, 1.0]))

    def express(self, h: HermitianForm) -> HermitianForm:
        """Entries of ``h`` (given in the standard frame) in this frame."""
        return h.pullback(self.matrix())


@dataclass(frozen=True)
class GeodesicSplitting:
    """The decomposition C^2 = W+ (+) W- spanned by a frame.

    The forms making the two lines orthogonal form a geodesic in H^3; in the
    frame coordinates they are exactly the diagonal forms.
    """
    frame: UnimodularFrame

    def __post_init__(self):
        E = self.frame.matrix()
        if abs(np.linalg.det(E)) < 1e-12:
            raise InvalidSplittingError("frame vectors are linearly dependent")

    def express(self, h: HermitianForm) -> HermitianForm:
        return self.frame.express(h)


def _require_positive(h: HermitianForm):
    if not h.is_positive():
        raise InvalidFormError("form is not positive definite")


def _require_unimodular(h: HermitianForm):
    _require_positive(h)
    if not h.is_unimodular():
        raise InvalidFormError(
            f"form is not unimodular (det = {np.asarray(h.det).ravel()[:4]})")


def wedge_ratio(h1: HermitianForm, h2: HermitianForm):
    """Density of ``h1 ^ h2`` against the reference volume.

    ``a1*d2 + a2*d1 - 2 Re(b1 conj(b2))``; equals ``2`` for ``(I, I)`` and
    ``e^dist + e^-dist`` for unimodular inputs.
    """
    return (h1.a * h2.d + h2.a * h1.d
            - 2 * (h1.b.real * h2.b.real + h1.b.imag * h2.b.imag))


def relative_eigenvalues(h1: HermitianForm, h2: HermitianForm):
    """Eigenvalues ``(mu_max, mu_min)`` of ``h1^{-1} h2`` from the 2x2 characteristic polynomial."""
    _require_positive(h1)
    det1 = h1.det
    prod = h2.det / det1
    # entries of L^-1 H2 L^-H for the Cholesky factor L of H1; the discriminant is
    # then a sum of squares and stays accurate when the eigenvalues nearly coincide
    l11 = np.sqrt(h1.a)
    l22 = np.sqrt(det1 / h1.a)
    p = -np.conj(h1.b) / (h1.a * l22)
    q = 1.0 / l22
    c11 = h2.a / h1.a
    c12 = (h2.a * np.conj(p) + h2.b * q) / l11
    c22 = np.abs(p) ** 2 * h2.a + q * q * h2.d + 2 * np.real(p * h2.b * q)
    disc = np.sqrt((c11 - c22) ** 2 + 4 * np.abs(c12) ** 2)
    mu_max = 0.5 * (c11 + c22 + disc)
    # product form avoids cancellation for the small root
    mu_min = np.where(mu_max > 0, prod / np.where(mu_max > 0, mu_max, 1.0), 0.0)
    return mu_max, mu_min


def dist(h1: HermitianForm, h2: HermitianForm):
    """Hyperbolic distance ``log mu_max(h1^{-1} h2)`` between unimodular forms."""
    _require_unimodular(h1)
    _require_unimodular(h2)
    t = 0.5 * wedge_ratio(h1, h2)
    return np.arccosh(np.maximum(t, 1.0))


def project_to_geodesic(h: HermitianForm, splitting: GeodesicSplitting | None = None) -> HermitianForm:
    """Nearest-point projection onto the geodesic of forms diagonal in the splitting frame.

    ``h`` must already be written in that frame; the result is
    ``diag(sqrt(a/d), sqrt(d/a))``.
    """
    _require_unimodular(h)
    r = np.sqrt(h.a / h.d)
    return HermitianForm(r, np.zeros_like(h.b), 1.0 / r)


def maximizing_line(h1: HermitianForm, h2: HermitianForm):
    """Unit vector spanning the direction of maximal ``h2/h1``, or ``None`` if not unique.

    The phase is fixed so that the first nonzero coordinate is real and positive.
    Only scalar forms are accepted.
    """
    _require_positive(h1)
    _require_positive(h2)
    mu_max, mu_min = relative_eigenvalues(h1, h2)
    mu_max, mu_min = float(mu_max), float(mu_min)
    if (mu_max - mu_min) < NONUNIQUE_GAP * mu_max:
        return None
    K = np.linalg.solve(h1.matrix(), h2.matrix())
    c1 = np.array([K[0, 1], mu_max - K[0, 0]])
    c2 = np.array([mu_max - K[1, 1], K[1, 0]])
    v = c1 if np.linalg.norm(c1) >= np.linalg.norm(c2) else c2
    v = v / np.linalg.norm(v)
    lead = v[0] if abs(v[0]) > 1e-14 else v[1]
    return v * (abs(lead) / lead)


def line_angle(u, v) -> float:
    """Angle between the complex lines spanned by ``u`` and ``v``."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    c = abs(np.vdot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v))
    # arcsin of the complementary component is accurate near zero
    s = np.sqrt(max(0.0, 1.0 - min(c, 1.0) ** 2))
    return float(np.arctan2(s, c))


def geodesic_point(h1: HermitianForm, h2: HermitianForm, s: float) -> HermitianForm:
    """The point at fraction ``s`` of the geodesic segment from ``h1`` to ``h2``."""
    H1 = h1.matrix()
    w, U = np.linalg.eigh(H1)
    root = U @ np.diag(np.sqrt(w)) @ U.conj().T
    iroot = U @ np.diag(1 / np.sqrt(w)) @ U.conj().T
    K = iroot @ h2.matrix() @ iroot
    kw, kU = np.linalg.eigh(K)
    Ks = kU @ np.diag(kw ** s) @ kU.conj().T
    return HermitianForm.from_matrix(root @ Ks @ root)


def random_unimodular(rng: np.random.Generator, size: int, max_dist: float = 4.0) -> HermitianForm:
    """Random unimodular forms at distance at most ``max_dist`` from the identity.

    Built as ``U^H diag(e^r, e^-r) U`` with ``U`` Haar-random in SU(2).
    """
    r = rng.uniform(0.0, max_dist, size)
    z = rng.normal(size=(size, 4))
    z /= np.linalg.norm(z, axis=1)[:, None]
    p, q = z[:, 0] + 1j * z[:, 1], z[:, 2] + 1j * z[:, 3]
    U = np.empty((size, 2, 2), dtype=complex)
    U[:, 0, 0], U[:, 0, 1] = p, -np.conj(q)
    U[:, 1, 0], U[:, 1, 1] = q, np.conj(p)
    D = np.zeros((size, 2, 2))
    D[:, 0, 0], D[:, 1, 1] = np.exp(r), np.exp(-r)
    return HermitianForm.from_matrix(np.conj(np.swapaxes(U, -1, -2)) @ D @ U)
