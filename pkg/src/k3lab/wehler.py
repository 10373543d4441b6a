"""A (2,2,2)-surface in P^1 x P^1 x P^1 with its three Vieta involutions.

``F = sum c[i, j, k] m_i(X) m_j(Y) m_k(Z)`` with ``m(U) = (U0^2, U0 U1, U1^2)``.
A point is an array of shape (..., 3, 2): one homogeneous pair per factor,
normalised so its larger-modulus coordinate equals 1.  Projecting to two of the
factors is a double cover, and swapping the two sheets is an involution;
``f = iota_z o iota_y o iota_x``.

Points are complex.  Derivatives use implicit differentiation of ``F = 0`` in
affine chart coordinates; tangent norms are Fubini-Study on each factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

DEFAULT_SEED = 20240611
RESIDUAL_TOL = 1e-9
DEGENERATE_TOL = 1e-8
GRAM = np.array([[0, 2, 2], [2, 0, 2], [2, 2, 0]], dtype=np.int64)
AXES = {"x": 0, "y": 1, "z": 2}


class DegenerateFiberError(ValueError):
    pass


def _monomials(U):
    u0, u1 = U[..., 0], U[..., 1]
    m = np.empty(U.shape[:-1] + (3,), dtype=complex)
    m[..., 0] = u0 * u0
    m[..., 1] = u0 * u1
    m[..., 2] = u1 * u1
    return m


def normalize(P) -> np.ndarray:
    """Divide each homogeneous pair by its larger-modulus coordinate."""
    P = np.asarray(P, dtype=complex)
    big = np.where(np.abs(P[..., 0]) >= np.abs(P[..., 1]), P[..., 0], P[..., 1])
    return P / big[..., None]


def charts(P):
    """Chart index (which coordinate is 1) and affine coordinate for each factor."""
    P = normalize(P)
    b = (np.abs(P[..., 1]) > np.abs(P[..., 0])).astype(int)
    t = np.where(b == 0, P[..., 1], P[..., 0])
    return b, t


def _dmonomials(P):
    """Derivative of ``m`` along each factor's affine chart coordinate, for normalised ``P``.

    In the chart ``U0 = 1`` it is ``d/dU1 = (0, U0, 2 U1)``; in ``U1 = 1`` it is
    ``d/dU0 = (2 U0, U1, 0)``.
    """
    u0, u1 = P[..., 0], P[..., 1]
    b = np.abs(u1) > np.abs(u0)
    dm = np.empty(P.shape[:-1] + (3,), dtype=complex)
    dm[..., 0] = np.where(b, 2 * u0, 0.0)
    dm[..., 1] = np.where(b, u1, u0)
    dm[..., 2] = np.where(b, 0.0, 2 * u1)
    return dm


@dataclass(frozen=True)
class WehlerSurface:
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (3, 3, 3):
            raise ValueError("coefficient tensor must have shape (3, 3, 3)")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def default(cls) -> "WehlerSurface":
        """The surface with coefficients drawn from ``DEFAULT_SEED``."""
        return cls.random(np.random.default_rng(DEFAULT_SEED))

    @classmethod
    def random(cls, rng: np.random.Generator) -> "WehlerSurface":
        return cls(rng.normal(size=(3, 3, 3)))

    @property
    def scale(self) -> float:
        return float(np.abs(self.coeffs).sum())

    def __call__(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=complex)
        m = [_monomials(P[..., a, :]) for a in range(3)]
        return np.einsum("ijk,...i,...j,...k->...", self.coeffs, *m)

    def residual(self, P) -> np.ndarray:
        """``|F|`` at the normalised point, relative to the coefficient size."""
        return np.abs(self(normalize(P))) / self.scale

    def _fiber_quadratic(self, P, axis: int):
        """``q`` with ``F = q0 U0^2 + q1 U0 U1 + q2 U1^2`` along ``axis``."""
        c = np.moveaxis(self.coeffs, axis, 0)
        others = [a for a in range(3) if a != axis]
        m1 = _monomials(P[..., others[0], :])
        m2 = _monomials(P[..., others[1], :])
        return np.einsum("ijk,...j,...k->...i", c, m1, m2)

    def gradient(self, P) -> np.ndarray:
        """``dF/dt_a`` in the affine chart coordinates of ``P`` (shape (..., 3))."""
        P = normalize(P)
        m = _monomials(P)
        dm = _dmonomials(P)
        c = self.coeffs
        g = np.empty(P.shape[:-1], dtype=complex)
        g[..., 0] = np.einsum("ijk,...i,...j,...k->...", c, dm[..., 0, :], m[..., 1, :], m[..., 2, :])
        g[..., 1] = np.einsum("ijk,...i,...j,...k->...", c, m[..., 0, :], dm[..., 1, :], m[..., 2, :])
        g[..., 2] = np.einsum("ijk,...i,...j,...k->...", c, m[..., 0, :], m[..., 1, :], dm[..., 2, :])
        return g

    def involution(self, P, axis) -> np.ndarray:
        """Swap the two roots of the fibre quadratic along ``axis``.

        The other root is read off from Vieta's relations in one of three
        equivalent forms, the one with the largest norm, so roots at infinity and
        vanishing leading coefficients need no special case.  A Newton step on the
        fibre quadratic then removes rounding.  A double root is fixed.
        """
        axis = AXES.get(axis, axis)
        P = normalize(P)
        q = self._fiber_quadratic(P, axis)
        q = q / np.max(np.abs(q), axis=-1, keepdims=True)
        u0, u1 = P[..., axis, 0], P[..., axis, 1]
        q0, q1, q2 = q[..., 0], q[..., 1], q[..., 2]
        cands = np.empty(q.shape[:-1] + (3, 2), dtype=complex)
        cands[..., 0, 0], cands[..., 0, 1] = q2 * u1, q0 * u0
        cands[..., 1, 0], cands[..., 1, 1] = q2 * u0, -q1 * u0 - q2 * u1
        cands[..., 2, 0], cands[..., 2, 1] = -q1 * u1 - q0 * u0, q0 * u1
        norms = np.max(np.abs(cands), axis=-1)
        pick = np.argmax(norms, axis=-1)
        v = np.take_along_axis(cands, pick[..., None, None], axis=-2)[..., 0, :]
        v = _polish(normalize(v), q)
        out = P.copy()
        out[..., axis, :] = v
        return out

    def f(self, P) -> np.ndarray:
        P = self.involution(P, 0)
        P = self.involution(P, 1)
        return self.involution(P, 2)

    def f_inverse(self, P) -> np.ndarray:
        P = self.involution(P, 2)
        P = self.involution(P, 1)
        return self.involution(P, 0)

    def random_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Points with Gaussian-random ``Y, Z`` and a random root ``X``."""
        YZ = rng.normal(size=(count, 2, 2)) + 1j * rng.normal(size=(count, 2, 2))
        P = np.zeros((count, 3, 2), dtype=complex)
        P[:, 1:, :] = YZ
        P[:, 0, 0] = 1.0
        P = normalize(P)
        q = self._fiber_quadratic(P, 0)
        q0, q1, q2 = q[:, 0], q[:, 1], q[:, 2]
        # roots of q0 U0^2 + q1 U0 U1 + q2 U1^2: work in whichever chart keeps
        # the leading coefficient large
        use_t = np.abs(q2) >= np.abs(q0)
        a = np.where(use_t, q2, q0)
        c = np.where(use_t, q0, q2)
        sq = np.sqrt(q1 * q1 - 4 * a * c)
        sign = np.where(rng.random(count) < 0.5, 1.0, -1.0)
        r1 = (-q1 - sq) / (2 * a)
        r2 = c / (a * np.where(r1 == 0, 1.0, r1))
        r = np.where(sign > 0, r1, r2)
        P[:, 0, 0] = np.where(use_t, 1.0, r)
        P[:, 0, 1] = np.where(use_t, r, 1.0)
        P = normalize(P)
        P[:, 0, :] = _polish(P[:, 0, :], q / np.max(np.abs(q), axis=-1, keepdims=True))
        return P


def _polish(v, q, steps: int = 2):
    """Newton steps on the fibre quadratic ``q`` in the chart of ``v``."""
    v = normalize(v)
    b = (np.abs(v[..., 1]) > np.abs(v[..., 0]))
    t = np.where(b, v[..., 0], v[..., 1])
    # chart U0 = 1: q0 + q1 t + q2 t^2 ; chart U1 = 1: q0 t^2 + q1 t + q2
    lo = np.where(b, q[..., 2], q[..., 0])
    hi = np.where(b, q[..., 0], q[..., 2])
    q1 = q[..., 1]
    for _ in range(steps):
        p = lo + q1 * t + hi * t * t
        dp = q1 + 2 * hi * t
        ok = np.abs(dp) > DEGENERATE_TOL
        t = np.where(ok, t - p / np.where(ok, dp, 1.0), t)
    out = np.empty_like(v)
    out[..., 0] = np.where(b, t, 1.0)
    out[..., 1] = np.where(b, 1.0, t)
    return normalize(out)


def fs_weights(P) -> np.ndarray:
    """``1 / (1 + |t|^2)`` per factor: the Fubini-Study length of ``d/dt``."""
    _, t = charts(P)
    return 1.0 / (1.0 + np.abs(t) ** 2)


def tangent_basis(surface: WehlerSurface, P, g=None) -> np.ndarray:
    """Fubini-Study orthonormal basis of ``T_P S`` in chart coordinates, shape (..., 3, 2)."""
    g = surface.gradient(P) if g is None else g
    w = fs_weights(P)
    gu = g / w
    _, _, Vh = np.linalg.svd(gu[..., None, :])
    U = np.conj(np.swapaxes(Vh[..., 1:, :], -1, -2))  # orthonormal in u = w v
    return U / w[..., None]


def involution_derivative(surface: WehlerSurface, P, Q, axis: int, gQ=None) -> np.ndarray:
    """The linear map ``v -> D iota (v)`` on chart coordinates, shape (..., 3, 3).

    Only the ``axis`` coordinate changes; it follows from differentiating
    ``F(Q) = 0`` with the other two coordinates held in common.
    """
    gQ = surface.gradient(Q) if gQ is None else gQ
    D = np.broadcast_to(np.eye(3, dtype=complex), gQ.shape[:-1] + (3, 3)).copy()
    ga = gQ[..., axis]
    if np.any(np.abs(ga) < DEGENERATE_TOL):
        raise DegenerateFiberError("involution hits a ramification point")
    for j in range(3):
        D[..., axis, j] = 0.0 if j == axis else -gQ[..., j] / ga
    return D


def cocycle_step(surface: WehlerSurface, P):
    """One step of ``f`` with its derivative as a 2x2 matrix in orthonormal tangent bases.

    Returns ``(f(P), K)`` where ``K`` maps coefficients in ``tangent_basis(P)`` to
    coefficients in ``tangent_basis(f(P))``.
    """
    Q, K, _ = _step(surface, P)
    return Q, K


def _step(surface: WehlerSurface, P, start=None):
    # start / the third return value: (gradient, tangent basis) at the normalised point,
    # so consecutive steps along an orbit share them
    pts = [normalize(P)]
    for a in range(3):
        pts.append(surface.involution(pts[-1], a))
    if start is None:
        g0 = surface.gradient(pts[0])
        start = (g0, tangent_basis(surface, pts[0], g0))
    grads = [start[0]] + [surface.gradient(p) for p in pts[1:]]
    V = start[1]
    for a in range(3):
        V = involution_derivative(surface, pts[a], pts[a + 1], a, grads[a + 1]) @ V
    B3 = tangent_basis(surface, pts[3], grads[3])
    w3 = fs_weights(pts[3])
    K = np.einsum("...ia,...ib->...ab", np.conj(B3 * w3[..., None]), V * w3[..., None])
    return pts[3], K, (grads[3], B3)


def omega_jacobian(surface: WehlerSurface, P, Q, D) -> np.ndarray:
    """``g^* Omega / Omega`` for the residue form, with ``D`` the chart derivative of ``g``.

    ``Omega`` is ``dt_b ^ dt_c / (dF/dt_a)`` for a cyclic ``(a, b, c)``; on tangent
    vectors all three choices agree, and the one with the largest ``|dF/dt_a|`` is used.
    Chart changes only flip signs, so the modulus is chart independent.
    """
    B = tangent_basis(surface, P)
    DB = D @ B

    def omega(gr, V):
        a = np.argmax(np.abs(gr), axis=-1)
        b, c = (a + 1) % 3, (a + 2) % 3
        pick = lambda M, i: np.take_along_axis(M, i[..., None, None], axis=-2)[..., 0, :]
        vb, vc = pick(V, b), pick(V, c)
        ga = np.take_along_axis(gr, a[..., None], axis=-1)[..., 0]
        return (vb[..., 0] * vc[..., 1] - vb[..., 1] * vc[..., 0]) / ga

    return omega(surface.gradient(Q), DB) / omega(surface.gradient(P), B)


def composed_derivative(surface: WehlerSurface, P):
    """``(f(P), D f)`` with ``D f`` the 3x3 chart-coordinate derivative."""
    pts = [normalize(P)]
    for a in range(3):
        pts.append(surface.involution(pts[-1], a))
    D = np.broadcast_to(np.eye(3, dtype=complex), pts[0].shape[:-2] + (3, 3))
    for a in range(3):
        D = involution_derivative(surface, pts[a], pts[a + 1], a) @ D
    return pts[3], D


# ---- cohomology ---------------------------------------------------------------

def reflection_matrix(axis: int, gram=GRAM) -> np.ndarray:
    """The nontrivial involutive isometry of ``gram`` fixing the other two basis classes.

    Column ``axis`` is the image ``v`` of the moved class.  Isometry against the
    fixed classes gives ``v^T G e_j = G[axis, j]``; involutivity forces
    ``v[axis] = -1`` for a nontrivial solution; this is solved exactly in rationals.
    """
    n = len(gram)
    others = [j for j in range(n) if j != axis]
    G = [[Fraction(int(v)) for v in row] for row in gram]
    # unknowns v_j, j != axis; equations for each fixed class k:
    #   sum_j v_j G[j][k] = G[axis][k] - v_axis G[axis][k]
    v_axis = Fraction(-1)
    A = [[G[j][k] for j in others] for k in others]
    rhs = [G[axis][k] - v_axis * G[axis][k] for k in others]
    det = A[0][0] * A[1][1] - A[0][1] * A[1][0]
    if det == 0:
        raise ValueError("gram matrix does not determine the reflection")
    sol = [(rhs[0] * A[1][1] - A[0][1] * rhs[1]) / det,
           (A[0][0] * rhs[1] - A[1][0] * rhs[0]) / det]
    v = [Fraction(0)] * n
    v[axis] = v_axis
    for j, s in zip(others, sol):
        v[j] = s
    if any(x.denominator != 1 for x in v):
        raise ValueError("reflection is not integral")
    S = np.eye(n, dtype=np.int64)
    S[:, axis] = [int(x) for x in v]
    return S


def is_isometric_involution(S, gram=GRAM) -> bool:
    S = np.asarray(S, dtype=object)
    G = np.asarray(gram, dtype=object)
    eye = np.eye(len(G), dtype=np.int64).astype(object)
    return bool(np.array_equal(S.T.dot(G).dot(S), G) and np.array_equal(S.dot(S), eye))


@dataclass(frozen=True)
class CohomologyEntropy:
    reflections: tuple
    product: np.ndarray
    trace: int
    det: int
    charpoly: tuple  # coefficients of lambda^3 + c2 lambda^2 + c1 lambda + c0, leading first
    spectral_radius: float
    h: float


def cohomology_entropy(surface: WehlerSurface | None = None) -> CohomologyEntropy:
    """Entropy ``log rho(f^*)`` from the action on the span of the three factor classes.

    ``f^* = S_x S_y S_z`` for ``f = iota_z o iota_y o iota_x``.  The surface enters
    only through the intersection form, which is the same for every smooth member.
    """
    S = tuple(reflection_matrix(a) for a in range(3))
    P = S[0] @ S[1] @ S[2]
    tr = int(np.trace(P))
    Pobj = P.astype(object)
    det = int(Pobj[0, 0] * (Pobj[1, 1] * Pobj[2, 2] - Pobj[1, 2] * Pobj[2, 1])
              - Pobj[0, 1] * (Pobj[1, 0] * Pobj[2, 2] - Pobj[1, 2] * Pobj[2, 0])
              + Pobj[0, 2] * (Pobj[1, 0] * Pobj[2, 1] - Pobj[1, 1] * Pobj[2, 0]))
    minors = sum(int(Pobj[i, i] * Pobj[j, j] - Pobj[i, j] * Pobj[j, i])
                 for i in range(3) for j in range(i + 1, 3))
    charpoly = (1, -tr, minors, -det)
    rho = float(np.max(np.abs(np.roots(charpoly))))
    return CohomologyEntropy(S, P, tr, det, charpoly, rho, float(np.log(rho)))


# ---- Lyapunov exponents -----------------------------------------------------------

@dataclass(frozen=True)
class LyapunovResult:
    windows: np.ndarray      # n = 1, 2, 4, ...
    profile: np.ndarray      # I_n / n, one row per seed
    slack: np.ndarray        # edge-effect bound for I_{2n} <= 2 I_n, per seed and window
    estimate: np.ndarray     # Benettin estimate per seed
    restarts: np.ndarray
    steps: int


def cocycle_profile(K: np.ndarray, max_window: int = 64):
    """Subadditive profile ``I_n / n`` of a matrix cocycle ``K`` of shape (T, ..., d, d).

    ``I_n`` averages ``log ||K_{k+n-1} ... K_k||`` over a common range of ``k``,
    built by doubling window products.  ``slack[i]`` bounds how far
    ``I_{2n} <= 2 I_n`` can fail purely from the averaging window.
    """
    T = K.shape[0]
    L = T - 2 * max_window
    if L <= 0:
        raise ValueError("orbit too short for the requested windows")
    windows, prof, slack = [], [], []
    P = K
    n = 1
    while n <= max_window:
        lognorm = np.log(np.linalg.norm(P, ord=2, axis=(-2, -1)))
        windows.append(n)
        prof.append(lognorm[:L].mean(axis=0) / n)
        # I_{2n} uses ranges [0, L) and [n, n + L) of these windows
        slack.append(2 * n * np.abs(lognorm[:L + n]).max(axis=0) / L)
        if 2 * n > max_window:
            break
        P = P[n:] @ P[:-n]
        n *= 2
    return np.array(windows), np.array(prof), np.array(slack)


def benettin(K: np.ndarray, burn_in: int = 100) -> np.ndarray:
    """Top exponent of the cocycle by iterating a vector and summing log growth."""
    v = np.zeros(K.shape[1:-1], dtype=complex)
    v[..., 0] = 1.0
    total = np.zeros(K.shape[1:-2])
    for k in range(K.shape[0]):
        v = np.einsum("...ij,...j->...i", K[k], v)
        nv = np.linalg.norm(v, axis=-1)
        v = v / nv[..., None]
        if k >= burn_in:
            total += np.log(nv)
    return total / (K.shape[0] - burn_in)


def orbit_cocycle(surface: WehlerSurface, seeds, N: int):
    """Run ``N`` steps from one seeded start per seed, in parallel across seeds.

    Returns the cocycle matrices (N, S, 2, 2), the final points and restart counts.
    A step that fails (ramification point, residual drift) restarts that seed from
    a fresh point drawn from its own generator.
    """
    seeds = list(seeds)
    rngs = [np.random.default_rng(s) for s in seeds]
    P = np.concatenate([surface.random_points(r, 1) for r in rngs])
    K = np.empty((N, len(seeds), 2, 2), dtype=complex)
    restarts = np.zeros(len(seeds), dtype=int)
    frames = None
    for n in range(N):
        try:
            Q, Kn, frames = _step(surface, P, frames)
            bad = ~np.isfinite(Kn).all(axis=(-2, -1)) | (surface.residual(Q) > RESIDUAL_TOL)
        except DegenerateFiberError:
            frames = None
            bad = np.ones(len(seeds), dtype=bool)
            Q, Kn = P.copy(), np.broadcast_to(np.eye(2, dtype=complex), (len(seeds), 2, 2)).copy()
            # find which ones are degenerate by stepping individually
            for i in range(len(seeds)):
                try:
                    Qi, Ki = cocycle_step(surface, P[i:i + 1])
                    if surface.residual(Qi)[0] <= RESIDUAL_TOL:
                        Q[i], Kn[i], bad[i] = Qi[0], Ki[0], False
                except DegenerateFiberError:
                    pass
        for i in np.flatnonzero(bad):
            restarts[i] += 1
            Q[i] = surface.random_points(rngs[i], 1)[0]
            Kn[i] = np.eye(2)
        if bad.any():
            frames = None
        K[n] = Kn
        P = Q
    return K, P, restarts


def lyapunov_estimate(surface: WehlerSurface, seeds=(0,), N: int = 100_000,
                      burn_in: int = 1000, max_window: int = 64) -> LyapunovResult:
    """Volume-seeded Lyapunov estimates of ``f`` with the product Fubini-Study metric."""
    if N < 1000:
        raise ValueError("N must be >= 1000")
    seeds = np.atleast_1d(seeds)
    K, _, restarts = orbit_cocycle(surface, seeds, N)
    windows, prof, slack = cocycle_profile(K[burn_in:], max_window)
    est = benettin(K, burn_in)
    return LyapunovResult(windows, prof.T, slack.T, est, restarts, N)


def kummer_control(system, N: int = 10_000, burn_in: int = 100) -> float:
    """The same estimator on a linear torus map, where the answer is ``h/2``.

    In a frame orthonormal for the flat metric the derivative is the constant
    matrix ``diag(lambda_u, lambda_s)``.
    """
    D = np.diag([system.lambda_u, system.lambda_s]).astype(complex)
    K = np.broadcast_to(D, (N, 1, 2, 2))
    return float(benettin(K, burn_in)[0])


@dataclass(frozen=True)
class VolumeCheck:
    max_log_jacobian: float
    checked: int
    skipped: int


def volume_invariance_check(surface: WehlerSurface, seed: int = 0, N: int = 1000,
                            maps: str = "f") -> VolumeCheck:
    """``max |log |J_Omega||`` along an orbit, for ``f`` or a single involution ``"x"``, ``"y"``, ``"z"``."""
    rng = np.random.default_rng(seed)
    P = surface.random_points(rng, 1)
    worst, checked, skipped = 0.0, 0, 0
    for _ in range(N):
        try:
            if maps == "f":
                Q, D = composed_derivative(surface, P)
            else:
                a = AXES[maps]
                Q = surface.involution(P, a)
                D = involution_derivative(surface, P, Q, a)
            J = omega_jacobian(surface, P, Q, D)
            if not np.all(np.isfinite(J)):
                raise DegenerateFiberError("non-finite jacobian")
            worst = max(worst, float(np.max(np.abs(np.log(np.abs(J))))))
            checked += 1
        except DegenerateFiberError:
            skipped += 1
            Q = surface.random_points(rng, 1)
        P = Q if maps == "f" else surface.random_points(rng, 1)
    return VolumeCheck(worst, checked, skipped)
