"""Birkhoff sums, coboundary detection and the transfer equation ``f = alpha o T - alpha``.

Observables are vectorised callables on points of shape (n, 4).  Monte-Carlo
estimates start from dyadic volume samples, so orbits are exact and every
estimate is reproducible from its seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.special import logsumexp

from .cocycle import MetricField, frame_entries, rho_and_beta, torus_grid
from .torus import KummerSystem, reduce, sample_volume, step

COBOUNDARY_SLOPE = 0.1
NOT_COBOUNDARY_SLOPE = 0.4
MIN_ORBITS = 100
GAMMA_MAX = 1.0 / 6.0


class Observable:
    """A real function on the torus; subclasses implement ``__call__`` and ``mean``."""

    def __call__(self, x) -> np.ndarray:
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class TrigObservable(Observable):
    """``const + sum_j (cc_j cos + cs_j sin)(2 pi m_j . x)``."""
    modes: np.ndarray = dc_field(default_factory=lambda: np.zeros((0, 4), dtype=np.int64))
    cos_coeffs: np.ndarray = dc_field(default_factory=lambda: np.zeros(0))
    sin_coeffs: np.ndarray = dc_field(default_factory=lambda: np.zeros(0))
    const: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.modes, dtype=np.int64).reshape(-1, 4)
        object.__setattr__(self, "modes", m)
        cc = np.broadcast_to(np.asarray(self.cos_coeffs, dtype=float), (len(m),)).copy()
        cs = np.asarray(self.sin_coeffs, dtype=float)
        cs = np.zeros(len(m)) if cs.size == 0 else np.broadcast_to(cs, (len(m),)).copy()
        object.__setattr__(self, "cos_coeffs", cc)
        object.__setattr__(self, "sin_coeffs", cs)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ph = 2 * np.pi * (x @ self.modes.T)
        return self.const + np.cos(ph) @ self.cos_coeffs + np.sin(ph) @ self.sin_coeffs

    def mean(self) -> float:
        zero = ~self.modes.any(axis=1)
        return float(self.const + self.cos_coeffs[zero].sum())

    def sup_bound(self) -> float:
        return float(abs(self.const) + np.sum(np.hypot(self.cos_coeffs, self.sin_coeffs)))

    def compose(self, sys: KummerSystem, n: int = 1) -> "TrigObservable":
        """``f o T^n``: mode ``m`` becomes ``(A^T)^n m``."""
        A = np.linalg.matrix_power(sys.action.T, n)
        return TrigObservable(self.modes @ A.T, self.cos_coeffs, self.sin_coeffs, self.const)

    def __sub__(self, other: "TrigObservable") -> "TrigObservable":
        return TrigObservable(np.vstack([self.modes, other.modes]),
                              np.concatenate([self.cos_coeffs, -other.cos_coeffs]),
                              np.concatenate([self.sin_coeffs, -other.sin_coeffs]),
                              self.const - other.const)

    @classmethod
    def constant(cls, c: float) -> "TrigObservable":
        return cls(const=float(c))

    @classmethod
    def cosine(cls, m, amp: float = 1.0) -> "TrigObservable":
        return cls(np.asarray(m).reshape(1, 4), [amp])


def planted_coboundary(psi: TrigObservable, sys: KummerSystem) -> TrigObservable:
    """``psi o T - psi``."""
    return psi.compose(sys) - psi


COCYCLE_KINDS = ("rho_u", "rho_s", "beta", "rho_u-h/2", "rho_s+h/2", "rho_u-rho_s-h")


@dataclass(frozen=True)
class CocycleObservable(Observable):
    """A cocycle quantity of a metric field, e.g. ``rho_u - rho_s - h``."""
    field: MetricField
    kind: str = "rho_u-rho_s-h"
    mean_grid: int = 16

    def __post_init__(self):
        if self.kind not in COCYCLE_KINDS:
            raise ValueError(f"unknown cocycle observable {self.kind!r}; expected one of {COCYCLE_KINDS}")

    def __call__(self, x) -> np.ndarray:
        rec = rho_and_beta(self.field, x, N=0)
        h = self.field.system.h
        return {
            "rho_u": lambda: rec.rho_u,
            "rho_s": lambda: rec.rho_s,
            "beta": lambda: rec.beta,
            "rho_u-h/2": lambda: rec.rho_u - h / 2,
            "rho_s+h/2": lambda: rec.rho_s + h / 2,
            "rho_u-rho_s-h": lambda: rec.rho_u - rec.rho_s - h,
        }[self.kind]()

    def mean(self) -> float:
        return float(np.mean(self(torus_grid(self.mean_grid))))


def planted_transfer_solution(field: MetricField, kind: str, x) -> np.ndarray:
    """Closed-form ``psi`` with ``rho_u - h/2 = psi o T - psi`` (or the stable analogue).

    ``psi_u = 1/2 log a~`` and ``psi_s = 1/2 log d~`` with det-normalised eigenframe
    entries; not mean-normalised.
    """
    F = frame_entries(field, reduce(x))
    n = np.sqrt(F.det)
    if kind == "rho_u-h/2":
        return 0.5 * np.log(F.a / n)
    if kind == "rho_s+h/2":
        return 0.5 * np.log(F.d / n)
    raise ValueError(f"no planted solution for {kind!r}")


def _birkhoff_table(f: Observable, sys: KummerSystem, x, N_max: int) -> np.ndarray:
    """Rows ``S_1 f, ..., S_{N_max} f`` over the initial points ``x``."""
    out = np.empty((N_max, len(x)))
    s = np.zeros(len(x))
    for n in range(N_max):
        s = s + f(x)
        out[n] = s
        x = step(sys, x)
    return out


@dataclass(frozen=True)
class Profile:
    N: np.ndarray
    l2: np.ndarray
    stderr: np.ndarray
    sample_mean: float
    sample_mean_se: float


def l2_birkhoff_profile(f: Observable, sys: KummerSystem, seed: int, orbits: int, N_max: int) -> Profile:
    """Monte-Carlo ``||S_N f||_{L^2}`` for ``N = 1..N_max`` over seeded volume samples."""
    if orbits < MIN_ORBITS:
        raise ValueError(f"need at least {MIN_ORBITS} orbits, got {orbits}")
    x = sample_volume(seed, orbits)
    S = _birkhoff_table(f, sys, x, N_max)
    sq = S ** 2
    m2 = sq.mean(axis=1)
    l2 = np.sqrt(m2)
    # delta method for the square root of a mean
    se_m2 = sq.std(axis=1, ddof=1) / np.sqrt(orbits)
    se = np.where(l2 > 0, se_m2 / (2 * np.where(l2 > 0, l2, 1)), 0.0)
    f0 = S[0]
    return Profile(np.arange(1, N_max + 1), l2, se,
                   float(f0.mean()), float(f0.std(ddof=1) / np.sqrt(orbits)))


@dataclass(frozen=True)
class CoboundaryVerdict:
    verdict: str
    slope: float
    reason: str
    profile: Profile | None = None


def growth_slope(profile: Profile) -> float:
    """Least-squares slope of ``log ||S_N f||`` against ``log N``."""
    keep = profile.l2 > 0
    if keep.sum() < 2:
        return 0.0
    return float(np.polyfit(np.log(profile.N[keep]), np.log(profile.l2[keep]), 1)[0])


def is_coboundary(f: Observable, sys: KummerSystem, seed: int = 0, orbits: int = 1000,
                  N_max: int = 64, low: float = COBOUNDARY_SLOPE,
                  high: float = NOT_COBOUNDARY_SLOPE) -> CoboundaryVerdict:
    """Classify ``f`` by the growth of its Birkhoff sums.

    Bounded profiles (slope < ``low``) indicate a coboundary; diffusive or linear
    growth (slope > ``high``) rules it out.  A sample mean beyond three standard
    errors rules it out directly, since coboundaries integrate to zero.  The
    thresholds are this library's calibration, not derived constants.
    """
    if orbits < MIN_ORBITS or N_max < 4:
        return CoboundaryVerdict("Inconclusive", float("nan"), "insufficient data")
    prof = l2_birkhoff_profile(f, sys, seed, orbits, N_max)
    if np.all(prof.l2 == 0):
        return CoboundaryVerdict("Coboundary", 0.0, "identically zero", prof)
    slope = growth_slope(prof)
    if abs(prof.sample_mean) > 3 * prof.sample_mean_se:
        return CoboundaryVerdict("NotCoboundary", slope, "nonzero mean", prof)
    if slope < low:
        return CoboundaryVerdict("Coboundary", slope, "bounded growth", prof)
    if slope > high:
        return CoboundaryVerdict("NotCoboundary", slope, "unbounded growth", prof)
    return CoboundaryVerdict("Inconclusive", slope, "slope between thresholds", prof)


@dataclass(frozen=True)
class TransferSolution:
    """Mean-zero ``alpha`` on a uniform ``grid^4`` grid with ``f ~ alpha o T - alpha``."""
    alpha: np.ndarray
    residual_l2: float
    grid: int
    band: int
    regularization: float
    retries: int

    def at(self, x) -> np.ndarray:
        """Trigonometric interpolation of ``alpha`` at arbitrary points."""
        coef = np.fft.fftn(self.alpha) / self.alpha.size
        freqs = np.fft.fftfreq(self.grid, 1.0 / self.grid)
        keep = np.argwhere(np.abs(coef) > 0)
        m = freqs[keep]
        c = coef[tuple(keep.T)]
        return np.real(np.exp(2j * np.pi * np.asarray(x, dtype=float) @ m.T) @ c)


def solve_transfer(f: Observable, sys: KummerSystem, grid: int = 32,
                   regularization: float = 1e-10) -> TransferSolution:
    """Regularised least squares for ``f = alpha o T - alpha`` in a Fourier basis.

    ``f`` is sampled on the grid and transformed.  The unknowns are the
    coefficients of ``alpha`` with ``0 < |m|_inf <= K``, where ``K`` is chosen so
    that the image modes ``A^T m`` stay inside the grid's band; composition with
    ``T`` then acts exactly, mode by mode.  ``residual_l2`` includes the parts of
    ``f`` that no such ``alpha`` can reach.
    """
    if grid < 16:
        raise ValueError("grid must be >= 16")
    G = grid
    x = torus_grid(G)
    fhat = np.fft.fftn(f(x).reshape((G,) * 4)) / G ** 4
    At = sys.action.T
    spread = int(np.abs(At).sum(axis=1).max())
    K = (G // 2 - 1) // spread
    rng_ = np.arange(-K, K + 1)
    unknown = np.stack(np.meshgrid(rng_, rng_, rng_, rng_, indexing="ij"), -1).reshape(-1, 4)
    unknown = unknown[unknown.any(axis=1)]
    images = unknown @ At.T
    # equation rows: every FFT mode; columns: unknowns
    def flat(m):
        return np.ravel_multi_index(tuple((m % G).T), (G,) * 4)
    n_unk = len(unknown)
    cols = np.concatenate([np.arange(n_unk), np.arange(n_unk)])
    rows_full = np.concatenate([flat(images), flat(unknown)])
    vals = np.concatenate([np.ones(n_unk), -np.ones(n_unk)])
    used, rows = np.unique(rows_full, return_inverse=True)
    B = sp.csr_matrix((vals, (rows, cols)), shape=(len(used), n_unk))
    rhs = fhat.ravel()[used]
    BhB = (B.conj().T @ B).tocsc()
    Bhf = B.conj().T @ rhs
    reg = regularization
    retries = 0
    while True:
        A = BhB + reg * sp.identity(n_unk, format="csc")
        try:
            coef = spla.spsolve(A, Bhf)
            if np.all(np.isfinite(coef)):
                break
        except RuntimeError:
            pass
        retries += 1
        reg = max(reg * 100, 1e-12)
        if retries > 8:
            raise np.linalg.LinAlgError("normal equations stayed singular")
    full = np.zeros(G ** 4, dtype=complex)
    full[flat(unknown)] = coef
    alpha = np.real(np.fft.ifftn(full.reshape((G,) * 4)) * G ** 4)
    resid = fhat.ravel().copy()
    resid[used] -= B @ coef
    residual = float(np.sqrt(np.sum(np.abs(resid) ** 2)))
    return TransferSolution(alpha, residual, G, K, reg, retries)


@dataclass(frozen=True)
class DeltaRecovery:
    delta: float
    alpha_u: TransferSolution
    alpha_s: TransferSolution


def recover_delta(field: MetricField, grid: int = 32, regularization: float = 1e-10) -> DeltaRecovery:
    """Solve for ``alpha_u``, ``alpha_s`` and report ``delta = mean(alpha_u + alpha_s - beta)``."""
    sys = field.system
    su = solve_transfer(CocycleObservable(field, "rho_u-h/2"), sys, grid, regularization)
    ss = solve_transfer(CocycleObservable(field, "rho_s+h/2"), sys, grid, regularization)
    b = CocycleObservable(field, "beta")(torus_grid(grid)).reshape((grid,) * 4)
    return DeltaRecovery(float(np.mean(su.alpha + ss.alpha - b)), su, ss)


def _log_mean_exp(v: np.ndarray):
    """``log mean e^v`` and its delta-method standard error."""
    n = v.shape[-1]
    lme = logsumexp(v, axis=-1) - np.log(n)
    w = np.exp(v - lme[..., None])  # e^v / mean e^v
    se = w.std(axis=-1, ddof=1) / np.sqrt(n)
    return lme, se


@dataclass(frozen=True)
class MomentTable:
    """Per ``N``: ``log`` of the estimates of ``int e^{S_N f}`` and ``int e^{gamma |S_N f|}``
    with standard errors of those logs."""
    N: np.ndarray
    log_exp: np.ndarray
    log_exp_se: np.ndarray
    log_gamma: np.ndarray
    log_gamma_se: np.ndarray
    gamma: float
    bounded: bool
    trend: float

    @property
    def exp_moment(self) -> np.ndarray:
        return np.exp(self.log_exp)

    @property
    def gamma_moment(self) -> np.ndarray:
        return np.exp(self.log_gamma)


def exp_moment_check(f: Observable, sys: KummerSystem, gamma: float, N_max: int, seed: int,
                     samples: int, certify: bool = True) -> MomentTable:
    """Exponential moments of Birkhoff sums, computed in log space.

    ``bounded`` reports whether the gamma column shows no upward trend: the rise of
    its log over the second half of ``N`` must stay within three standard errors.
    In certification mode ``gamma`` must lie in ``(0, 1/6)``.
    """
    if certify and not 0 < gamma < GAMMA_MAX:
        raise ValueError(f"gamma must lie in (0, 1/6) for certification, got {gamma}")
    x = sample_volume(seed, samples)
    S = _birkhoff_table(f, sys, x, N_max)
    le, lse = _log_mean_exp(S)
    lg, lgse = _log_mean_exp(gamma * np.abs(S))
    half = np.arange(N_max) >= N_max // 2
    Ns = np.arange(1, N_max + 1)
    if half.sum() >= 2:
        slope = float(np.polyfit(Ns[half], lg[half], 1)[0])
    else:
        slope = 0.0
    rise = slope * (Ns[half][-1] - Ns[half][0]) if half.any() else 0.0
    bounded = bool(rise <= 3 * float(lgse[half].max() if half.any() else 0.0) + 1e-12)
    return MomentTable(Ns, le, lse, lg, lgse, float(gamma), bounded, slope)


def telescoping_bound(psi: TrigObservable, gamma: float) -> float:
    """``e^{2 gamma sup|psi|}`` bounds ``e^{gamma |S_N f|}`` pointwise for ``f = psi o T - psi``."""
    return float(np.exp(2 * gamma * psi.sup_bound()))


@dataclass(frozen=True)
class TailTable:
    L: np.ndarray
    empirical: np.ndarray
    bound: np.ndarray
    stderr: np.ndarray
    C: float
    passed: bool


def tail_bound_check(f: Observable, sys: KummerSystem, L, N: int, seed: int, samples: int) -> TailTable:
    """Empirical ``mu(S_N^+ f >= L)`` against the Markov bound ``C e^{-L}``.

    ``C = max_{n <= N} int e^{S_n f} + 1`` is taken from the same samples, using
    ``e^{s^+} <= e^s + 1``.  Each row passes if the empirical tail is at most the
    bound plus three binomial standard errors.
    """
    L = np.atleast_1d(np.asarray(L, dtype=float))
    x = sample_volume(seed, samples)
    S = _birkhoff_table(f, sys, x, N)
    le, _ = _log_mean_exp(S)
    C = float(np.exp(le.max()) + 1.0)
    sp_ = np.maximum(S[-1], 0.0)
    emp = np.array([(sp_ >= l).mean() for l in L])
    se = np.sqrt(emp * (1 - emp) / samples)
    bound = C * np.exp(-L)
    return TailTable(L, emp, bound, se, C, bool(np.all(emp <= bound + 3 * se)))
