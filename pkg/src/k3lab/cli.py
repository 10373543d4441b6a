"""Command-line entry point: one subcommand per verification.

Every run prints a one-line verdict and writes a CSV or JSON artifact.  Exit
status is 0 when every contracted tolerance passes, 1 on a contract failure and
2 on a usage or configuration error (in which case nothing is written).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import brody, cobsolve, cocycle, curvature, hermspace, torus, wehler
from .formats import (FormatError, atomic_write, csv_text, json_text, parse_matrix,
                      read_disc_map, read_key_values, read_metric, read_surface, read_system)

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

CONFIG_KEYS = {"matrix", "system", "metric", "N", "grid", "samples", "seed", "tol", "gamma",
               "out", "format", "observable", "surface", "disc", "degree", "step", "h1", "h2"}

OBSERVABLES = ("zero", "constant", "cosine", "planted", "rho")


class UsageError(Exception):
    pass


@dataclass
class Outcome:
    check: str
    passed: bool
    statistic: float
    threshold: float
    columns: list
    rows: list
    details: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)


# ---- argument handling ------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--matrix", nargs=4, metavar=("A", "B", "C", "D"), help="integer matrix, row-major")
    p.add_argument("--system", help="system file with 'matrix = a b c d' and 'seed = n'")
    p.add_argument("--metric", help="metric potential file ('mode m1 m2 m3 m4 coeff' lines)")
    p.add_argument("--N", type=int)
    p.add_argument("--grid", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--out", help="artifact path (default: <subcommand>.<format>)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--observable", choices=OBSERVABLES)
    p.add_argument("--surface", help="surface file with 27 'i j k value' lines")
    p.add_argument("--disc", help="disc map file")
    p.add_argument("--degree", type=int)
    p.add_argument("--step", type=float)
    p.add_argument("--h1", nargs=4, type=float, metavar=("A", "BRE", "BIM", "D"))
    p.add_argument("--h2", nargs=4, type=float, metavar=("A", "BRE", "BIM", "D"))


DEFAULTS = {
    "dist": dict(tol=1e-10),
    "project": dict(tol=1e-12),
    "verify-flat": dict(N=10, samples=1000, seed=0, tol=1e-10),
    "verify-jensen": dict(N=3, grid=16, seed=0, tol=1e-8),
    "verify-cocycle": dict(N=10, samples=1000, seed=0, tol=1e-10),
    "solve-coboundary": dict(grid=32, samples=1000, N=64, seed=0, tol=1e-6, observable="planted"),
    "exp-moments": dict(N=100, samples=2000, seed=0, gamma=0.15, observable="planted"),
    "tail-check": dict(N=50, samples=5000, seed=0, observable="cosine"),
    "brody": dict(grid=256, seed=0, degree=10, tol=1e-6),
    "cutoff": dict(step=1e-3, tol=1e-5),
    "curvature": dict(samples=5, seed=0, step=1e-2, tol=1e-4),
    "wehler-entropy": dict(tol=1e-9),
    "wehler-lyapunov": dict(N=10_000, samples=10, seed=0, tol=0.05),
    "wehler-volume": dict(N=1000, seed=0, tol=1e-6),
}

COMMON_DEFAULTS = dict(matrix=["2", "1", "1", "1"], format="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="k3lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "dist": "hyperbolic distance and wedge pairing of two forms",
        "project": "projection of a form onto the diagonal geodesic",
        "verify-flat": "expansion factor equals N h / 2 for the flat metric",
        "verify-jensen": "grid quadrature of the wedge pairing against its cohomological value",
        "verify-cocycle": "coboundary and distance identities along orbits",
        "solve-coboundary": "coboundary verdict and transfer-equation solve",
        "exp-moments": "exponential moments of Birkhoff sums",
        "tail-check": "Markov tail bound for Birkhoff sums",
        "brody": "Brody reparametrisation of a polynomial disc map",
        "cutoff": "radial cutoff Laplacian, closed form and finite differences",
        "curvature": "mixed curvature components of split metrics",
        "wehler-entropy": "entropy from the action on cohomology",
        "wehler-lyapunov": "Lyapunov exponent estimates along seeded orbits",
        "wehler-volume": "invariance of the holomorphic volume form",
    }
    for name, text in helps.items():
        _add_common(sub.add_parser(name, help=text, description=text))
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the config file and explicit flags; validate ranges."""
    cfg = dict(COMMON_DEFAULTS)
    cfg.update(DEFAULTS[args.command])
    if args.config:
        try:
            raw = read_key_values(args.config, allowed=CONFIG_KEYS)
        except (FormatError, OSError) as exc:
            raise UsageError(str(exc)) from exc
        cfg.update(_coerce(raw))
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    if cfg.get("system"):
        try:
            sysfile = read_system(cfg["system"])
        except (FormatError, OSError) as exc:
            raise UsageError(str(exc)) from exc
        if args.matrix is None and "matrix" in sysfile:
            cfg["matrix"] = list(sysfile["matrix"].ravel())
        if args.seed is None and "seed" in sysfile:
            cfg["seed"] = sysfile["seed"]
    _validate(cfg)
    return cfg


def _coerce(raw: dict) -> dict:
    ints = {"N", "grid", "samples", "seed", "degree"}
    floats = {"tol", "gamma", "step"}
    out = {}
    for k, v in raw.items():
        try:
            if k in ints:
                out[k] = int(v)
            elif k in floats:
                out[k] = float(v)
            elif k in ("matrix",):
                out[k] = v.split()
            elif k in ("h1", "h2"):
                out[k] = [float(t) for t in v.split()]
            else:
                out[k] = v
        except ValueError as exc:
            raise UsageError(f"config value for {k!r} is invalid: {v!r}") from exc
    return out


def _validate(cfg: dict):
    def need(cond, msg):
        if not cond:
            raise UsageError(msg)
    for key, lo in (("N", 0), ("grid", 2), ("samples", 1), ("degree", 1)):
        if key in cfg and cfg[key] is not None:
            need(cfg[key] >= lo, f"{key} must be >= {lo}")
    if cfg.get("seed") is not None:
        need(0 <= cfg["seed"] < 2 ** 64, "seed must be a 64-bit unsigned integer")
    for key in ("tol", "gamma", "step"):
        if cfg.get(key) is not None:
            need(cfg[key] > 0, f"{key} must be positive")
    need(cfg.get("format") in ("csv", "json"), "format must be csv or json")
    if cfg.get("observable") is not None:
        need(cfg["observable"] in OBSERVABLES, f"observable must be one of {OBSERVABLES}")
    try:
        cfg["matrix"] = parse_matrix(cfg["matrix"])
    except FormatError as exc:
        raise UsageError(str(exc)) from exc


def _system(cfg):
    try:
        return torus.make_system(cfg["matrix"])
    except torus.NotHyperbolicError as exc:
        raise UsageError(str(exc)) from exc


def _field(cfg, sys_):
    if not cfg.get("metric"):
        return cocycle.MetricField.flat(sys_)
    try:
        return read_metric(cfg["metric"], sys_)
    except (FormatError, OSError) as exc:
        raise UsageError(str(exc)) from exc
    except cocycle.EvaluationError as exc:
        raise UsageError(f"metric file: {exc}") from exc


def _form(vals, name):
    if vals is None:
        raise UsageError(f"--{name} is required")
    a, bre, bim, d = vals
    h = hermspace.HermitianForm(a, complex(bre, bim), d)
    if not h.is_positive():
        raise UsageError(f"--{name} is not positive definite")
    return h


# ---- subcommands ------------------------------------------------------------------

def cmd_dist(cfg) -> Outcome:
    h1 = _form(cfg.get("h1"), "h1").normalized()
    h2 = _form(cfg.get("h2"), "h2").normalized()
    d = float(hermspace.dist(h1, h2))
    w = float(hermspace.wedge_ratio(h1, h2))
    err = abs(w - 2 * np.cosh(d)) / w
    return Outcome("dist", err <= cfg["tol"], err, cfg["tol"],
                   ["dist", "wedge_ratio", "consistency_error"], [[d, w, err]],
                   notes=[f"dist = {d:.12g}"])


def cmd_project(cfg) -> Outcome:
    h = _form(cfg.get("h1"), "h1").normalized()
    p = hermspace.project_to_geodesic(h)
    again = hermspace.project_to_geodesic(p)
    expected = np.sqrt(h.a / h.d)
    err = max(abs(float(p.a) - expected), abs(float(again.a) - float(p.a)), abs(complex(p.b)))
    return Outcome("project", err <= cfg["tol"], err, cfg["tol"],
                   ["a", "d", "idempotence_error"], [[float(p.a), float(p.d), err]],
                   notes=[f"projection = diag({float(p.a):.12g}, {float(p.d):.12g})"])


SWEEP_COLUMNS = ["n", "x1re", "x1im", "x2re", "x2im", "lambdaN", "rho_u", "rho_s", "beta", "residual"]


def cmd_verify_flat(cfg) -> Outcome:
    sys_ = _system(cfg)
    fld = cocycle.MetricField.flat(sys_)
    x = torus.sample_volume(cfg["seed"], cfg["samples"])
    rows, worst = [], 0.0
    for n in range(1, cfg["N"] + 1):
        rec = cocycle.rho_and_beta(fld, x, N=n)
        lam = rec.lambda_N
        res = lam - n * sys_.h / 2
        worst = max(worst, float(np.max(np.abs(res))))
        rows += [[n, *xi, l, ru, rs, b, r] for xi, l, ru, rs, b, r in
                 zip(x, lam, rec.rho_u, rec.rho_s, rec.beta, res)]
    return Outcome("verify-flat", worst < cfg["tol"], worst, cfg["tol"], SWEEP_COLUMNS, rows,
                   details={"h": sys_.h})


def cmd_verify_jensen(cfg) -> Outcome:
    sys_ = _system(cfg)
    f1 = _field(cfg, sys_)
    rng = np.random.default_rng(cfg["seed"])
    rows, worst = [], 0.0
    try:
        for n in range(1, cfg["N"] + 1):
            f2 = cocycle.random_field(sys_, rng, level=n * sys_.h, max_mode=max(1, f1.max_mode()))
            r = cocycle.jensen_integral_check(f1, f2, cfg["grid"])
            err = abs(r.integral - r.target)
            worst = max(worst, err)
            rows.append([n, r.integral, r.target, err, r.jensen_gap])
    except cocycle.AliasingError as exc:
        raise UsageError(str(exc)) from exc
    return Outcome("verify-jensen", worst < cfg["tol"], worst, cfg["tol"],
                   ["N", "integral", "target", "abs_error", "jensen_gap"], rows)


def cmd_verify_cocycle(cfg) -> Outcome:
    sys_ = _system(cfg)
    fld = _field(cfg, sys_)
    x = torus.sample_volume(cfg["seed"], cfg["samples"])
    res = cocycle.coboundary_identity_residual(fld, x)
    rec = cocycle.rho_and_beta(fld, x, N=cfg["N"])
    worst_id = float(np.max(np.abs(res)))
    worst_dist, worst_excess = 0.0, -np.inf
    for n in range(1, cfg["N"] + 1):
        chk = cocycle.dist_identity_residual(fld, x, n)
        worst_dist = max(worst_dist, float(chk.residual.max()))
        worst_excess = max(worst_excess, float(chk.excess.max()))
    rows = [[cfg["N"], *xi, l, ru, rs, b, r] for xi, l, ru, rs, b, r in
            zip(x, rec.lambda_N, rec.rho_u, rec.rho_s, rec.beta, res)]
    tol = cfg["tol"]
    passed = worst_id < tol and worst_dist < 10 * tol and worst_excess <= 10 * tol
    return Outcome("verify-cocycle", passed, max(worst_id, worst_dist / 10), tol, SWEEP_COLUMNS, rows,
                   details={"coboundary_residual": worst_id, "distance_residual": worst_dist,
                            "projection_excess": worst_excess, "distance_threshold": 10 * tol})


PLANTED_PSI = cobsolve.TrigObservable.cosine([1, 0, 1, 0], 0.2)


def _observable(cfg, sys_):
    name = cfg["observable"]
    if name == "zero":
        return cobsolve.TrigObservable.constant(0.0)
    if name == "constant":
        return cobsolve.TrigObservable.constant(0.3)
    if name == "cosine":
        return cobsolve.TrigObservable.cosine([1, 0, 0, 0])
    if name == "planted":
        return cobsolve.planted_coboundary(PLANTED_PSI, sys_)
    return cobsolve.CocycleObservable(_field(cfg, sys_), "rho_u-rho_s-h")


def cmd_solve_coboundary(cfg) -> Outcome:
    sys_ = _system(cfg)
    f = _observable(cfg, sys_)
    verdict = cobsolve.is_coboundary(f, sys_, cfg["seed"], max(cfg["samples"], cobsolve.MIN_ORBITS),
                                     max(cfg["N"], 4))
    try:
        sol = cobsolve.solve_transfer(f, sys_, max(cfg["grid"], 16))
    except np.linalg.LinAlgError as exc:
        return Outcome("solve-coboundary", False, float("inf"), cfg["tol"], ["error"], [[str(exc)]])
    fnorm = float(np.sqrt(np.mean(f(cocycle.torus_grid(sol.grid)) ** 2)))
    rel = sol.residual_l2 / fnorm if fnorm > 0 else sol.residual_l2
    details = {"classification": verdict.verdict, "growth_slope": verdict.slope,
               "reason": verdict.reason, "residual_l2": sol.residual_l2, "band": sol.band,
               "regularization": sol.regularization, "alpha_sup": float(np.abs(sol.alpha).max())}
    if cfg["observable"] == "planted":
        x = cocycle.torus_grid(sol.grid)
        psi = PLANTED_PSI(x).reshape(sol.alpha.shape)
        details["planted_relative_error"] = float(np.linalg.norm(sol.alpha - psi) / np.linalg.norm(psi))
    rows = [[n, l, s] for n, l, s in zip(verdict.profile.N, verdict.profile.l2, verdict.profile.stderr)] \
        if verdict.profile is not None else []
    return Outcome("solve-coboundary", rel <= cfg["tol"], rel, cfg["tol"],
                   ["N", "l2_birkhoff", "stderr"], rows, details=details,
                   notes=[f"classification: {verdict.verdict} (slope {verdict.slope:.3f}, {verdict.reason})"])


def cmd_exp_moments(cfg) -> Outcome:
    sys_ = _system(cfg)
    f = _observable(cfg, sys_)
    try:
        t = cobsolve.exp_moment_check(f, sys_, cfg["gamma"], cfg["N"], cfg["seed"], cfg["samples"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    passed, stat, thr = t.bounded, float(t.gamma_moment.max()), float("nan")
    if cfg["observable"] == "planted":
        thr = cobsolve.telescoping_bound(PLANTED_PSI, cfg["gamma"])
        passed = passed and stat <= thr
    rows = [[n, np.exp(a), np.exp(a) * sa, np.exp(g), np.exp(g) * sg]
            for n, a, sa, g, sg in zip(t.N, t.log_exp, t.log_exp_se, t.log_gamma, t.log_gamma_se)]
    return Outcome("exp-moments", passed, stat, thr,
                   ["N", "exp_moment", "exp_moment_se", "gamma_moment", "gamma_moment_se"], rows,
                   details={"gamma": cfg["gamma"], "trend": t.trend, "bounded": t.bounded})


def cmd_tail_check(cfg) -> Outcome:
    sys_ = _system(cfg)
    f = _observable(cfg, sys_)
    L = np.linspace(0.0, 10.0, 21)
    t = cobsolve.tail_bound_check(f, sys_, L, cfg["N"], cfg["seed"], cfg["samples"])
    margin = float(np.max(t.empirical - t.bound - 3 * t.stderr))
    rows = [[l, e, b, s] for l, e, b, s in zip(t.L, t.empirical, t.bound, t.stderr)]
    return Outcome("tail-check", t.passed, margin, 0.0, ["L", "empirical_tail", "bound", "stderr"], rows,
                   details={"C": t.C})


def cmd_brody(cfg) -> Outcome:
    if cfg.get("disc"):
        try:
            xi = read_disc_map(cfg["disc"])
        except (FormatError, OSError) as exc:
            raise UsageError(str(exc)) from exc
    else:
        xi = brody.DiscMap.random(np.random.default_rng(cfg["seed"]), cfg["degree"])
    omega = hermspace.HermitianForm.identity()
    try:
        r = brody.brody_reparametrize(xi, omega, cfg["grid"])
    except brody.ConstantMapError as exc:
        raise UsageError(str(exc)) from exc
    except brody.CertificationError as exc:
        return Outcome("brody", False, float("inf"), cfg["tol"], ["error"], [[str(exc)]])
    stat = max(abs(r.speed_at_zero - 1), r.sup_half - 2)
    return Outcome("brody", stat <= cfg["tol"], stat, cfg["tol"],
                   ["y_re", "y_im", "a", "radius", "speed_at_zero", "sup_half_disc"],
                   [[r.y.real, r.y.imag, r.a, r.radius, r.speed_at_zero, r.sup_half]])


def cmd_cutoff(cfg) -> Outcome:
    b = brody.cutoff_bound_check()
    rows = []
    worst = 0.0
    for r in (1.0, 10.0, 100.0):
        p = brody.CutoffProfile(r)
        for t in (1.25, 1.5, 1.75):
            z = t * r * np.exp(0.3j)
            exact = float(brody.cutoff_laplacian(p, z))
            fd = float(brody.cutoff_laplacian_fd(p, z, cfg["step"] * r))
            err = abs(fd - exact) / abs(exact)
            worst = max(worst, err)
            rows.append([r, t, exact, fd, err, b.scaled_sup[r]])
    passed = worst < cfg["tol"] and b.spread < 1e-9 and max(b.scaled_sup.values()) <= b.constant
    return Outcome("cutoff", passed, worst, cfg["tol"],
                   ["r", "abs_z_over_r", "closed_form", "finite_difference", "rel_error", "scaled_sup"], rows,
                   details={"constant": b.constant, "scaled_sup_spread": b.spread})


def cmd_curvature(cfg) -> Outcome:
    rng = np.random.default_rng(cfg["seed"])
    rows, worst, orders = [], 0.0, []
    for i in range(cfg["samples"]):
        a = curvature.TrigPoly.random_positive(rng)
        b = curvature.TrigPoly.random_positive(rng)
        z = rng.uniform(0, 1, 2) + 1j * rng.uniform(0, 1, 2)
        try:
            r = curvature.split_metric_curvature(a, b, z, cfg["step"])
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        worst = max(worst, r.max_abs("extrapolated"))
        orders.append(r.order)
        rows.append([i, r.max_abs("coarse"), r.max_abs("fine"), r.max_abs("extrapolated"), r.order])
    order_ok = all(abs(o - 2) <= 0.3 for o in orders)
    return Outcome("curvature", worst < cfg["tol"] and order_ok, worst, cfg["tol"],
                   ["sample", "max_abs_step", "max_abs_half_step", "max_abs_extrapolated", "order"], rows)


def _surface(cfg):
    if not cfg.get("surface"):
        return wehler.WehlerSurface.default()
    try:
        return read_surface(cfg["surface"])
    except (FormatError, OSError) as exc:
        raise UsageError(str(exc)) from exc


def cmd_wehler_entropy(cfg) -> Outcome:
    ce = wehler.cohomology_entropy(_surface(cfg))
    target = 9 + 4 * np.sqrt(5)
    err = abs(ce.spectral_radius - target)
    ok = all(wehler.is_isometric_involution(S) for S in ce.reflections) and ce.trace == 17 and ce.det == -1
    poly = " ".join(f"{c:+d}" for c in ce.charpoly)
    return Outcome("wehler-entropy", ok and err < cfg["tol"], err, cfg["tol"],
                   ["h", "spectral_radius", "trace", "det", "charpoly"],
                   [[ce.h, ce.spectral_radius, ce.trace, ce.det, poly]],
                   details={"product": ce.product.tolist()},
                   notes=[f"h = {ce.h:.6f}", f"characteristic polynomial coefficients: {poly}"])


def cmd_wehler_lyapunov(cfg) -> Outcome:
    if cfg["N"] < 1000:
        raise UsageError("N must be >= 1000")
    seeds = [cfg["seed"] + k for k in range(cfg["samples"])]
    r = wehler.lyapunov_estimate(_surface(cfg), seeds, cfg["N"])
    est = r.estimate
    spread = float((est.max() - est.min()) / est.mean())
    rows = [[s, e, int(k)] for s, e, k in zip(seeds, est, r.restarts)]
    return Outcome("wehler-lyapunov", bool(est.min() > 0) and spread <= cfg["tol"], spread, cfg["tol"],
                   ["seed", "estimate", "restarts"], rows,
                   details={"windows": r.windows, "profile": r.profile, "slack": r.slack,
                            "mean_estimate": float(est.mean())},
                   notes=[f"mean exponent {est.mean():.6f}"])


def cmd_wehler_volume(cfg) -> Outcome:
    r = wehler.volume_invariance_check(_surface(cfg), cfg["seed"], cfg["N"])
    return Outcome("wehler-volume", r.max_log_jacobian < cfg["tol"] and r.checked > 0,
                   r.max_log_jacobian, cfg["tol"], ["checked", "skipped", "max_abs_log_jacobian"],
                   [[r.checked, r.skipped, r.max_log_jacobian]])


COMMANDS = {
    "dist": cmd_dist, "project": cmd_project, "verify-flat": cmd_verify_flat,
    "verify-jensen": cmd_verify_jensen, "verify-cocycle": cmd_verify_cocycle,
    "solve-coboundary": cmd_solve_coboundary, "exp-moments": cmd_exp_moments,
    "tail-check": cmd_tail_check, "brody": cmd_brody, "cutoff": cmd_cutoff,
    "curvature": cmd_curvature, "wehler-entropy": cmd_wehler_entropy,
    "wehler-lyapunov": cmd_wehler_lyapunov, "wehler-volume": cmd_wehler_volume,
}


def write_artifact(outcome: Outcome, cfg: dict, path: Path):
    verdict = "PASS" if outcome.passed else "FAIL"
    if cfg["format"] == "csv":
        text = csv_text(outcome.columns, outcome.rows)
    else:
        record = {"check": outcome.check, "verdict": verdict, "statistic": outcome.statistic,
                  "threshold": outcome.threshold, "seed": cfg.get("seed"),
                  "columns": outcome.columns, "rows": outcome.rows, "details": outcome.details}
        text = json_text(record)
    atomic_write(path, text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        cfg = resolve(args)
        outcome = COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"k3lab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    path = Path(cfg.get("out") or f"{args.command}.{cfg['format']}")
    write_artifact(outcome, cfg, path)
    verdict = "PASS" if outcome.passed else "FAIL"
    print(f"{outcome.check}: {verdict} statistic={outcome.statistic:.6g} "
          f"threshold={outcome.threshold:.6g} artifact={path}")
    for note in outcome.notes:
        print(f"  {note}")
    return EXIT_PASS if outcome.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
