"""Pass/fail evaluation of the acceptance criteria from experiment reports."""
from __future__ import annotations

import math
import time

import numpy as np

from ..asymptotics import AngularProfile
from ..eigensolve import build_constraints, quarter_turn
from ..gauge import multi_potential, theta_grad_fd
from ..geometry import PoleConfig, crack_polylines, default_domain, jump_matrix
from ..mesh import generate
from .report import Criterion


def disk_oracle(rep, tol: float = 0.01, max_seconds: float = 120.0) -> Criterion:
    err = rep.errors
    ok = rep.monotone and err[-1] < tol and max(rep.seconds) < max_seconds
    return Criterion(1, "disk oracle", ok,
                     {"errors": err, "observed_order": rep.observed_order, "max_seconds": max(rep.seconds)},
                     f"final error < {tol}, monotone decrease, < {max_seconds} s per level")


def gauge_equivalence(rep, tol: float = 0.01) -> Criterion:
    e = rep.max_relative_error
    return Criterion(2, "gauge equivalence", e < tol, {"max_relative_error": e, "configs": len(rep.configs)},
                     f"crack pairs match magnetic eigenvalues within {tol}")


def rate(table, slope_tol: float = 0.15, ratio_tol: float = 0.20) -> Criterion:
    target = table.target_slope
    slope_ok = abs(table.slope - target) <= slope_tol * target
    ratio = table.rows[-1].ratio
    ratio_ok = abs(ratio - 1) <= ratio_tol
    return Criterion(3, "rate check", bool(slope_ok and ratio_ok),
                     {"slope": table.slope, "target_slope": target, "slope_ok": bool(slope_ok),
                      "ratio": ratio, "ratio_ok": bool(ratio_ok)},
                     f"slope within {slope_tol:.0%} of 2|m+rho|, ratio within {ratio_tol:.0%} of 1")


def precise_coefficient(table, tol: float = 0.25) -> Criterion:
    pr = [r.precise_ratio for r in table.rows]
    dist = [abs(p - 1) for p in pr[-3:]]
    improving = all(b < a for a, b in zip(dist[:-1], dist[1:]))
    ok = np.isfinite(pr[-1]) and abs(pr[-1] - 1) <= tol and improving
    return Criterion(4, "precise coefficient", bool(ok), {"precise_ratio": pr, "improving": bool(improving)},
                     f"within {tol:.0%} of 1, improving over the last three ladder points")


def signs(rep_i, rep_ii, l_tol: float = 1e-3) -> Criterion:
    ok = rep_i.signs_ok and rep_ii.signs_ok and rep_i.L_ratio < l_tol and rep_ii.L_ratio < l_tol
    return Criterion(5, "sign predictions", bool(ok),
                     {"E_i": rep_i.E, "E_ii": rep_ii.E, "signs_i": bool(rep_i.signs_ok),
                      "signs_ii": bool(rep_ii.signs_ok), "L_ratio_i": rep_i.L_ratio, "L_ratio_ii": rep_ii.L_ratio},
                     f"case i negative, case ii positive, |L| < {l_tol}|E|")


def energy_scaling(table, stable_tol: float = 0.10, exterior_tol: float = 0.20) -> Criterion:
    a, b = table.rows[-2].E_scaled, table.rows[-1].E_scaled
    E = table.exterior.get("E", float("nan"))
    stable = abs(a - b) <= stable_tol * abs(b)
    close = abs(b - E) <= exterior_tol * abs(E)
    return Criterion(6, "energy scaling", bool(stable and close),
                     {"last_two": [a, b], "exterior_E": E, "stable": bool(stable), "close": bool(close)},
                     f"last two within {stable_tol:.0%}, within {exterior_tol:.0%} of exterior energy")


def hardy(reports) -> Criterion:
    ok = all(r.passed == r.count for r in reports)
    return Criterion(7, "Hardy suite", ok, {f"rho={r.rho}": f"{r.passed}/{r.count}" for r in reports},
                     "all random fields satisfy the inequality")


def blowup(rep, tol: float = 0.25) -> Criterion:
    ok = rep.decreasing and abs(rep.grad_ratio - 1) <= tol
    return Criterion(8, "blow-up", bool(ok),
                     {"discrepancy": rep.discrepancy, "decreasing": bool(rep.decreasing), "grad_ratio": rep.grad_ratio},
                     f"strictly decreasing over the last three, gradient ratio within {tol:.0%} of 1")


# ---------------------------------------------------------------------------
# structural invariants


def structural_checks(seed: int = 0, n_points: int = 200) -> dict:
    """Maximum violations of the exact structural identities on a small configuration."""
    rng = np.random.default_rng(seed)
    cfg = PoleConfig.from_lists([0.9, 0.6], [-1.0, 2.0], [0.2, 0.35])
    eps = 0.3
    out = {}

    # rotations are orthogonal and the constraint basis has orthogonal columns
    R = [jump_matrix(r) for r in rng.uniform(-2, 2, 20)]
    out["rotation_orthogonality"] = max(float(np.max(np.abs(M @ M.T - np.eye(2)))) for M in R)
    mesh = generate(default_domain(), crack_polylines(cfg, default_domain(), eps), 0.25)
    cm = build_constraints(mesh)
    G = (cm.T.T @ cm.T).toarray()
    out["constraint_orthogonality"] = float(np.max(np.abs(G - np.diag(np.diag(G)))))

    # (v, w) -> (-w, v) maps the constrained space into itself
    x = rng.standard_normal(2 * cm.n_free)
    lhs = quarter_turn(cm.n_copies) @ (cm.T @ x)
    rhs = cm.T @ (quarter_turn(cm.n_free) @ x)
    out["quarter_turn_symmetry"] = float(np.max(np.abs(lhs - rhs)))

    # profiles jump by exp(i 2 pi rho_j) across each ray and close up around the circle
    worst = 0.0
    for conf in (cfg, PoleConfig.from_lists([0.5, 0.7], [0.4, -2.2], [0.3, 0.2])):
        for m in (0, 1, -1):
            if conf.half_integer and m < 0:
                continue
            prof = AngularProfile(m, 1.3, 0.37, conf)
            d = 1e-10
            for thr, rho in zip(conf.thresholds(), conf.rhos):
                t = np.array([thr - d, thr + d])
                z = prof.complex_value(np.column_stack([np.cos(t), np.sin(t)]))
                worst = max(worst, abs(z[1] - np.exp(2j * math.pi * rho) * z[0]) / abs(z[0]))
            t = np.array([2 * math.pi - d, d])
            z = prof.complex_value(np.column_stack([np.cos(t), np.sin(t)]))
            worst = max(worst, abs(z[1] - z[0]) / abs(z[0]))
    out["profile_jump_closure"] = float(worst)

    # grad Theta_eps = A_eps away from the cracks
    p = rng.uniform(-1.0, 1.0, (n_points, 2))
    p = p[np.linalg.norm(p, axis=1) > 0.05]
    A = multi_potential(cfg, p, eps)
    G = theta_grad_fd(cfg, eps, p)
    out["theta_gradient"] = float(np.max(np.linalg.norm(G - A, axis=1) / np.linalg.norm(A, axis=1)))
    return out


def structural(tol: float = 1e-6, max_seconds: float = 60.0) -> Criterion:
    t0 = time.perf_counter()
    checks = structural_checks()
    dt = time.perf_counter() - t0
    ok = all(v < tol for v in checks.values()) and dt < max_seconds
    return Criterion(9, "structural invariants", ok, dict(checks, seconds=dt),
                     f"all identities below {tol:g}, runtime < {max_seconds:.0f} s")
