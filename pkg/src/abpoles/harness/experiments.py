"""Numerical experiments: disk oracle, gauge equivalence, eigenvalue-shift ladders, signs, blow-up."""
from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats
from scipy.optimize import brentq

from .. import kernels
from ..asymptotics import AngularProfile, default_radii, fit_profile, fit_vanishing_order
from ..eigensolve import (
    SIMPLE_GAP,
    EigenSolveError,
    assemble_crack,
    assemble_magnetic,
    cluster,
    kreal_normalize,
    normalize_pair,
    solve_lowest,
)
from ..energy import (
    ExteriorExtrapolation,
    L_limit_profile,
    harmonic_extension,
    exterior_energy,
    hardy_check,
    random_constrained_fields,
    predicted_shift,
    solve_exterior,
    solve_interior,
)
from ..geometry import DomainSpec, Pole, PoleConfig, crack_polylines, default_domain, disk_polygon
from ..mesh import CrackMesh, Locator, annulus_mesh, recommended_grade, split, triangulate
from .oracle import disk_eigenvalue

DEFAULT_EPS = (0.2, 0.141, 0.1, 0.0707, 0.05)
DEFAULT_H = (0.1, 0.07, 0.05)
DEFAULT_TRUNC = (8.0, 16.0, 32.0)


class NonSimpleEigenvalueError(EigenSolveError):
    pass


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    domain: DomainSpec = field(default_factory=default_domain)
    poles: PoleConfig = field(default_factory=lambda: PoleConfig.from_lists([0.9, 0.9], [-1.0, 1.0], [0.2, 0.2]))
    eps_ladder: tuple = DEFAULT_EPS
    h_ladder: tuple = DEFAULT_H
    grade: float | None = None
    n0: int = 1
    tol_eigen: float = 0.0
    trunc_radii: tuple = DEFAULT_TRUNC
    exterior_h: float = 0.1
    seed: int = 0
    threads: int = 1
    out: str | None = None
    kind: str = "converge"

    def __post_init__(self):
        self.eps_ladder = tuple(float(e) for e in self.eps_ladder)
        self.h_ladder = tuple(float(h) for h in self.h_ladder)
        self.trunc_radii = tuple(float(r) for r in self.trunc_radii)
        e = np.array(self.eps_ladder)
        if len(e) == 0 or np.any(e <= 0) or np.any(e > 1) or np.any(np.diff(e) >= 0):
            raise ValueError("epsilon ladder must be strictly decreasing in (0, 1]")
        hs = np.array(self.h_ladder)
        if len(hs) == 0 or np.any(hs <= 0) or np.any(np.diff(hs) >= 0):
            raise ValueError("mesh ladder must be strictly decreasing and positive")
        if self.n0 < 1:
            raise ValueError("eigenvalue index n0 starts at 1")
        for eps in self.eps_ladder:
            crack_polylines(self.poles, self.domain, eps)

    @property
    def mesh_grade(self) -> float:
        return float(self.grade) if self.grade is not None else recommended_grade(self.poles)

    def with_poles(self, poles: PoleConfig) -> "ExperimentConfig":
        d = dict(vars(self))
        d["poles"] = poles
        return ExperimentConfig(**d)

    def to_dict(self) -> dict:
        return {
            "domain": self.domain.polygon.tolist(),
            "poles": [{"r": p.r, "alpha": p.alpha, "rho": p.rho} for p in self.poles.poles],
            "epsilon_list": list(self.eps_ladder),
            "h_list": list(self.h_ladder),
            "grade": self.mesh_grade,
            "n0": self.n0,
            "tol_eigen": self.tol_eigen,
            "trunc_radii": list(self.trunc_radii),
            "exterior_h": self.exterior_h,
            "seed": self.seed,
            "kind": self.kind,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @classmethod
    def from_dict(cls, data: dict, **overrides) -> "ExperimentConfig":
        domain = DomainSpec(np.asarray(data["domain"], float)) if "domain" in data else default_domain()
        poles = PoleConfig(tuple(Pole(q["r"], q["alpha"], q["rho"]) for q in data["poles"]))
        kw = {"domain": domain, "poles": poles}
        keys = {"epsilon_list": "eps_ladder", "h_list": "h_ladder", "grade": "grade", "n0": "n0",
                "tol_eigen": "tol_eigen", "trunc_radii": "trunc_radii", "exterior_h": "exterior_h",
                "seed": "seed", "threads": "threads", "kind": "kind", "out": "out"}
        for k, name in keys.items():
            if k in data:
                kw[name] = data[k]
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()), **overrides)


# ---------------------------------------------------------------------------
# Richardson extrapolation over the mesh ladder


@dataclass
class Extrapolated:
    value: float
    finest: float
    order: float
    levels: list
    ok: bool

    def to_dict(self) -> dict:
        return asdict(self)


def observed_order(hs, values) -> float:
    """Order ``p`` with ``v(h) = v* + C h^p`` through three levels, nan if no such fit exists."""
    h1, h2, h3 = hs[-3:]
    a, b, c = values[-3:]
    if b == c or a == b:
        return float("nan")
    q = (a - b) / (b - c)

    def g(p):
        return (h1**p - h2**p) / (h2**p - h3**p) - q

    lo, hi = 0.05, 8.0
    if g(lo) * g(hi) > 0:
        return float("nan")
    return float(brentq(g, lo, hi, xtol=1e-12))


def richardson(hs, values, order: float | None = None, order_range=(0.3, 6.0)) -> Extrapolated:
    """Two-level Richardson on the finest pair with the order observed on the last three levels.

    Falls back to ``order`` (when given) or to the finest value if the observed
    order is missing or outside ``order_range``.
    """
    hs = [float(h) for h in hs]
    values = [float(v) for v in values]
    finest = values[-1]
    if len(values) < 2:
        return Extrapolated(finest, finest, float("nan"), values, False)
    p = observed_order(hs, values) if len(values) >= 3 else float("nan")
    ok = bool(np.isfinite(p) and order_range[0] <= p <= order_range[1])
    if not ok:
        if order is None:
            return Extrapolated(finest, finest, p, values, False)
        p = order
    r = (hs[-2] / hs[-1]) ** p
    val = finest + (finest - values[-2]) / (r - 1.0)
    return Extrapolated(float(val), finest, float(p), values, ok)


# ---------------------------------------------------------------------------
# limit problem and profile extraction


@dataclass(eq=False)
class LimitState:
    mesh: CrackMesh
    system: object
    lam: float
    v: np.ndarray
    w: np.ndarray
    eigenvalues: np.ndarray
    kreal_residual: float = 0.0


def crack_index(n0: int) -> int:
    """Index of the first crack eigenvalue of the pair carrying magnetic eigenvalue ``n0``."""
    return 2 * (n0 - 1)


def check_simple(eigenvalues, n0: int, gap: float = SIMPLE_GAP):
    """Raise when the magnetic eigenvalue ``n0`` is not simple (crack pair of size two)."""
    i = crack_index(n0)
    members = cluster(eigenvalues, i, gap)
    if len(members) != 2:
        lam = np.asarray(eigenvalues)
        gaps = np.abs(np.diff(lam)) / np.abs(lam[1:])
        raise NonSimpleEigenvalueError(
            f"eigenvalue {n0} is not simple: crack cluster {members.tolist()} with relative gaps "
            f"{np.array2string(gaps, precision=3)} (threshold {gap})"
        )


def solve_limit(mesh0: CrackMesh, config: PoleConfig, n0: int = 1, tol: float = 0.0, seed: int = 0) -> LimitState:
    system = assemble_crack(mesh0)
    res = solve_lowest(system, n=2 * n0 + 2, seed=seed, tol=tol)
    check_simple(res.eigenvalues, n0)
    i = crack_index(n0)
    v, w = res.field(i)
    kres = 0.0
    if config.half_integer:
        v, w, kres = kreal_normalize(system, (v, w), config)
    return LimitState(mesh0, system, float(res.eigenvalues[i]), v, w, res.eigenvalues, kres)


@dataclass
class ProfileInfo:
    profile: AngularProfile
    slope: float
    ambiguous: bool
    residual: float
    delta: float
    radii: list
    lam: float
    warning: str = ""

    def to_dict(self) -> dict:
        d = self.profile.to_dict()
        d.update(slope=self.slope, ambiguous=self.ambiguous, residual=self.residual, delta=self.delta,
                 radii=list(map(float, self.radii)), lam=self.lam, warning=self.warning)
        return d


def feature_distance(domain: DomainSpec, config: PoleConfig, eps: float = 0.0) -> float:
    d = float(np.min(domain.boundary_distance(np.zeros((1, 2)))))
    if eps > 0:
        d = min(d, float(np.min(config.radii)) * eps)
    return d


def extract_profile(state: LimitState, config: PoleConfig, domain: DomainSpec, m: int | None = None) -> ProfileInfo:
    """``m`` from the decay of the circle amplitude, ``(beta, gamma)`` at the smallest reliable radius."""
    radii = default_radii(state.mesh, feature_distance(domain, config))
    order = fit_vanishing_order(state.mesh, state.v, state.w, config, radii)
    m = order.m if m is None else m
    delta = float(np.min(radii))
    fit = fit_profile(state.mesh, state.v, state.w, config, m, delta, lam=state.lam)
    return ProfileInfo(fit.profile, order.slope, order.ambiguous, fit.residual, delta, list(radii), state.lam,
                       fit.warning)


def limit_mesh(cfg: ExperimentConfig, h: float, poles: PoleConfig | None = None) -> CrackMesh:
    poles = poles or cfg.poles
    c0 = crack_polylines(poles, cfg.domain, 0.0)
    return split(triangulate(cfg.domain, c0, h, cfg.mesh_grade), c0)


def canonical_phase(state: LimitState, config: PoleConfig, profile: AngularProfile, delta: float):
    """Rotate ``(v, w)`` so that the fitted phase equals ``profile.gamma`` (total circulation not 1/2)."""
    if config.half_integer:
        return state.v, state.w
    fit = fit_profile(state.mesh, state.v, state.w, config, profile.m, delta, lam=state.lam)
    phi = (profile.m + config.total_rho) * (profile.gamma - fit.profile.gamma)
    c, s = math.cos(phi), math.sin(phi)
    return c * state.v - s * state.w, s * state.v + c * state.w


# ---------------------------------------------------------------------------
# one epsilon, one mesh level


@dataclass
class PairSample:
    eps: float
    h: float
    n_dofs: int
    lam0: float
    lam_eps: float
    delta: float
    E_eps: float
    L_eps: float
    grad_gap: float  # |grad (X_eps - X_0)|^2 on the eps-cut
    residual: float
    seconds: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(eq=False)
class PairFields:
    mesh_eps: CrackMesh
    v0: np.ndarray
    w0: np.ndarray
    v_eps: np.ndarray
    w_eps: np.ndarray


def _pair_meshes(cfg: ExperimentConfig, poles: PoleConfig, eps: float, h: float):
    ce = crack_polylines(poles, cfg.domain, eps)
    base = triangulate(cfg.domain, ce, h, cfg.mesh_grade)
    return split(base, ce), split(base, crack_polylines(poles, cfg.domain, 0.0))


def solve_pair(cfg: ExperimentConfig, eps: float, h: float, poles: PoleConfig | None = None,
               phase: tuple | None = None, keep_fields: bool = False):
    """Limit and eps problems on one shared base mesh, interior energy and gradient gap.

    ``phase=(profile, delta)`` rotates the limit eigenfunction to the reference
    phase of ``profile`` (needed only when fields are compared to a blow-up limit).
    """
    t0 = time.perf_counter()
    poles = poles or cfg.poles
    me, m0 = _pair_meshes(cfg, poles, eps, h)
    state = solve_limit(m0, poles, cfg.n0, cfg.tol_eigen, cfg.seed)
    v0, w0 = state.v, state.w
    if phase is not None:
        v0, w0 = canonical_phase(state, poles, *phase)
    se = assemble_crack(me)
    re = solve_lowest(se, n=2 * cfg.n0 + 2, seed=cfg.seed, tol=cfg.tol_eigen)
    check_simple(re.eigenvalues, cfg.n0)
    i = crack_index(cfg.n0)
    v0e, w0e = me.transfer_from(m0, v0), me.transfer_from(m0, w0)
    ve, we = normalize_pair(re, i, (v0e, w0e))
    res = solve_interior(se, v0e, w0e, state.lam, eps)
    K = se.full_stiffness()
    dx = np.concatenate([ve - v0e, we - w0e])
    gap = float(dx @ (K @ dx))
    lam_e = float(re.eigenvalues[i])
    sample = PairSample(eps, h, me.n_dofs, state.lam, lam_e, lam_e - state.lam, res.energy, res.load_data, gap,
                        res.residual, time.perf_counter() - t0)
    if keep_fields:
        return sample, PairFields(me, v0e, w0e, ve, we)
    return sample


def _solve_pair_job(args):
    cfg, eps, h, poles = args
    kernels.get_backend()
    return solve_pair(cfg, eps, h, poles)


def run_ladder(cfg: ExperimentConfig, poles: PoleConfig | None = None) -> dict:
    """``{(eps, h): PairSample}`` over the full ladder, in parallel when ``cfg.threads > 1``."""
    jobs = [(cfg, e, h, poles) for e in cfg.eps_ladder for h in cfg.h_ladder]
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as ex:
            out = list(ex.map(_solve_pair_job, jobs))
    else:
        out = [_solve_pair_job(j) for j in jobs]
    return {(s.eps, s.h): s for s in out}


# ---------------------------------------------------------------------------
# exterior problem


@dataclass
class ExteriorInfo:
    E: float
    L: float  # L(Phi0, Psi0) by quadrature of the analytic profile
    L_flux: float  # discrete flux value on the largest truncation
    extrapolation: ExteriorExtrapolation

    def to_dict(self) -> dict:
        return {"E": self.E, "L": self.L, "L_flux": self.L_flux, "extrapolation": self.extrapolation.to_dict()}


def exterior_info(profile: AngularProfile, cfg: ExperimentConfig) -> ExteriorInfo:
    ext = exterior_energy(profile, cfg.trunc_radii, cfg.exterior_h, cfg.mesh_grade)
    return ExteriorInfo(ext.energy, L_limit_profile(profile), ext.L_value, ext)


# ---------------------------------------------------------------------------
# convergence of the eigenvalue shift


@dataclass
class ConvergenceRow:
    epsilon: float
    lambda_eps: float
    delta_lambda: float
    E_eps: float
    L_eps: float
    predicted: float
    ratio: float
    lambda_0: float = float("nan")
    precise_ratio: float = float("nan")
    E_scaled: float = float("nan")
    L_scaled: float = float("nan")
    grad_gap_scaled: float = float("nan")
    mesh: dict = field(default_factory=dict)

    CSV_COLUMNS = ("epsilon", "lambda_eps", "delta_lambda", "E_eps", "L_eps", "predicted", "ratio")

    def csv_values(self) -> list:
        return [getattr(self, c) for c in self.CSV_COLUMNS]

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items()}


@dataclass
class ConvergenceTable:
    rows: list
    m: int
    order: float
    slope: float
    slope_stderr: float
    slope_band: tuple
    profile: dict
    exterior: dict
    samples: list = field(default_factory=list)
    config_hash: str = ""

    @property
    def target_slope(self) -> float:
        return 2 * self.order

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "m": self.m,
            "order": self.order,
            "slope": self.slope,
            "slope_stderr": self.slope_stderr,
            "slope_band": list(self.slope_band),
            "target_slope": self.target_slope,
            "profile": self.profile,
            "exterior": self.exterior,
            "samples": [s.to_dict() for s in self.samples],
            "config_hash": self.config_hash,
        }


def fit_slope(eps, values, level: float = 0.95):
    """Least-squares slope of ``log|values|`` against ``log eps`` with a ``level`` confidence band."""
    eps, values = np.asarray(eps, float), np.asarray(values, float)
    if len(eps) < 4:
        raise ValueError("slope fit needs at least four ladder points")
    fit = stats.linregress(np.log(eps), np.log(np.abs(values)))
    t = stats.t.ppf(0.5 + level / 2, len(eps) - 2)
    return float(fit.slope), float(fit.stderr), (float(fit.slope - t * fit.stderr), float(fit.slope + t * fit.stderr))


def reference_profile(cfg: ExperimentConfig, poles: PoleConfig | None = None) -> tuple[ProfileInfo, LimitState]:
    poles = poles or cfg.poles
    state = solve_limit(limit_mesh(cfg, cfg.h_ladder[-1], poles), poles, cfg.n0, cfg.tol_eigen, cfg.seed)
    return extract_profile(state, poles, cfg.domain), state


def tabulate(cfg: ExperimentConfig, samples: dict, m: int, rho: float, E: float, L: float) -> list:
    nu = abs(m + rho)
    rows = []
    for eps in cfg.eps_ladder:
        lev = [samples[(eps, h)] for h in cfg.h_ladder]
        ext = {k: richardson(cfg.h_ladder, [getattr(s, k) for s in lev])
               for k in ("lam0", "lam_eps", "delta", "E_eps", "L_eps", "grad_gap")}
        d, Ee, Le = ext["delta"].value, ext["E_eps"].value, ext["L_eps"].value
        pred = predicted_shift(E, L, m, rho, eps) if np.isfinite(E) else float("nan")
        s = eps ** (2 * nu)
        rows.append(ConvergenceRow(
            eps, ext["lam_eps"].value, d, Ee, Le, pred, d / (2 * (Ee + Le)),
            lambda_0=ext["lam0"].value,
            precise_ratio=d / pred if pred else float("nan"),
            E_scaled=Ee / s, L_scaled=Le / s, grad_gap_scaled=ext["grad_gap"].value / s,
            mesh={k: v.to_dict() for k, v in ext.items()},
        ))
    return rows


def run_convergence(cfg: ExperimentConfig, exterior: bool = True) -> ConvergenceTable:
    """Eigenvalue shift, interior energies and the limit prediction along the epsilon ladder."""
    info, _ = reference_profile(cfg)
    prof = info.profile
    ext = exterior_info(prof, cfg) if exterior else None
    E = ext.E if ext else float("nan")
    L = ext.L if ext else float("nan")
    samples = run_ladder(cfg)
    rows = tabulate(cfg, samples, prof.m, prof.rho, E, L)
    slope, se, band = fit_slope([r.epsilon for r in rows], [r.delta_lambda for r in rows])
    return ConvergenceTable(rows, prof.m, prof.order, slope, se, band, info.to_dict(),
                            ext.to_dict() if ext else {}, [samples[k] for k in sorted(samples, reverse=True)],
                            cfg.config_hash())


# ---------------------------------------------------------------------------
# sign experiment for total circulation 1/2


@dataclass
class SignReport:
    case: str
    alphas: list
    m: int
    gamma: float
    gamma_check: float
    eps: list
    delta_lambda: list
    E: float
    L: float
    E_scaled: list
    exterior: dict
    samples: list = field(default_factory=list)

    @property
    def expected_sign(self) -> int:
        return -1 if self.case == "i" else 1

    @property
    def signs_ok(self) -> bool:
        s = self.expected_sign
        return bool(all(np.sign(d) == s for d in self.delta_lambda) and np.sign(self.E) == s)

    @property
    def L_ratio(self) -> float:
        return abs(self.L) / abs(self.E) if self.E else float("inf")

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "samples"}
        d["samples"] = [s.to_dict() for s in self.samples]
        d.update(expected_sign=self.expected_sign, signs_ok=self.signs_ok, L_ratio=self.L_ratio)
        return d


def sign_angles(case: str, m: int, gamma: float, k: int) -> list:
    """Pole angles ``-gamma + pi (1 + 2j) / (2m+1)`` (case i) or ``-gamma + 2 pi j / (2m+1)`` (case ii)."""
    if k > 2 * m + 1:
        raise ValueError(f"{k} poles exceed 2m+1 = {2 * m + 1} admissible directions")
    n = 2 * m + 1
    if case == "i":
        a = [-gamma + math.pi * (1 + 2 * j) / n for j in range(k)]
    elif case == "ii":
        a = [-gamma + 2 * math.pi * j / n for j in range(k)]
    else:
        raise ValueError("case must be 'i' or 'ii'")
    return [float(math.remainder(x, 2 * math.pi)) for x in a]


def run_sign_experiment(case: str, cfg: ExperimentConfig) -> SignReport:
    """Place the poles on the attractive (i) or repulsive (ii) directions of the limit profile."""
    if not cfg.poles.half_integer:
        raise ValueError("sign experiment needs total circulation 1/2")
    info, _ = reference_profile(cfg)
    m, gamma = info.profile.m, info.profile.gamma
    alphas = sign_angles(case, m, gamma, cfg.poles.k)
    poles = PoleConfig(tuple(Pole(p.r, a, p.rho) for p, a in zip(cfg.poles.poles, alphas)))
    c2 = cfg.with_poles(poles)
    info2, _ = reference_profile(c2)
    # the profile is re-fitted on the new cut; its phase must agree with the one used to place the poles
    prof = info2.profile
    ext = exterior_info(prof, c2)
    samples = run_ladder(c2)
    rows = tabulate(c2, samples, prof.m, prof.rho, ext.E, ext.L)
    return SignReport(case, alphas, m, gamma, prof.gamma, [r.epsilon for r in rows],
                      [r.delta_lambda for r in rows], ext.E, ext.L, [r.E_scaled for r in rows], ext.to_dict(),
                      [samples[k] for k in sorted(samples, reverse=True)])


# ---------------------------------------------------------------------------
# blow-up of eigenfunctions


@dataclass
class BlowupReport:
    eps: list
    discrepancy: list
    grad_gap_scaled: list
    grad_norm2: float  # |grad V~|^2 + |grad W~|^2 of the exterior minimizer
    radius: float
    profile: dict

    @property
    def grad_ratio(self) -> float:
        return self.grad_gap_scaled[-1] / self.grad_norm2

    @property
    def decreasing(self) -> bool:
        d = self.discrepancy[-3:]
        return bool(all(b < a for a, b in zip(d[:-1], d[1:])))

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(grad_ratio=self.grad_ratio, decreasing=self.decreasing)
        return d


def _element_norms(mesh: CrackMesh, values: np.ndarray, mask: np.ndarray, scale: float):
    """``int |grad u|^2`` and ``scale^-2 int |u|^2`` over the masked elements (P1, complex values)."""
    area, g = mesh.element_geometry()
    area, g = area[mask], g[mask]
    u = values[mesh.triangles[mask]]
    grad = np.einsum("tk,tkd->td", u, g)
    h1 = float(np.sum(area * np.sum(np.abs(grad) ** 2, axis=1)))
    # exact P1 mass on each triangle
    s = np.abs(u.sum(axis=1)) ** 2 + np.sum(np.abs(u) ** 2, axis=1)
    l2 = float(np.sum(area * s) / 12.0)
    return h1, l2 / scale**2


def blowup_discrepancy(fields: PairFields, eps: float, order: float, target_mesh: CrackMesh, target, radius: float = 2.0):
    """Relative H1 discrepancy on ``D_radius`` between ``eps^-order (v, w)(eps .)`` and the target pair.

    The target (complex values on the copies of ``target_mesh``) is sampled at
    ``x / eps`` on each copy of the eps-mesh, on the copy's own side.
    """
    mesh = fields.mesh_eps
    inside = np.all(np.linalg.norm(mesh.nodes[mesh.triangles], axis=2) <= radius * eps * (1 + 1e-12), axis=1)
    used = np.unique(mesh.triangles[inside])
    x = mesh.side_points(1e-3)[used] / eps
    vals = np.zeros(mesh.n_dofs, dtype=complex)
    vals[used] = Locator(target_mesh).evaluate(target, x)
    z = eps ** (-order) * (fields.v_eps + 1j * fields.w_eps)
    g_diff, l_diff = _element_norms(mesh, z - vals, inside, eps)
    g_ref, l_ref = _element_norms(mesh, vals, inside, eps)
    return math.sqrt((g_diff + l_diff) / (g_ref + l_ref))


def run_blowup_compare(cfg: ExperimentConfig, radius: float | None = None) -> BlowupReport:
    """Scaled eigenfunctions against ``(Phi0 - V~, Psi0 - W~)`` on ``D_2`` at the finest mesh level."""
    info, _ = reference_profile(cfg)
    prof = info.profile
    R = radius or cfg.trunc_radii[-1]
    sol = solve_exterior(prof, R, cfg.exterior_h, cfg.mesh_grade)
    res = sol.result
    ms = sol.meshes
    p0, q0 = harmonic_extension(assemble_crack(ms.cut0), prof)
    p0, q0 = ms.cut1.transfer_from(ms.cut0, p0), ms.cut1.transfer_from(ms.cut0, q0)
    target = (p0 - res.V) + 1j * (q0 - res.W)
    h = cfg.h_ladder[-1]
    disc, gaps = [], []
    for eps in cfg.eps_ladder:
        sample, fields = solve_pair(cfg, eps, h, phase=(prof, info.delta), keep_fields=True)
        disc.append(blowup_discrepancy(fields, eps, prof.order, ms.cut1, target))
        gaps.append(sample.grad_gap / eps ** (2 * prof.order))
    return BlowupReport(list(cfg.eps_ladder), disc, gaps, res.grad_norm2, R, info.to_dict())


# ---------------------------------------------------------------------------
# disk oracle and gauge equivalence


@dataclass
class DiskOracleReport:
    rho: float
    exact: float
    h: list
    crack: list
    magnetic: list
    seconds: list
    n_dofs: list

    @property
    def errors(self) -> list:
        return [abs(x - self.exact) / self.exact for x in self.crack]

    @property
    def observed_order(self) -> float:
        e = self.errors
        if len(e) < 2 or e[-1] <= 0 or e[-2] <= 0:
            return float("nan")
        return math.log(e[-2] / e[-1]) / math.log(self.h[-2] / self.h[-1])

    @property
    def monotone(self) -> bool:
        e = self.errors
        return bool(all(b < a for a, b in zip(e[:-1], e[1:])))

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(errors=self.errors, observed_order=self.observed_order, monotone=self.monotone)
        return d


def run_disk_oracle(rho: float = 0.3, h_ladder=(0.1, 0.07, 0.05), n_sides: int = 256, grade: float | None = None):
    """First eigenvalue of the polygonal unit disk with a centred pole against ``j_{nu,1}^2``."""
    config = PoleConfig.from_lists([0.5], [0.3], [rho])
    domain = disk_polygon(n_sides)
    g = grade or recommended_grade(config)
    exact = disk_eigenvalue(rho)
    out = DiskOracleReport(rho, exact, [], [], [], [], [])
    for h in h_ladder:
        t0 = time.perf_counter()
        c0 = crack_polylines(config, domain, 0.0)
        mesh = split(triangulate(domain, c0, h, g), c0)
        lam_c = solve_lowest(assemble_crack(mesh), n=2).eigenvalues[0]
        lam_m = solve_lowest(assemble_magnetic(mesh, config, 0.0), n=1).eigenvalues[0]
        out.h.append(h)
        out.crack.append(float(lam_c))
        out.magnetic.append(float(lam_m))
        out.seconds.append(time.perf_counter() - t0)
        out.n_dofs.append(mesh.n_dofs)
    return out


def random_configuration(rng: np.random.Generator, domain: DomainSpec, eps: float, k: int | None = None) -> PoleConfig:
    """Random multi-pole configuration with well separated directions and non-integer fluxes."""
    while True:
        kk = int(k or rng.integers(2, 4))
        alphas = np.sort(rng.uniform(-math.pi, math.pi, kk))
        gaps = np.diff(np.concatenate([alphas, alphas[:1] + 2 * math.pi]))
        if np.min(gaps) < 0.6:
            continue
        total = rng.uniform(0.15, 0.85)
        share = rng.dirichlet(np.full(kk, 2.0))
        rhos = total * share
        if np.min(rhos) < 0.05 or abs(total - 0.5) < 0.05:
            continue
        radii = rng.uniform(0.4, 0.95, kk)
        cfg = PoleConfig.from_lists(radii, alphas, rhos)
        try:
            crack_polylines(cfg, domain, eps)
        except ValueError:
            continue
        return cfg


@dataclass
class GaugeReport:
    configs: list
    eps: float
    h: list
    magnetic: list  # per config: list over h of first n magnetic eigenvalues
    crack: list
    magnetic_extrapolated: list
    crack_extrapolated: list
    pair_spread: list  # max relative spread inside each crack pair, per config

    @property
    def max_relative_error(self) -> float:
        err = 0.0
        for mag, cr in zip(self.magnetic_extrapolated, self.crack_extrapolated):
            mag, cr = np.asarray(mag), np.asarray(cr)
            err = max(err, float(np.max(np.abs(cr[0::2] - mag) / mag)), float(np.max(np.abs(cr[1::2] - mag) / mag)))
        return err

    def to_dict(self) -> dict:
        d = asdict(self)
        d["max_relative_error"] = self.max_relative_error
        return d


def run_gauge_equivalence(n_configs: int = 3, eps: float = 0.5, n_magnetic: int = 6, h_ladder=(0.14, 0.1, 0.07),
                          seed: int = 0, domain: DomainSpec | None = None) -> GaugeReport:
    """First ``n`` magnetic eigenvalues against the first ``2n`` crack eigenvalues (doubled)."""
    domain = domain or default_domain()
    rng = np.random.default_rng(seed)
    rep = GaugeReport([], eps, list(h_ladder), [], [], [], [], [])
    for _ in range(n_configs):
        config = random_configuration(rng, domain, eps)
        g = recommended_grade(config)
        mags, cracks = [], []
        for h in h_ladder:
            ce = crack_polylines(config, domain, eps)
            mesh = split(triangulate(domain, ce, h, g), ce)
            mags.append(solve_lowest(assemble_magnetic(mesh, config, eps), n=n_magnetic).eigenvalues.tolist())
            cracks.append(solve_lowest(assemble_crack(mesh), n=2 * n_magnetic).eigenvalues.tolist())
        mags_a, cr_a = np.array(mags), np.array(cracks)
        rep.configs.append(config.to_dict())
        rep.magnetic.append(mags)
        rep.crack.append(cracks)
        rep.magnetic_extrapolated.append([richardson(h_ladder, mags_a[:, i]).value for i in range(n_magnetic)])
        rep.crack_extrapolated.append([richardson(h_ladder, cr_a[:, i]).value for i in range(2 * n_magnetic)])
        fin = cr_a[-1]
        rep.pair_spread.append(float(np.max(np.abs(fin[0::2] - fin[1::2]) / fin[0::2])))
    return rep


# ---------------------------------------------------------------------------
# Hardy suite


@dataclass
class HardySuiteReport:
    rho: float
    count: int
    passed: int
    max_ratio: float

    def to_dict(self) -> dict:
        return asdict(self)


def run_hardy_suite(rhos=(0.2, 0.5), count: int = 200, seed: int = 0, h: float = 0.12,
                    r_in: float = 1.0, r_out: float = 2.0) -> list:
    """Random constrained fields on the annulus ``r_in < |x| < r_out`` against the Hardy bound."""
    out = []
    for i, rho in enumerate(rhos):
        config = PoleConfig.from_lists([0.5], [0.7], [rho])
        mesh = annulus_mesh(config, r_in, r_out, h)
        fields, K1 = random_constrained_fields(mesh, count, seed + i)
        res = [hardy_check(mesh, v, w, rho, K1=K1) for v, w in fields]
        out.append(HardySuiteReport(rho, count, sum(r.ok for r in res), max(r.ratio for r in res)))
    return out
