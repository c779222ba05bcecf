"""Pole configurations, crack polylines, the angular step function and jump coefficients.

All poles collide at the origin.  Pole ``j`` sits at ``eps * r_j * (cos a_j, sin a_j)``
and carries circulation ``rho_j``.  The crack attached to pole ``j`` is the part of the
line through the origin in direction ``a_j`` that runs from the domain boundary,
through the origin, up to the pole.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

ANGLE_TOL = 1e-12
TWO_PI = 2.0 * math.pi


def reduce_angle(a: float) -> float:
    """Reduce an angle to (-pi, pi]."""
    r = math.fmod(a, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    elif r > math.pi:
        r -= TWO_PI
    if abs(r + math.pi) < ANGLE_TOL:
        r = math.pi
    return r


def _angle_gap(a: float, b: float, period: float) -> float:
    d = math.fmod(abs(a - b), period)
    return min(d, period - d)


@dataclass(frozen=True)
class Pole:
    r: float
    alpha: float
    rho: float

    @property
    def direction(self) -> np.ndarray:
        return np.array([math.cos(self.alpha), math.sin(self.alpha)])

    @property
    def normal(self) -> np.ndarray:
        return np.array([-math.sin(self.alpha), math.cos(self.alpha)])


@dataclass(frozen=True)
class PoleConfig:
    """Collision geometry: ``k`` poles, their circulations and the scale ``eps``.

    Angles are stored reduced to (-pi, pi].  Construction validates the
    admissibility conditions (distinct directions modulo pi, non-integer
    circulations, total circulation in (0, 1)).
    """

    poles: tuple[Pole, ...]
    eps: float = 1.0

    def __post_init__(self):
        poles = tuple(Pole(float(p.r), reduce_angle(float(p.alpha)), float(p.rho)) for p in self.poles)
        object.__setattr__(self, "poles", poles)
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError(f"eps must lie in [0, 1], got {self.eps}")
        if not poles:
            raise ValueError("at least one pole is required")
        for p in poles:
            if not 0 < p.r < 1:
                raise ValueError(f"pole radius must lie in (0, 1), got {p.r}")
            if abs(p.rho - round(p.rho)) < ANGLE_TOL:
                raise ValueError(f"circulation {p.rho} is an integer")
        for i in range(len(poles)):
            for j in range(i + 1, len(poles)):
                if _angle_gap(poles[i].alpha, poles[j].alpha, math.pi) < ANGLE_TOL:
                    raise ValueError(
                        f"poles {i} and {j} lie on a common line through the origin"
                    )
        rho = self.total_rho
        if not 0.0 < rho < 1.0:
            raise ValueError(f"total circulation must lie in (0, 1), got {rho}")

    @classmethod
    def from_lists(cls, r: Sequence[float], alpha: Sequence[float], rho: Sequence[float], eps: float = 1.0):
        return cls(tuple(Pole(a, b, c) for a, b, c in zip(r, alpha, rho)), eps)

    @property
    def k(self) -> int:
        return len(self.poles)

    @property
    def total_rho(self) -> float:
        return float(sum(p.rho for p in self.poles))

    @property
    def rhos(self) -> np.ndarray:
        return np.array([p.rho for p in self.poles])

    @property
    def alphas(self) -> np.ndarray:
        return np.array([p.alpha for p in self.poles])

    @property
    def radii(self) -> np.ndarray:
        return np.array([p.r for p in self.poles])

    @property
    def half_integer(self) -> bool:
        return abs(self.total_rho - 0.5) < 1e-12

    def at(self, eps: float) -> "PoleConfig":
        return PoleConfig(self.poles, eps)

    def positions(self, eps: float | None = None) -> np.ndarray:
        """Pole locations ``eps * a_j`` as a (k, 2) array."""
        e = self.eps if eps is None else eps
        return np.array([e * p.r * p.direction for p in self.poles]).reshape(-1, 2)

    def directions(self) -> np.ndarray:
        return np.array([p.direction for p in self.poles])

    def normals(self) -> np.ndarray:
        return np.array([p.normal for p in self.poles])

    def thresholds(self) -> np.ndarray:
        """Jump angles ``a_j + pi`` of the step function, in (0, 2pi]."""
        return self.alphas + math.pi

    def to_dict(self) -> dict:
        return {
            "poles": [{"r": p.r, "alpha": p.alpha, "rho": p.rho} for p in self.poles],
            "eps": self.eps,
        }


def step_function(config: PoleConfig, t):
    """Angular step function ``f(t) = sum_j rho_j [t >= a_j + pi]`` for t in [0, 2pi)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for thr, rho in zip(config.thresholds(), config.rhos):
        out = out + rho * (t >= thr - ANGLE_TOL)
    return out if out.ndim else float(out)


def jump_coeffs(rho: float) -> tuple[float, float]:
    """Return ``(cos 2 pi rho, sin 2 pi rho)``, the rotation applied across a crack."""
    return math.cos(TWO_PI * rho), math.sin(TWO_PI * rho)


def rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def jump_matrix(rho: float) -> np.ndarray:
    """Matrix mapping plus-side traces (v, w) to minus-side traces."""
    b, d = jump_coeffs(rho)
    return np.array([[b, -d], [d, b]])


# ---------------------------------------------------------------------------
# domains


def _segments_intersect(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


@dataclass(frozen=True)
class DomainSpec:
    """Simple counter-clockwise polygon containing the origin in its interior."""

    polygon: np.ndarray = field(repr=False)

    def __post_init__(self):
        poly = np.asarray(self.polygon, dtype=float).reshape(-1, 2)
        if len(poly) < 3:
            raise ValueError("polygon needs at least three vertices")
        if self.signed_area(poly) < 0:
            poly = poly[::-1].copy()
        poly.setflags(write=False)
        object.__setattr__(self, "polygon", poly)
        n = len(poly)
        for i in range(n):
            for j in range(i + 2, n):
                if i == 0 and j == n - 1:
                    continue
                if _segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]):
                    raise ValueError("polygon is not simple")
        if not self.contains(np.zeros(2)) or self.boundary_distance(np.zeros(2)) < 1e-12:
            raise ValueError("origin must lie strictly inside the polygon")

    @staticmethod
    def signed_area(poly) -> float:
        x, y = poly[:, 0], poly[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def contains_origin(self) -> bool:
        return True

    @property
    def area(self) -> float:
        return self.signed_area(self.polygon)

    def edges(self):
        p = self.polygon
        return p, np.roll(p, -1, axis=0)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        a, b = self.edges()
        inside = False
        for p, q in zip(a, b):
            if (p[1] > x[1]) != (q[1] > x[1]):
                xc = p[0] + (x[1] - p[1]) * (q[0] - p[0]) / (q[1] - p[1])
                if x[0] < xc:
                    inside = not inside
        return inside

    def boundary_distance(self, x) -> np.ndarray:
        """Distance from point(s) ``x`` to the polygon boundary."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        a, b = self.edges()
        d = b - a
        rel = x[:, None, :] - a[None, :, :]
        s = np.clip(np.sum(rel * d[None], axis=2) / np.sum(d * d, axis=1)[None], 0.0, 1.0)
        proj = a[None] + s[..., None] * d[None]
        dist = np.linalg.norm(x[:, None, :] - proj, axis=2).min(axis=1)
        return dist if dist.size > 1 else float(dist[0])

    def ray_exit(self, direction) -> float:
        """Smallest s > 0 with ``s * direction`` on the boundary."""
        u = np.asarray(direction, dtype=float)
        a, b = self.edges()
        best = math.inf
        for p, q in zip(a, b):
            e = q - p
            den = u[0] * (-e[1]) - u[1] * (-e[0])
            if abs(den) < 1e-15:
                continue
            # solve s*u = p + t*e
            s = (p[0] * (-e[1]) - p[1] * (-e[0])) / den
            t = (u[0] * p[1] - u[1] * p[0]) / den
            if s > 1e-14 and -1e-14 <= t <= 1 + 1e-14:
                best = min(best, s)
        if not math.isfinite(best):
            raise ValueError("ray does not leave the polygon")
        return best


def disk_polygon(n: int = 256, radius: float = 1.0) -> DomainSpec:
    t = TWO_PI * np.arange(n) / n
    return DomainSpec(radius * np.column_stack([np.cos(t), np.sin(t)]))


def rectangle(x0: float, y0: float, x1: float, y1: float) -> DomainSpec:
    return DomainSpec(np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]]))


def default_domain() -> DomainSpec:
    """Asymmetric rectangle whose low eigenvalues are generically simple."""
    return DomainSpec(np.array([[-1.2, -0.9], [1.0, -0.9], [1.0, 1.1], [-1.2, 1.1]]))


# ---------------------------------------------------------------------------
# cracks


@dataclass(frozen=True)
class Crack:
    """Crack of one pole: from ``start`` on the boundary through 0 to ``tip``.

    Points on the crack are ``t * direction`` with ``t_start <= t <= t_tip``;
    ``t_start < 0`` and ``t_tip = eps * r``.
    """

    direction: np.ndarray
    normal: np.ndarray
    t_start: float
    t_tip: float
    rho: float

    @property
    def start(self) -> np.ndarray:
        return self.t_start * self.direction

    @property
    def tip(self) -> np.ndarray:
        return self.t_tip * self.direction

    @property
    def segment_length(self) -> float:
        return self.t_tip

    @property
    def length(self) -> float:
        return self.t_tip - self.t_start

    def polyline(self) -> np.ndarray:
        if self.t_tip > 0:
            return np.array([self.start, np.zeros(2), self.tip])
        return np.array([self.start, np.zeros(2)])


@dataclass(frozen=True)
class CrackSet:
    cracks: tuple[Crack, ...]
    eps: float

    def __len__(self):
        return len(self.cracks)

    def __iter__(self):
        return iter(self.cracks)

    def __getitem__(self, j):
        return self.cracks[j]

    @property
    def tips(self) -> np.ndarray:
        return np.array([c.tip for c in self.cracks]).reshape(-1, 2)

    def singular_points(self) -> np.ndarray:
        pts = [np.zeros(2)]
        if self.eps > 0:
            pts.extend(c.tip for c in self.cracks)
        return np.array(pts)


def crack_polylines(config: PoleConfig, domain: DomainSpec, eps: float) -> CrackSet:
    """Clip each crack ``{t a_j : t <= eps}`` against the domain."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must lie in [0, 1], got {eps}")
    cracks = []
    for p in config.poles:
        u = p.direction
        t_start = -domain.ray_exit(-u)
        t_tip = eps * p.r
        if t_tip > 0:
            tip = t_tip * u
            if not domain.contains(tip) or domain.boundary_distance(tip) < 1e-9:
                raise ValueError(f"crack tip {tip} touches or leaves the domain")
            if domain.ray_exit(u) <= t_tip + 1e-9:
                raise ValueError(f"segment to tip {tip} leaves the domain")
        cracks.append(Crack(u, p.normal, t_start, t_tip, p.rho))
    return CrackSet(tuple(cracks), eps)


# ---------------------------------------------------------------------------
# configuration files


def load_config(path) -> tuple[DomainSpec, PoleConfig, list[float]]:
    """Read ``{domain: [[x, y], ...], poles: [{r, alpha, rho}, ...], epsilon_list: [...]}``."""
    data = json.loads(Path(path).read_text())
    return config_from_dict(data)


def config_from_dict(data: dict) -> tuple[DomainSpec, PoleConfig, list[float]]:
    domain = DomainSpec(np.asarray(data["domain"], dtype=float)) if "domain" in data else default_domain()
    poles = tuple(Pole(q["r"], q["alpha"], q["rho"]) for q in data["poles"])
    eps_list = [float(e) for e in data.get("epsilon_list", [])]
    config = PoleConfig(poles, eps_list[0] if eps_list else 1.0)
    for e in eps_list:
        crack_polylines(config, domain, e)
    return domain, config, eps_list
