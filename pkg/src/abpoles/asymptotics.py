"""Vanishing order and angular profile of the limit eigenfunction at the collision point.

Near the origin the limit eigenfunction behaves like ``beta r^|m+rho|`` times an
explicit angular factor.  The homogeneous pair ``(Phi0, Psi0)`` built from
``(m, beta, gamma)`` is

* ``rho != 1/2``: ``Phi0 + i Psi0 = beta r^|m+rho| exp(i (2 pi f(t) + (m+rho)(gamma - t)))``
* ``rho == 1/2``: ``Phi0 + i Psi0 = beta r^(m+1/2) exp(i 2 pi f(t)) cos((m+1/2)(gamma + t))``

with ``f`` the angular step function of the pole configuration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import jv

from .geometry import TWO_PI, PoleConfig, step_function
from .mesh import CrackMesh, Locator


@dataclass(frozen=True)
class AngularProfile:
    m: int
    beta: float
    gamma: float
    config: PoleConfig = field(repr=False)

    def __post_init__(self):
        if self.half_integer and self.m < 0:
            raise ValueError("for total circulation 1/2 the index m must be non-negative")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")

    @property
    def rho(self) -> float:
        return self.config.total_rho

    @property
    def half_integer(self) -> bool:
        return self.config.half_integer

    @property
    def order(self) -> float:
        return abs(self.m + self.rho)

    @property
    def thresholds(self) -> np.ndarray:
        return self.config.thresholds()

    @property
    def gamma_period(self) -> float:
        if self.half_integer:
            return 4 * math.pi / (2 * self.m + 1)
        return TWO_PI / self.order

    def scaled(self, factor: float) -> "AngularProfile":
        return AngularProfile(self.m, self.beta * factor, self.gamma, self.config)

    def _polar(self, x):
        x = np.asarray(x, dtype=float)
        r = np.hypot(x[..., 0], x[..., 1])
        t = np.mod(np.arctan2(x[..., 1], x[..., 0]), TWO_PI)
        return r, t

    def complex_value(self, x):
        """``Phi0 + i Psi0`` at points ``x`` (..., 2)."""
        r, t = self._polar(x)
        f = step_function(self.config, t)
        if self.half_integer:
            a = self.m + 0.5
            return self.beta * r**a * np.exp(1j * TWO_PI * f) * np.cos(a * (self.gamma + t))
        mr = self.m + self.rho
        return self.beta * r**self.order * np.exp(1j * (TWO_PI * f + mr * (self.gamma - t)))

    def values(self, x):
        z = self.complex_value(x)
        return z.real, z.imag

    def complex_gradient(self, x):
        """Gradient of ``Phi0 + i Psi0`` off the origin and off the jump rays, shape (..., 2)."""
        x = np.asarray(x, dtype=float)
        r, t = self._polar(x)
        f = step_function(self.config, t)
        if self.half_integer:
            a = self.m + 0.5
            pre = self.beta * r ** (a - 1) * np.exp(1j * TWO_PI * f)
            dr = pre * a * np.cos(a * (self.gamma + t))
            dt = -pre * a * np.sin(a * (self.gamma + t))  # (1/r) d/dt
        else:
            mr = self.m + self.rho
            z = self.beta * r ** (self.order - 1) * np.exp(1j * (TWO_PI * f + mr * (self.gamma - t)))
            dr = self.order * z
            dt = -1j * mr * z
        c, s = np.cos(t), np.sin(t)
        gx = dr * c - dt * s
        gy = dr * s + dt * c
        return np.stack([gx, gy], axis=-1)

    def gradients(self, x):
        g = self.complex_gradient(x)
        return g.real, g.imag

    def normal_derivatives(self, j: int, r):
        """``(dPhi0/dnu_j, dPsi0/dnu_j)`` on the segment ``r a_j / r_j``, 0 < r."""
        pole = self.config.poles[j]
        x = np.asarray(r, dtype=float)[..., None] * pole.direction
        g = self.complex_gradient(x) @ pole.normal
        return g.real, g.imag

    def to_dict(self) -> dict:
        return {"m": self.m, "beta": self.beta, "gamma": self.gamma, "rho": self.rho,
                "order": self.order, "half_integer": self.half_integer}


def eval_profiles(profile: AngularProfile, x):
    """``(Phi0(x), Psi0(x))``."""
    return profile.values(x)


# ---------------------------------------------------------------------------
# sampling on circles


def circle_angles(config: PoleConfig, n: int = 256) -> np.ndarray:
    """Uniform angles offset by half a step, nudged away from the jump rays."""
    t = TWO_PI * (np.arange(n) + 0.5) / n
    thr = np.mod(config.thresholds(), TWO_PI)
    for a in thr:
        close = np.abs(((t - a) + math.pi) % TWO_PI - math.pi) < 1e-6
        t[close] += 1e-5
    return t


def circle_samples(mesh: CrackMesh, v, w, delta: float, config: PoleConfig, n: int = 256, locator=None):
    t = circle_angles(config, n)
    x = delta * np.column_stack([np.cos(t), np.sin(t)])
    loc = locator or Locator(mesh)
    vals = loc.evaluate(np.column_stack([v, w]), x)
    return t, vals[:, 0] + 1j * vals[:, 1]


def default_radii(mesh: CrackMesh, domain_distance: float, count: int = 6) -> np.ndarray:
    """Geometric ladder from half the distance to the nearest feature, floored at 5 local sizes."""
    d0 = 0.5 * domain_distance
    radii = d0 * 2.0 ** (-np.arange(count))
    g = mesh.grading
    local = np.clip(g["h"] * radii ** ((g["grade"] - 1) / g["grade"]), g["h_min"], g["h_max"])
    return radii[radii >= 5 * local]


def bessel_factor(order: float, k: float, delta: float) -> float:
    """``J_nu(k delta) / ((k delta / 2)^nu / Gamma(nu + 1))``; 1 when ``k`` is None or 0."""
    if not k:
        return 1.0
    z = k * delta
    return float(jv(order, z) / ((0.5 * z) ** order / gamma_fn(order + 1.0)))


def _window(config: PoleConfig, m_window):
    if m_window is not None:
        return list(m_window)
    return list(range(0, 4)) if config.half_integer else list(range(-3, 4))


@dataclass
class OrderFit:
    m: int
    slope: float
    residuals: dict
    ambiguous: bool
    radii: np.ndarray
    amplitudes: np.ndarray
    mode_weights: dict


def _mode_coefficients(config: PoleConfig, t, z, m_values):
    """Angular mode coefficients of ``z`` sampled at angles ``t`` on a circle."""
    f = step_function(config, t)
    g = z * np.exp(-1j * TWO_PI * f)
    out = {}
    if config.half_integer:
        for m in m_values:
            a = m + 0.5
            cc = 2 * np.mean(g * np.cos(a * t))
            ss = 2 * np.mean(g * np.sin(a * t))
            out[m] = (cc, ss)
    else:
        for m in m_values:
            out[m] = np.mean(g * np.exp(1j * (m + config.total_rho) * t))
    return out


def fit_vanishing_order(mesh: CrackMesh, v, w, config: PoleConfig, radii, m_window=None, n_angles: int = 256):
    """Integer ``m`` whose order ``|m + rho|`` best matches the decay of the circle amplitude.

    The slope of ``log A`` against ``log delta`` is fitted over the three smallest
    radii, with ``A(delta)`` the root-mean-square of ``v^2 + w^2`` on the circle.
    When two candidates are within 10% of each other the fit is flagged
    ambiguous and the mode dominating the angular spectrum at the smallest
    radius decides.
    """
    radii = np.sort(np.asarray(radii, dtype=float))[::-1]
    loc = Locator(mesh)
    rho = config.total_rho
    ms = _window(config, m_window)
    amps, modes = [], []
    for d in radii:
        t, z = circle_samples(mesh, v, w, d, config, n_angles, loc)
        amps.append(math.sqrt(np.mean(np.abs(z) ** 2)))
        modes.append(_mode_coefficients(config, t, z, ms))
    amps = np.array(amps)
    sel = slice(-3, None) if len(radii) >= 3 else slice(None)
    slope = float(np.polyfit(np.log(radii[sel]), np.log(amps[sel]), 1)[0])
    res = {m: abs(slope - abs(m + rho)) for m in ms}
    ranked = sorted(res, key=lambda m: res[m])
    m = ranked[0]
    ambiguous = len(ranked) > 1 and abs(res[ranked[1]] - res[ranked[0]]) < 0.1 * max(slope, 1e-12)
    last = modes[-1]
    weights = {}
    for k in ms:
        c = last[k]
        weights[k] = float(np.hypot(abs(c[0]), abs(c[1]))) if isinstance(c, tuple) else float(abs(c))
    if ambiguous:
        m = max(weights, key=lambda k: weights[k])
    return OrderFit(m, slope, res, ambiguous, radii, amps, weights)


@dataclass
class ProfileFit:
    profile: AngularProfile
    residual: float
    delta: float
    warning: str = ""


def fit_profile(mesh: CrackMesh, v, w, config: PoleConfig, m: int, delta: float, lam: float | None = None,
                n_angles: int = 512) -> ProfileFit:
    """Least-squares ``(beta, gamma)`` from the angular trace on the circle of radius ``delta``.

    For total circulation 1/2 the input must be K-real normalized.
    """
    t, z = circle_samples(mesh, v, w, delta, config, n_angles)
    return profile_from_samples(config, t, z, m, delta, lam)


def profile_from_samples(config: PoleConfig, t, z, m: int, delta: float, lam: float | None = None) -> ProfileFit:
    """``(beta, gamma)`` from samples ``z = v + i w`` at uniform angles ``t`` on the circle of radius ``delta``.

    The angular mode of index ``m`` is projected out, which removes every other
    mode exactly; its radial factor is then divided by ``delta^|m+rho|``.  When
    ``lam`` is given the radial Bessel factor ``J_nu(sqrt(lam) delta)`` is also
    corrected to its small-argument leading term.
    """
    rho = config.total_rho
    t, z = np.asarray(t, float), np.asarray(z, complex)
    k = math.sqrt(lam) if lam else None
    f = step_function(config, t)
    if config.half_integer:
        a = m + 0.5
        cc, ss = _mode_coefficients(config, t, z, [m])[m]
        scale = delta**a * bessel_factor(a, k, delta)
        A, B = cc.real / scale, ss.real / scale
        beta = math.hypot(A, B)
        # A cos(a t) + B sin(a t) = beta cos(a (gamma + t))
        gam = (math.atan2(-B, A) / a) % (4 * math.pi / (2 * m + 1))
        fitted = beta * scale * np.exp(1j * TWO_PI * f) * np.cos(a * (gam + t))
    else:
        mr = m + rho
        nu = abs(mr)
        c = _mode_coefficients(config, t, z, [m])[m]
        scale = delta**nu * bessel_factor(nu, k, delta)
        c = c / scale
        beta = abs(c)
        gam = (math.atan2(c.imag, c.real) / mr) % (TWO_PI / nu)
        fitted = beta * scale * np.exp(1j * (TWO_PI * f + mr * (gam - t)))
    resid = float(np.linalg.norm(z - fitted) / max(np.linalg.norm(z), 1e-300))
    warn = "residual above 5% of amplitude" if resid > 0.05 else ""
    return ProfileFit(AngularProfile(m, beta, gam, config), resid, delta, warn)


def fit_profile_ladder(mesh, v, w, config, m, radii, lam=None):
    """Profile fits at several radii; returns the list of fits (largest radius first)."""
    return [fit_profile(mesh, v, w, config, m, d, lam) for d in sorted(radii, reverse=True)]
