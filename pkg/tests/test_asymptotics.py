import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abpoles.asymptotics import (
    AngularProfile,
    circle_angles,
    default_radii,
    eval_profiles,
    fit_profile,
    fit_vanishing_order,
    profile_from_samples,
)
from abpoles.eigensolve import assemble_crack, solve_lowest
from abpoles.energy import harmonic_extension, profile_on_copies
from abpoles.geometry import PoleConfig, crack_polylines, disk_polygon, step_function
from abpoles.harness.oracle import bessel_j, bessel_zeros
from abpoles.mesh import generate

CFG = PoleConfig.from_lists([0.9, 0.6], [-1.0, 2.0], [0.2, 0.2])
HALF = PoleConfig.from_lists([0.9], [0.3], [0.5])


@pytest.fixture(scope="module")
def disk_modes(disk_mesh):
    cfg, mesh = disk_mesh
    res = solve_lowest(assemble_crack(mesh), n=6)
    return cfg, mesh, res


def samples(prof, delta, n=512):
    t = circle_angles(prof.config, n)
    z = prof.complex_value(delta * np.column_stack([np.cos(t), np.sin(t)]))
    return t, z


def test_profile_invariants():
    with pytest.raises(ValueError):
        AngularProfile(-1, 1.0, 0.0, HALF)
    with pytest.raises(ValueError):
        AngularProfile(0, -1.0, 0.0, CFG)
    p = AngularProfile(-1, 1.0, 0.0, CFG)
    assert p.order == pytest.approx(0.6)


@pytest.mark.parametrize("cfg, m", [(CFG, 0), (CFG, -1), (CFG, 2), (HALF, 0), (HALF, 1)])
def test_fit_self_consistent(cfg, m):
    prof = AngularProfile(m, 2.0, 0.7, cfg)
    fit = profile_from_samples(cfg, *samples(prof, 0.05), m, 0.05)
    assert fit.profile.beta == pytest.approx(2.0, abs=1e-6)
    assert fit.profile.gamma == pytest.approx(0.7, abs=1e-6)
    assert fit.residual < 1e-10


def test_fit_with_other_modes_present():
    a = AngularProfile(0, 2.0, 0.7, CFG)
    b = AngularProfile(-1, 5.0, 0.1, CFG)
    t, za = samples(a, 0.1)
    _, zb = samples(b, 0.1)
    fit = profile_from_samples(CFG, t, za + zb, 0, 0.1)
    assert fit.profile.beta == pytest.approx(2.0, abs=1e-9)
    assert fit.residual > 0.05 and fit.warning


def test_values_identity(rng):
    prof = AngularProfile(1, 1.7, 0.4, CFG)
    x = rng.uniform(-1, 1, (50, 2))
    r = np.linalg.norm(x, axis=1)
    t = np.mod(np.arctan2(x[:, 1], x[:, 0]), 2 * math.pi)
    mr = 1 + CFG.total_rho
    z = 1.7 * r**mr * np.exp(1j * (2 * math.pi * step_function(CFG, t) + mr * (0.4 - t)))
    phi, psi = eval_profiles(prof, x)
    np.testing.assert_allclose(phi, z.real, atol=1e-13)
    np.testing.assert_allclose(psi, z.imag, atol=1e-13)


@settings(max_examples=30)
@given(st.integers(-2, 2), st.floats(0.1, 3.0), st.floats(0.0, 6.0))
def test_homogeneity_and_bound(m, beta, gamma):
    prof = AngularProfile(m, beta, gamma, CFG)
    rng = np.random.default_rng(m + 7)
    x = rng.uniform(-1, 1, (40, 2))
    a, b = eval_profiles(prof, x)
    a2, b2 = eval_profiles(prof, 2 * x)
    np.testing.assert_allclose(a2, 2**prof.order * a, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(b2, 2**prof.order * b, rtol=1e-10, atol=1e-12)
    bound = beta * np.linalg.norm(x, axis=1) ** prof.order * (1 + 1e-12)
    assert np.all(np.abs(a) <= bound) and np.all(np.abs(b) <= bound)


def test_half_flux_first_sector():
    prof = AngularProfile(0, 1.5, 0.0, HALF)
    t = np.linspace(0.01, HALF.alphas[0] + math.pi - 0.01, 30)
    r = 0.3
    x = r * np.column_stack([np.cos(t), np.sin(t)])
    phi, psi = eval_profiles(prof, x)
    np.testing.assert_allclose(phi, 1.5 * math.sqrt(r) * np.cos(t / 2), atol=1e-14)
    np.testing.assert_allclose(psi, 0.0, atol=1e-14)


def test_gradient_matches_finite_differences(rng):
    prof = AngularProfile(0, 1.2, 0.5, CFG)
    x = rng.uniform(0.2, 0.8, (20, 2)) * np.array([1, 1])
    h = 1e-6
    g = prof.complex_gradient(x)
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        fd = (prof.complex_value(x + e) - prof.complex_value(x - e)) / (2 * h)
        np.testing.assert_allclose(g[:, k], fd, atol=1e-7)


def test_jump_closure_on_rays():
    for cfg, m in ((CFG, 0), (CFG, -1), (HALF, 1)):
        prof = AngularProfile(m, 1.0, 0.3, cfg)
        for thr, rho in zip(cfg.thresholds(), cfg.rhos):
            t = np.array([thr - 1e-10, thr + 1e-10])
            z = prof.complex_value(0.5 * np.column_stack([np.cos(t), np.sin(t)]))
            assert abs(z[1] - np.exp(2j * math.pi * rho) * z[0]) < 1e-8


def test_discrete_harmonicity():
    """Interpolated profile approaches the discrete harmonic extension of its boundary values."""
    dom = disk_polygon(96)
    c0 = crack_polylines(CFG, dom, 0.0)
    prof = AngularProfile(0, 1.0, 0.3, CFG)
    gaps = []
    for h in (0.2, 0.1, 0.05):
        mesh = generate(dom, c0, h, 5.0)
        s = assemble_crack(mesh)
        hv, hw = harmonic_extension(s, prof)
        iv, iw = profile_on_copies(mesh, prof)
        d = (iv - hv, iw - hw)
        gaps.append(math.sqrt(s.energy(d) / s.energy((iv, iw))))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[-1] < 0.05


def test_synthetic_order_recovered():
    dom = disk_polygon(96)
    mesh = generate(dom, crack_polylines(CFG, dom, 0.0), 0.08, 6.0)
    for m in (0, -1, 1):
        v, w = profile_on_copies(mesh, AngularProfile(m, 1.0, 0.3, CFG))
        fit = fit_vanishing_order(mesh, v, w, CFG, default_radii(mesh, 1.0))
        assert fit.m == m


def test_disk_orders(disk_modes):
    cfg, mesh, res = disk_modes
    radii = default_radii(mesh, 1.0)
    for i, m in ((0, 0), (2, -1)):
        v, w = res.field(i)
        assert fit_vanishing_order(mesh, v, w, cfg, radii).m == m


def test_disk_beta_matches_bessel(disk_modes):
    cfg, mesh, res = disk_modes
    nu = 0.3
    j = bessel_zeros(nu, 1)[0]
    # unit L2 norm: int_0^1 J_nu(j r)^2 r dr = J_{nu+1}(j)^2 / 2
    c = 1 / (math.sqrt(math.pi) * abs(bessel_j(nu + 1, j)))
    beta = c * (j / 2) ** nu / math.gamma(nu + 1)
    v, w = res.field(0)
    fit = fit_profile(mesh, v, w, cfg, 0, 0.125, lam=res.eigenvalues[0])
    assert fit.profile.beta == pytest.approx(beta, rel=0.02)


def test_phase_covariance(disk_modes):
    cfg, mesh, res = disk_modes
    v, w = res.field(0)
    base = fit_profile(mesh, v, w, cfg, 0, 0.125).profile
    tau = 0.4
    z = np.exp(1j * tau) * (v + 1j * w)
    rot = fit_profile(mesh, z.real, z.imag, cfg, 0, 0.125).profile
    assert rot.m == base.m
    assert rot.beta == pytest.approx(base.beta, rel=1e-10)
    shift = (rot.gamma - base.gamma - tau / 0.3) % base.gamma_period
    assert min(shift, base.gamma_period - shift) < 1e-9
