import math

import numpy as np
import pytest

from abpoles.geometry import PoleConfig, step_function
from abpoles.gauge import multi_potential, theta_grad_fd, theta_pole, theta_total, vector_potential


@pytest.mark.parametrize(
    "b, rho, x, expected",
    [((0, 0), 1.0, (1, 0), (0, 1)), ((0, 0), 1.0, (0, 1), (-1, 0)), ((1, 0), 0.3, (1, 2), (-0.15, 0))],
)
def test_vector_potential(b, rho, x, expected):
    np.testing.assert_allclose(vector_potential(b, rho, x), expected, atol=1e-15)


def test_vector_potential_at_pole():
    with pytest.raises(ValueError):
        vector_potential((0, 0), 0.3, (0, 0))


def test_single_pole_sum():
    cfg = PoleConfig.from_lists([0.5], [0.7], [0.3])
    x = np.array([[0.3, -0.2], [1.0, 0.4]])
    np.testing.assert_allclose(multi_potential(cfg, x, 0.4), vector_potential(cfg.positions(0.4)[0], 0.3, x))


def test_far_field(rng):
    cfg = PoleConfig.from_lists([0.9, 0.6], [-1.0, 2.0], [0.2, 0.35])
    x = rng.normal(size=(50, 2))
    x = 10 * x / np.linalg.norm(x, axis=1)[:, None]
    for eps in (0.1, 0.05):
        err = np.linalg.norm(multi_potential(cfg, x, eps) - multi_potential(cfg, x, 0.0), axis=1)
        assert np.all(err <= 2 * eps / 100)


def test_opposite_fluxes_on_bisector():
    # two poles (0, +-1) with fluxes +-rho: the y-components cancel on the x-axis
    x = np.column_stack([np.linspace(-3, 3, 13), np.zeros(13)])
    a = vector_potential((0, 1), 0.3, x) + vector_potential((0, -1), -0.3, x)
    np.testing.assert_allclose(a[:, 1], 0, atol=1e-15)


def test_theta_pole_angle():
    t = np.linspace(0.1, 2 * math.pi - 0.1, 20)
    x = np.column_stack([np.cos(t), np.sin(t)])
    np.testing.assert_allclose(theta_pole((0, 0), 0.0, x), t)
    b, alpha = np.array([0.2, -0.1]), 1.0
    t = np.linspace(-alpha + 0.05, -alpha + 2 * math.pi - 0.05, 20)
    x = b + 0.7 * np.column_stack([np.cos(t), np.sin(t)])
    np.testing.assert_allclose(theta_pole(b, alpha, x), alpha + t, atol=1e-12)


def test_theta_pole_gradient():
    x, h = np.array([2.0, 1.0]), 1e-6
    g = [(theta_pole((0, 0), 1.0, x + h * e) - theta_pole((0, 0), 1.0, x - h * e)) / (2 * h) for e in np.eye(2)]
    np.testing.assert_allclose(g, vector_potential((0, 0), 1.0, x), atol=1e-6)


def test_theta_total_limit_value():
    rho = 0.37
    cfg = PoleConfig.from_lists([0.5], [0.0], [rho])
    x = np.array([0.0, 0.4])
    assert theta_total(cfg, 0.0, x) == pytest.approx(rho * math.pi / 2 + math.pi * rho)


def test_theta_total_angular_identity():
    cfg = PoleConfig.from_lists([0.9, 0.6], [-1.0, 2.0], [0.2, 0.35])
    t = np.linspace(0.01, 2 * math.pi - 0.01, 400)
    t = t[np.min(np.abs(t[:, None] - np.mod(cfg.thresholds(), 2 * math.pi)[None]), axis=1) > 1e-3]
    x = 0.3 * np.column_stack([np.cos(t), np.sin(t)])
    rho = cfg.total_rho
    expected = rho * t - 2 * math.pi * step_function(cfg, t) + math.pi * rho - np.dot(cfg.rhos, cfg.alphas)
    np.testing.assert_allclose(theta_total(cfg, 0.0, x), expected, atol=1e-12)


@pytest.mark.parametrize("eps", [0.0, 0.3, 1.0])
def test_gradient_equals_potential(eps, rng):
    cfg = PoleConfig.from_lists([0.9, 0.6, 0.4], [-1.0, 2.0, 0.5], [0.2, 0.35, 0.1])
    x = rng.uniform(-1.5, 1.5, (10_000, 2))
    x = x[np.min(np.linalg.norm(x[:, None] - cfg.positions(eps)[None], axis=2), axis=1) > 1e-3]
    A = multi_potential(cfg, x, eps)
    G = theta_grad_fd(cfg, eps, x)
    err = np.linalg.norm(G - A, axis=1) / np.linalg.norm(A, axis=1)
    assert err.max() < 1e-6


def test_phase_jump_across_crack():
    cfg = PoleConfig.from_lists([0.8], [0.4], [0.3])
    eps = 0.5
    u, nu = cfg.poles[0].direction, cfg.poles[0].normal
    for s in (-0.7, -0.2, 0.1, 0.3):  # points on the crack, both sides of the origin
        p = s * u
        plus = theta_total(cfg, eps, p + 1e-9 * nu)
        minus = theta_total(cfg, eps, p - 1e-9 * nu)
        ratio = np.exp(1j * (plus - minus))
        assert abs(abs(np.angle(ratio)) - 2 * math.pi * 0.3) < 1e-6
