import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abpoles.geometry import (
    DomainSpec,
    PoleConfig,
    crack_polylines,
    jump_coeffs,
    jump_matrix,
    rectangle,
    reduce_angle,
    step_function,
)


def single(alpha, rho, r=0.5):
    return PoleConfig.from_lists([r], [alpha], [rho])


def test_step_function_single_pole():
    cfg = single(0.0, 0.3)
    assert step_function(cfg, 0.0) == 0.0
    assert step_function(cfg, math.pi) == pytest.approx(0.3)
    assert step_function(cfg, math.pi - 1e-6) == 0.0


def test_step_function_two_opposite_poles():
    cfg = PoleConfig.from_lists([0.5, 0.5], [math.pi / 2, -math.pi / 2 + 0.1], [0.25, 0.25])
    # thresholds 3pi/2 and pi/2 + 0.1
    assert step_function(cfg, math.pi) == pytest.approx(0.25)


def test_step_threshold_at_two_pi_is_empty():
    cfg = single(math.pi, 0.4)
    t = np.linspace(0, 2 * math.pi, 100, endpoint=False)
    assert np.all(step_function(cfg, t) == 0)


@pytest.mark.parametrize(
    "rho, expected",
    [(0.5, (-1.0, 0.0)), (0.25, (0.0, 1.0)), (0.3, (-0.309017, 0.951057))],
)
def test_jump_coeffs(rho, expected):
    assert jump_coeffs(rho) == pytest.approx(expected, abs=1e-6)


@given(st.floats(-3, 3, allow_nan=False))
def test_jump_coeffs_periodic(rho):
    np.testing.assert_allclose(jump_matrix(rho), jump_matrix(rho + 1), atol=1e-12)
    R = jump_matrix(rho)
    np.testing.assert_allclose(R @ R.T, np.eye(2), atol=1e-14)


@settings(max_examples=50)
@given(
    st.lists(st.floats(-math.pi + 0.01, math.pi), min_size=1, max_size=3),
    st.lists(st.floats(0.05, 0.3), min_size=3, max_size=3),
)
def test_step_jump_factor(alphas, rhos):
    try:
        cfg = PoleConfig.from_lists([0.5] * len(alphas), alphas, rhos[: len(alphas)])
    except ValueError:
        return
    for thr, rho in zip(cfg.thresholds(), cfg.rhos):
        if thr >= 2 * math.pi - 1e-9 or any(abs(thr - o) < 1e-6 for o in cfg.thresholds() if o != thr):
            continue
        fm = step_function(cfg, thr - 1e-9)
        fp = step_function(cfg, thr)
        b, d = jump_coeffs(rho)
        jump = abs(np.exp(2j * math.pi * fp) - (b + 1j * d) * np.exp(2j * math.pi * fm))
        assert jump < 1e-12


@pytest.mark.parametrize(
    "r, alpha, rho",
    [
        ([0.5, 0.5], [0.3, 0.3 + math.pi], [0.2, 0.2]),  # collinear
        ([0.5, 0.5], [0.3, 0.3], [0.2, 0.2]),  # coincident
        ([0.5], [0.3], [1.0]),  # integer flux
        ([0.5, 0.5], [0.3, 1.3], [0.6, 0.6]),  # total outside (0, 1)
        ([1.5], [0.3], [0.2]),
    ],
)
def test_pole_config_rejects(r, alpha, rho):
    with pytest.raises(ValueError):
        PoleConfig.from_lists(r, alpha, rho)


def test_angles_reduced():
    cfg = single(3 * math.pi, 0.2)
    assert cfg.alphas[0] == pytest.approx(math.pi)
    assert reduce_angle(-math.pi) == pytest.approx(math.pi)
    assert -math.pi < reduce_angle(7.0) <= math.pi


def test_crack_through_square():
    dom = rectangle(-1, -1, 1, 1)
    cs = crack_polylines(single(0.0, 0.3), dom, 1.0)
    c = cs[0]
    np.testing.assert_allclose(c.start, [-1.0, 0.0])
    np.testing.assert_allclose(c.tip, [0.5, 0.0])
    assert c.normal @ c.direction == pytest.approx(0.0)


def test_crack_at_zero_eps_is_half_line(two_poles, domain):
    cs = crack_polylines(two_poles, domain, 0.0)
    for c in cs:
        assert c.t_tip == 0
        assert len(c.polyline()) == 2
        assert c.t_start < 0


def test_vertical_cracks_meet_at_origin():
    cfg = PoleConfig.from_lists([0.5, 0.5], [math.pi / 2, -math.pi / 2 + 0.01], [0.2, 0.2])
    cs = crack_polylines(cfg, rectangle(-1, -1, 1, 1), 0.5)
    a, b = cs[0], cs[1]
    assert not np.allclose(a.direction, b.direction)


def test_tip_outside_rejected():
    with pytest.raises(ValueError):
        crack_polylines(single(0.0, 0.3, r=0.9), rectangle(-1, -1, 0.5, 1), 1.0)


def test_domain_validation():
    with pytest.raises(ValueError):
        DomainSpec(np.array([[1, 1], [2, 1], [2, 2]]))  # origin outside
    with pytest.raises(ValueError):
        DomainSpec(np.array([[-1, -1], [1, 1], [1, -1], [-1, 1]]))  # self-intersecting
    d = DomainSpec(np.array([[-1, -1], [-1, 1], [1, 1], [1, -1]]))  # clockwise input
    assert d.area == pytest.approx(4.0)
