import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from abpoles.asymptotics import AngularProfile
from abpoles.eigensolve import assemble_crack, solve_lowest
from abpoles.energy import (
    L_eps,
    check_Ee_sup,
    cutoff,
    extrapolate_truncation,
    hardy_check,
    hardy_constant,
    predicted_shift,
    random_constrained_fields,
    solve_exterior,
    solve_interior,
    truncation_exponent,
)
from abpoles.geometry import PoleConfig
from abpoles.mesh import annulus_mesh

HALF = PoleConfig.from_lists([0.5], [0.0], [0.5])


@pytest.fixture(scope="module")
def interior(pair_meshes):
    mesh_eps, mesh0 = pair_meshes
    s0 = assemble_crack(mesh0)
    res = solve_lowest(s0, n=4)
    v, w = res.field(0)
    se = assemble_crack(mesh_eps)
    return se, solve_interior(se, v, w, res.eigenvalues[0], 0.2, mesh0=mesh0)


def test_L_eps_constant_data():
    # rho = 1/2: integrand (b - 1) dv phi = -2 on a segment of length eps * r
    one = lambda j, r: np.ones_like(r)
    zero = lambda j, r: np.zeros_like(r)
    assert L_eps(one, zero, one, zero, HALF, 2.0) == pytest.approx(-2.0, rel=1e-12)
    assert L_eps(one, zero, one, zero, HALF, 0.5) == pytest.approx(-0.5, rel=1e-12)


def test_L_eps_zero_data():
    zero = lambda j, r: np.zeros_like(r)
    one = lambda j, r: np.ones_like(r)
    assert L_eps(one, one, zero, zero, HALF, 2.0) == 0.0


def test_predicted_shift():
    assert predicted_shift(1.0, 0.0, 0, 0.3, 0.5) == pytest.approx(2 * 0.5**0.6)
    assert predicted_shift(1.3, -1.3, 0, 0.3, 0.5) == 0.0
    a = predicted_shift(0.7, 0.1, -1, 0.3, 0.1)
    b = predicted_shift(0.7, 0.1, -1, 0.3, 0.05)
    assert a / b == pytest.approx(2**1.4)


def test_cutoff_properties():
    s = np.linspace(0, 3, 3001)
    eta = cutoff(s)
    assert np.all(eta[s <= 1] == 1) and np.all(eta[s >= 2] == 0)
    assert np.all(np.diff(eta) <= 0)
    assert np.max(np.abs(np.diff(eta) / np.diff(s))) <= 1.5 + 1e-9


def test_interior_zero_data(pair_meshes):
    se = assemble_crack(pair_meshes[0])
    z = np.zeros(pair_meshes[0].n_dofs)
    r = solve_interior(se, z, z, 10.0, 0.2)
    assert r.energy == 0 and not r.V.any() and not r.W.any()


def test_interior_minimizes(interior):
    se, r = interior
    assert r.energy <= r.lift_energy
    assert r.residual < 1e-8
    assert math.isfinite(r.load_data)


def test_interior_sup_identity(interior):
    se, r = interior
    chk = check_Ee_sup(se, r, n_samples=20)
    assert chk.ok, chk


def test_exterior_quadratic():
    prof = AngularProfile(0, 1.0, 0.3, PoleConfig.from_lists([0.8], [0.5], [0.3]))
    a = solve_exterior(prof, 4.0, h=0.25)
    b = solve_exterior(AngularProfile(0, 2.0, 0.3, prof.config), 4.0, h=0.25, meshes=a.meshes)
    assert b.energy == pytest.approx(4 * a.energy, rel=1e-9)
    assert b.L_data == pytest.approx(4 * a.L_data, rel=1e-9)
    z = solve_exterior(AngularProfile(0, 0.0, 0.3, prof.config), 4.0, h=0.25, meshes=a.meshes)
    assert z.energy == 0.0


def test_exterior_rejects_small_radius():
    prof = AngularProfile(0, 1.0, 0.0, HALF)
    with pytest.raises(ValueError):
        solve_exterior(prof, 1.5)


def test_truncation_extrapolation_exact():
    R = np.array([4.0, 8.0, 16.0])
    E = 2.5 + 3.0 * R**-0.8
    E_inf, p, p_obs = extrapolate_truncation(R, E, 0.6)
    assert p_obs == pytest.approx(0.8, rel=1e-10)
    assert E_inf == pytest.approx(2.5, rel=1e-10)
    assert truncation_exponent(0.3) == pytest.approx(0.6)
    assert truncation_exponent(0.8) == pytest.approx(0.4)


@given(st.floats(0.01, 0.99))
def test_hardy_constant(rho):
    c = hardy_constant(rho)
    assert c == pytest.approx(1 / min(rho, 1 - rho) ** 2)
    assert hardy_constant(rho + 3) == pytest.approx(c)
    assert c >= 4


@pytest.mark.parametrize("rho", [0.2, 0.5])
def test_hardy_random_fields(rho):
    mesh = annulus_mesh(PoleConfig.from_lists([0.5], [0.7], [rho]), 1.0, 2.0, 0.2)
    fields, K1 = random_constrained_fields(mesh, 30, seed=3)
    for v, w in fields:
        assert hardy_check(mesh, v, w, rho, K1=K1).ok
    z = np.zeros(mesh.n_dofs)
    res = hardy_check(mesh, z, z, rho, K1=K1)
    assert res.ok and res.lhs == 0 and res.ratio == 0
