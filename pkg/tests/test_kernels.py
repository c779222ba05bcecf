import numpy as np
import pytest

from abpoles import kernels
from abpoles.eigensolve import assemble_magnetic, assemble_p1
from abpoles.geometry import PoleConfig

pytestmark = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernels not built")


def test_p1_backends_agree(pair_meshes):
    mesh = pair_meshes[0]
    Kc, Mc = assemble_p1(mesh, backend="cython")
    Kp, Mp = assemble_p1(mesh, backend="python")
    assert abs(Kc - Kp).max() < 1e-12
    assert abs(Mc - Mp).max() < 1e-14


@pytest.mark.parametrize("eps", [0.0, 0.2])
def test_magnetic_backends_agree(pair_meshes, two_poles, eps):
    mesh = pair_meshes[0] if eps else pair_meshes[1]
    a = assemble_magnetic(mesh, two_poles, eps, backend="cython")
    b = assemble_magnetic(mesh, two_poles, eps, backend="python")
    assert abs(a.K_full - b.K_full).max() < 1e-10 * abs(b.K_full).max()


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_reference_element():
    P = np.array([[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]])
    for name in ("cython", "python"):
        K, M = kernels.p1_elements(P, backend=name)
        np.testing.assert_allclose(K[0], [[1, -0.5, -0.5], [-0.5, 0.5, 0], [-0.5, 0, 0.5]], atol=1e-15)
        np.testing.assert_allclose(M[0].sum(), 0.5, rtol=1e-14)
