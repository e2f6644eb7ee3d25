import numpy as np
import pytest

from pplbp import kernels
from pplbp.diffusion import assemble_system

pytestmark = pytest.mark.skipif(len(kernels.available) < 2, reason="compiled extension not built")


def test_backends_listed():
    assert "python" in kernels.available


def test_matvec_agree(rng):
    x = rng.normal(size=(11, 7))
    wx, wy = rng.uniform(0, 3, (10, 7)), rng.uniform(0, 3, (11, 6))
    a = kernels.get("python").stencil_matvec(x, wx, wy)
    b = kernels.get("cython").stencil_matvec(x, wx, wy)
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-13)


def test_pcg_agree(rng):
    u = rng.uniform(0, 255, (24, 17))
    sys = assemble_system(__import__("pplbp").GrayImage(u))
    args = (-sys.off_x, -sys.off_y, sys.diag, sys.rhs, u, 1e-10, 1000)
    xa, ia, _ = kernels.get("python").pcg(*args)
    xb, ib, _ = kernels.get("cython").pcg(*args)
    assert abs(ia - ib) <= 1
    np.testing.assert_allclose(xa, xb, rtol=0, atol=1e-7)


@pytest.mark.parametrize("P,R", [(8, 1), (16, 2), (24, 3), (24, 4), (12, 1.5)])
def test_lbp_codes_identical(rng, P, R):
    data = rng.integers(0, 256, (30, 26)).astype(float)
    a = kernels.get("python").lbp_codes(data, P, R)
    b = kernels.get("cython").lbp_codes(data, P, R)
    assert np.array_equal(a, b)


def test_env_override_rejects_unknown(monkeypatch):
    monkeypatch.setenv("PPLBP_BACKEND", "fortran")
    with pytest.raises(ImportError):
        kernels._select()
    monkeypatch.setenv("PPLBP_BACKEND", "python")
    assert kernels._select() == "python"
