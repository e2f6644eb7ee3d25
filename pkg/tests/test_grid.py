import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pplbp.grid import GrayImage, InvalidMeshError, MeshParams, flat_index, new_image, transpose


def test_new_image_fill():
    img = new_image(3, 3, 0.0)
    assert img.shape == (3, 3)
    assert np.all(img.data == 0.0)
    assert np.all(new_image(3, 3, 7.5).data == 7.5)


@pytest.mark.parametrize("shape", [(2, 5), (5, 2), (0, 0)])
def test_new_image_rejects_small(shape):
    with pytest.raises(InvalidMeshError):
        new_image(*shape, 1.0)


def test_image_rejects_nonfinite():
    data = np.zeros((3, 3))
    data[1, 1] = np.nan
    with pytest.raises(InvalidMeshError):
        GrayImage(data)


def test_image_is_read_only():
    img = new_image(4, 4, 1.0)
    with pytest.raises(ValueError):
        img.data[0, 0] = 2.0


def test_transpose_shape_and_constant():
    img = GrayImage(np.arange(12.0).reshape(3, 4))
    t = transpose(img)
    assert t.shape == (4, 3)
    assert t[2, 1] == img[1, 2]
    c = new_image(5, 5, 3.0)
    assert transpose(c) == c


@given(arrays(np.float64, st.tuples(st.integers(3, 9), st.integers(3, 9)), elements=st.floats(0, 255)))
def test_transpose_involution(a):
    img = GrayImage(a)
    assert np.array_equal(transpose(transpose(img)).data, img.data)


def test_flat_index_column_stacking():
    # k = (j-1)*m + i in 1-based terms
    m, l = 4, 3
    img = GrayImage(np.arange(m * l, dtype=float).reshape(m, l))
    v = img.as_vector()
    for i in range(m):
        for j in range(l):
            assert v[flat_index(i, j, m)] == img[i, j]
    assert GrayImage.from_vector(v, m, l) == img


def test_mesh_defaults_and_validation():
    p = MeshParams()
    assert (p.dx, p.dy, p.dt, p.tau) == (1.0, 1.0, 1.0, 5.0)
    with pytest.raises(InvalidMeshError):
        MeshParams(dt=0.0)
    with pytest.raises(InvalidMeshError):
        MeshParams(tau=-1.0)
    MeshParams(tau=0.0)
