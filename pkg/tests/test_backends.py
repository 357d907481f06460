"""The jitted and pure-numpy kernel paths must agree numerically."""

import numpy as np
import pytest

from d2s.kernels import numba_impl, numpy_impl

rng = np.random.default_rng(0)


@pytest.mark.parametrize("dtype,tol", [(np.float64, 1e-12), (np.float32, 1e-4)])
def test_conv_kernels_agree(dtype, tol):
    for B, Ci, Co, H, W in [(1, 1, 4, 8, 8), (3, 5, 7, 12, 9), (2, 16, 16, 16, 16)]:
        x = rng.normal(size=(B, Ci, H, W)).astype(dtype)
        w = rng.normal(size=(Co, Ci, 3, 3)).astype(dtype)
        b = rng.normal(size=Co).astype(dtype)
        dy = rng.normal(size=(B, Co, H, W)).astype(dtype)
        np.testing.assert_allclose(numpy_impl.conv3x3_forward(x, w, b),
                                   numba_impl.conv3x3_forward(x, w, b),
                                   rtol=tol, atol=tol)
        np.testing.assert_allclose(numpy_impl.conv3x3_backward_input(dy, w),
                                   numba_impl.conv3x3_backward_input(dy, w),
                                   rtol=tol, atol=tol)
        dw1, db1 = numpy_impl.conv3x3_backward_params(x, dy)
        dw2, db2 = numba_impl.conv3x3_backward_params(x, dy)
        np.testing.assert_allclose(dw1, dw2, rtol=tol, atol=tol * 10)
        np.testing.assert_allclose(db1, db2, rtol=tol, atol=tol * 10)


@pytest.mark.parametrize("dtype,tol", [(np.float64, 1e-12), (np.float32, 1e-4)])
def test_warp_kernels_agree(dtype, tol):
    img = rng.normal(size=(3, 2, 10, 11)).astype(dtype)
    field = rng.uniform(-3, 3, size=(3, 2, 10, 11)).astype(dtype)
    dout = rng.normal(size=(3, 2, 10, 11)).astype(dtype)
    np.testing.assert_allclose(numpy_impl.warp_forward(img, field),
                               numba_impl.warp_forward(img, field),
                               rtol=tol, atol=tol)
    d1, f1 = numpy_impl.warp_backward(img, field, dout)
    d2, f2 = numba_impl.warp_backward(img, field, dout)
    np.testing.assert_allclose(d1, d2, rtol=tol, atol=tol)
    np.testing.assert_allclose(f1, f2, rtol=tol, atol=tol)


def test_backend_switching():
    from d2s import kernels

    prev = kernels.get_backend()
    try:
        kernels.set_backend("numpy")
        assert kernels.get_backend() == "numpy"
        kernels.set_backend("numba")
        assert kernels.get_backend() == "numba"
        with pytest.raises(ValueError):
            kernels.set_backend("cuda")
    finally:
        kernels.set_backend(prev)


def test_each_backend_is_deterministic():
    from d2s import kernels

    prev = kernels.get_backend()
    x = rng.normal(size=(2, 8, 16, 16)).astype(np.float32)
    w = rng.normal(size=(8, 8, 3, 3)).astype(np.float32)
    b = rng.normal(size=8).astype(np.float32)
    try:
        for name in ("numpy", "numba"):
            kernels.set_backend(name)
            a = kernels.conv3x3_forward(x, w, b)
            assert np.array_equal(a, kernels.conv3x3_forward(x, w, b))
    finally:
        kernels.set_backend(prev)
