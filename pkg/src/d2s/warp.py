"""Differentiable bilinear warping and the field smoothness penalty.

A displacement field is a [2, H, W] array of (dy, dx) pixel offsets on
the target grid: the warped image samples the source at (i+dy, j+dx),
clamping out-of-bounds coordinates to the border.
"""

import numpy as np

from . import kernels


def warp(img, field):
    """Warp one [H, W] image by a [2, H, W] displacement field."""
    if img.ndim != 2 or field.shape != (2,) + img.shape:
        raise ValueError(f"shape mismatch: image {img.shape} vs field {field.shape}")
    if not np.isfinite(field).all():
        raise ValueError("non-finite values in displacement field")
    return kernels.warp_forward(img[None, None], field[None])[0, 0]


def warp_batch(imgs, fields):
    """Batched warp: imgs [B, C, H, W], fields [B, 2, H, W]."""
    return kernels.warp_forward(imgs, fields)


def warp_batch_backward(imgs, fields, dout):
    return kernels.warp_backward(imgs, fields, dout)


def smoothness_penalty(field):
    """Mean squared forward-difference gradient of the displacement.

    Sum of squared diffs along both axes and both components, divided by
    2*H*W (boundary differences count as zero). A field that is linear
    in j with slope a therefore scores a**2/2 up to the boundary column.
    """
    di = field[:, 1:, :] - field[:, :-1, :]
    dj = field[:, :, 1:] - field[:, :, :-1]
    n = 2.0 * field.shape[1] * field.shape[2]
    return float(((di * di).sum() + (dj * dj).sum()) / n)


def smoothness_penalty_grad(field):
    """Gradient of ``smoothness_penalty`` w.r.t. the field."""
    n = field.dtype.type(2.0 * field.shape[1] * field.shape[2])
    di = field[:, 1:, :] - field[:, :-1, :]
    dj = field[:, :, 1:] - field[:, :, :-1]
    g = np.zeros_like(field)
    g[:, 1:, :] += 2.0 * di / n
    g[:, :-1, :] -= 2.0 * di / n
    g[:, :, 1:] += 2.0 * dj / n
    g[:, :, :-1] -= 2.0 * dj / n
    return g
