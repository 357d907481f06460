"""Pure-numpy fallback implementations of the hot kernels.

Convolutions are lowered to an im2col buffer plus one BLAS matmul per
batch entry; the input-gradient pass reuses the forward kernel with
flipped, transposed weights, so every heavy step is a GEMM. On machines
with a fast BLAS this path is competitive with (often faster than) the
jitted loops at training sizes. All functions preserve the input dtype,
so the same code serves float32 training and float64 gradient checks.

Array layout is [batch, channel, height, width] throughout; displacement
fields are [batch, 2, height, width] with (dy, dx) in pixel units.
"""

import numpy as np


def _pad1(x):
    B, C, H, W = x.shape
    xp = np.zeros((B, C, H + 2, W + 2), dtype=x.dtype)
    xp[:, :, 1:-1, 1:-1] = x
    return xp


def _im2col(x):
    """3x3 patches of the zero-padded input as [B, 9*Ci, H*W].

    Patch-major layout (offset index before channel) lets each of the
    nine offsets be filled with one big strided copy.
    """
    B, Ci, H, W = x.shape
    xp = _pad1(x)
    cols = np.empty((B, 9, Ci, H, W), dtype=x.dtype)
    t = 0
    for ki in range(3):
        for kj in range(3):
            cols[:, t] = xp[:, :, ki:ki + H, kj:kj + W]
            t += 1
    return cols.reshape(B, 9 * Ci, H * W)


def _w_patch_major(w):
    """[Co, Ci, 3, 3] -> [Co, 9*Ci] matching the _im2col layout."""
    Co, Ci = w.shape[0], w.shape[1]
    return w.transpose(0, 2, 3, 1).reshape(Co, 9 * Ci)


def conv3x3_forward(x, w, b):
    B, Ci, H, W = x.shape
    Co = w.shape[0]
    y = np.matmul(_w_patch_major(w), _im2col(x))
    y += b[:, None]
    return y.reshape(B, Co, H, W)


def conv3x3_backward_input(dy, w):
    # Full correlation with flipped kernels == forward conv with the
    # transposed, rotated weight tensor.
    wf = np.ascontiguousarray(w[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
    zero = np.zeros(wf.shape[0], dtype=dy.dtype)
    return conv3x3_forward(dy, wf, zero)


def conv3x3_backward_params(x, dy):
    B, Ci, H, W = x.shape
    Co = dy.shape[1]
    cols = _im2col(x)
    dw9 = np.matmul(dy.reshape(B, Co, H * W), cols.transpose(0, 2, 1)).sum(axis=0)
    dw = dw9.reshape(Co, 3, 3, Ci).transpose(0, 3, 1, 2).copy()
    db = dy.sum(axis=(0, 2, 3))
    return dw, db


def _sample_coords(field, H, W):
    ii = np.arange(H, dtype=field.dtype)[:, None]
    jj = np.arange(W, dtype=field.dtype)[None, :]
    ry = ii + field[:, 0]
    rx = jj + field[:, 1]
    sy = np.clip(ry, 0.0, H - 1.0)
    sx = np.clip(rx, 0.0, W - 1.0)
    i0 = np.minimum(np.floor(sy), H - 2).astype(np.int64)
    j0 = np.minimum(np.floor(sx), W - 2).astype(np.int64)
    fy = sy - i0
    fx = sx - j0
    return ry, rx, i0, j0, fy, fx


def warp_forward(img, field):
    B, C, H, W = img.shape
    _, _, i0, j0, fy, fx = _sample_coords(field, H, W)
    im = img.transpose(0, 2, 3, 1)  # [B, H, W, C] so gathers broadcast over C
    bidx = np.arange(B)[:, None, None]
    v00 = im[bidx, i0, j0]
    v01 = im[bidx, i0, j0 + 1]
    v10 = im[bidx, i0 + 1, j0]
    v11 = im[bidx, i0 + 1, j0 + 1]
    fy = fy[..., None]
    fx = fx[..., None]
    out = ((1 - fy) * ((1 - fx) * v00 + fx * v01)
           + fy * ((1 - fx) * v10 + fx * v11))
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2))


def warp_backward(img, field, dout):
    B, C, H, W = img.shape
    ry, rx, i0, j0, fy, fx = _sample_coords(field, H, W)
    im = img.transpose(0, 2, 3, 1)
    bidx = np.arange(B)[:, None, None]
    v00 = im[bidx, i0, j0]
    v01 = im[bidx, i0, j0 + 1]
    v10 = im[bidx, i0 + 1, j0]
    v11 = im[bidx, i0 + 1, j0 + 1]
    do = dout.transpose(0, 2, 3, 1)
    fyc = fy[..., None]
    fxc = fx[..., None]

    dim = np.zeros_like(im)
    np.add.at(dim, (bidx, i0, j0), (1 - fyc) * (1 - fxc) * do)
    np.add.at(dim, (bidx, i0, j0 + 1), (1 - fyc) * fxc * do)
    np.add.at(dim, (bidx, i0 + 1, j0), fyc * (1 - fxc) * do)
    np.add.at(dim, (bidx, i0 + 1, j0 + 1), fyc * fxc * do)
    dimg = np.ascontiguousarray(dim.transpose(0, 3, 1, 2))

    # Derivative w.r.t. the sample coordinate; zero where the clamp is active.
    dvdy = ((1 - fxc) * (v10 - v00) + fxc * (v11 - v01))
    dvdx = ((1 - fyc) * (v01 - v00) + fyc * (v11 - v10))
    my = ((ry > 0) & (ry < H - 1)).astype(img.dtype)
    mx = ((rx > 0) & (rx < W - 1)).astype(img.dtype)
    dfield = np.empty_like(field)
    dfield[:, 0] = (dvdy * do).sum(axis=-1) * my
    dfield[:, 1] = (dvdx * do).sum(axis=-1) * mx
    return dimg, dfield
