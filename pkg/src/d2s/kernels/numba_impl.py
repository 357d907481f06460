"""Jitted implementations of the hot kernels.

Plain nested loops compiled with ``@njit``. Every parallel loop writes a
disjoint output slice, so results are bit-reproducible run to run
regardless of thread count. Lazy compilation means each dtype (float32
for training, float64 for gradient checks) gets its own specialization
on first use; ``cache=True`` persists them across processes.
"""

import numpy as np
from numba import njit, prange

_jit = dict(parallel=True, fastmath=True, cache=True)


@njit(**_jit)
def conv3x3_forward(x, w, b):
    B, Ci, H, W = x.shape
    Co = w.shape[0]
    xp = np.zeros((B, Ci, H + 2, W + 2), dtype=x.dtype)
    for bb in range(B):
        for ci in range(Ci):
            xp[bb, ci, 1:H + 1, 1:W + 1] = x[bb, ci]
    y = np.empty((B, Co, H, W), dtype=x.dtype)
    for bco in prange(B * Co):
        bb = bco // Co
        co = bco % Co
        for i in range(H):
            row = np.zeros(W, dtype=x.dtype)
            for ci in range(Ci):
                for ki in range(3):
                    xrow = xp[bb, ci, i + ki]
                    w0 = w[co, ci, ki, 0]
                    w1 = w[co, ci, ki, 1]
                    w2 = w[co, ci, ki, 2]
                    for j in range(W):
                        row[j] += w0 * xrow[j] + w1 * xrow[j + 1] + w2 * xrow[j + 2]
            for j in range(W):
                y[bb, co, i, j] = row[j] + b[co]
    return y


@njit(**_jit)
def conv3x3_backward_input(dy, w):
    # Full correlation with flipped kernels, written as a gather so the
    # inner loop accumulates into one contiguous row.
    B, Co, H, W = dy.shape
    Ci = w.shape[1]
    dyp = np.zeros((B, Co, H + 2, W + 2), dtype=dy.dtype)
    for bb in range(B):
        for co in range(Co):
            dyp[bb, co, 1:H + 1, 1:W + 1] = dy[bb, co]
    dx = np.empty((B, Ci, H, W), dtype=dy.dtype)
    for bci in prange(B * Ci):
        bb = bci // Ci
        ci = bci % Ci
        for i in range(H):
            row = np.zeros(W, dtype=dy.dtype)
            for co in range(Co):
                for ki in range(3):
                    grow = dyp[bb, co, i + ki]
                    w0 = w[co, ci, 2 - ki, 2]
                    w1 = w[co, ci, 2 - ki, 1]
                    w2 = w[co, ci, 2 - ki, 0]
                    for j in range(W):
                        row[j] += w0 * grow[j] + w1 * grow[j + 1] + w2 * grow[j + 2]
            dx[bb, ci, i] = row
    return dx


@njit(**_jit)
def conv3x3_backward_params(x, dy):
    B, Ci, H, W = x.shape
    Co = dy.shape[1]
    xp = np.zeros((B, Ci, H + 2, W + 2), dtype=x.dtype)
    for bb in range(B):
        for ci in range(Ci):
            xp[bb, ci, 1:H + 1, 1:W + 1] = x[bb, ci]
    dw = np.empty((Co, Ci, 3, 3), dtype=x.dtype)
    db = np.zeros(Co, dtype=x.dtype)
    for coci in prange(Co * Ci):
        co = coci // Ci
        ci = coci % Ci
        acc = np.zeros((3, 3), dtype=x.dtype)
        for bb in range(B):
            for i in range(H):
                dyrow = dy[bb, co, i]
                x0 = xp[bb, ci, i]
                x1 = xp[bb, ci, i + 1]
                x2 = xp[bb, ci, i + 2]
                a00 = x.dtype.type(0.0)
                a01 = x.dtype.type(0.0)
                a02 = x.dtype.type(0.0)
                a10 = x.dtype.type(0.0)
                a11 = x.dtype.type(0.0)
                a12 = x.dtype.type(0.0)
                a20 = x.dtype.type(0.0)
                a21 = x.dtype.type(0.0)
                a22 = x.dtype.type(0.0)
                for j in range(W):
                    g = dyrow[j]
                    a00 += g * x0[j]
                    a01 += g * x0[j + 1]
                    a02 += g * x0[j + 2]
                    a10 += g * x1[j]
                    a11 += g * x1[j + 1]
                    a12 += g * x1[j + 2]
                    a20 += g * x2[j]
                    a21 += g * x2[j + 1]
                    a22 += g * x2[j + 2]
                acc[0, 0] += a00
                acc[0, 1] += a01
                acc[0, 2] += a02
                acc[1, 0] += a10
                acc[1, 1] += a11
                acc[1, 2] += a12
                acc[2, 0] += a20
                acc[2, 1] += a21
                acc[2, 2] += a22
        dw[co, ci] = acc
    for co in range(Co):
        acc2 = x.dtype.type(0.0)
        for bb in range(B):
            for i in range(H):
                for j in range(W):
                    acc2 += dy[bb, co, i, j]
        db[co] = acc2
    return dw, db


@njit(**_jit)
def warp_forward(img, field):
    B, C, H, W = img.shape
    out = np.empty_like(img)
    for bb in prange(B):
        for i in range(H):
            for j in range(W):
                sy = i + field[bb, 0, i, j]
                sx = j + field[bb, 1, i, j]
                if sy < 0.0:
                    sy = 0.0
                elif sy > H - 1.0:
                    sy = H - 1.0
                if sx < 0.0:
                    sx = 0.0
                elif sx > W - 1.0:
                    sx = W - 1.0
                i0 = int(sy)
                if i0 > H - 2:
                    i0 = H - 2
                j0 = int(sx)
                if j0 > W - 2:
                    j0 = W - 2
                fy = sy - i0
                fx = sx - j0
                for c in range(C):
                    v00 = img[bb, c, i0, j0]
                    v01 = img[bb, c, i0, j0 + 1]
                    v10 = img[bb, c, i0 + 1, j0]
                    v11 = img[bb, c, i0 + 1, j0 + 1]
                    out[bb, c, i, j] = ((1 - fy) * ((1 - fx) * v00 + fx * v01)
                                        + fy * ((1 - fx) * v10 + fx * v11))
    return out


@njit(**_jit)
def warp_backward(img, field, dout):
    B, C, H, W = img.shape
    dimg = np.zeros_like(img)
    dfield = np.zeros_like(field)
    for bb in prange(B):
        for i in range(H):
            for j in range(W):
                ry = i + field[bb, 0, i, j]
                rx = j + field[bb, 1, i, j]
                sy = ry
                sx = rx
                if sy < 0.0:
                    sy = 0.0
                elif sy > H - 1.0:
                    sy = H - 1.0
                if sx < 0.0:
                    sx = 0.0
                elif sx > W - 1.0:
                    sx = W - 1.0
                i0 = int(sy)
                if i0 > H - 2:
                    i0 = H - 2
                j0 = int(sx)
                if j0 > W - 2:
                    j0 = W - 2
                fy = sy - i0
                fx = sx - j0
                gy = img.dtype.type(0.0)
                gx = img.dtype.type(0.0)
                for c in range(C):
                    g = dout[bb, c, i, j]
                    v00 = img[bb, c, i0, j0]
                    v01 = img[bb, c, i0, j0 + 1]
                    v10 = img[bb, c, i0 + 1, j0]
                    v11 = img[bb, c, i0 + 1, j0 + 1]
                    dimg[bb, c, i0, j0] += (1 - fy) * (1 - fx) * g
                    dimg[bb, c, i0, j0 + 1] += (1 - fy) * fx * g
                    dimg[bb, c, i0 + 1, j0] += fy * (1 - fx) * g
                    dimg[bb, c, i0 + 1, j0 + 1] += fy * fx * g
                    gy += ((1 - fx) * (v10 - v00) + fx * (v11 - v01)) * g
                    gx += ((1 - fy) * (v01 - v00) + fy * (v11 - v10)) * g
                if ry > 0.0 and ry < H - 1.0:
                    dfield[bb, 0, i, j] = gy
                if rx > 0.0 and rx < W - 1.0:
                    dfield[bb, 1, i, j] = gx
    return dimg, dfield
