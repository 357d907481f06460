"""Building blocks with explicit forward/backward passes.

Each layer caches whatever its backward pass needs on the instance; one
forward call is always followed by at most one backward call within a
training iteration, so the cache is never stale. Gradients accumulate
into ``dw``/``db`` until ``zero_grad``.
"""

import numpy as np

from . import kernels

LEAKY_SLOPE = 0.1


class Conv3x3:
    """Same-size 3x3 convolution with optional leaky-ReLU activation.

    Weights use fan-in scaled normal init; ``zero_init`` produces an
    exactly-zero layer (used for the displacement head so the warp
    starts at the identity).
    """

    def __init__(self, cin, cout, rng, dtype=np.float32, act=True, zero_init=False):
        self.cin = cin
        self.cout = cout
        self.act = act
        if zero_init:
            self.w = np.zeros((cout, cin, 3, 3), dtype=dtype)
        else:
            std = np.sqrt(2.0 / (cin * 9))
            self.w = rng.normal(0.0, std, size=(cout, cin, 3, 3)).astype(dtype)
        self.b = np.zeros(cout, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self._x = None
        self._z = None

    def forward(self, x):
        self._x = x
        z = kernels.conv3x3_forward(x, self.w, self.b)
        if self.act:
            self._z = z
            return np.maximum(z, z.dtype.type(LEAKY_SLOPE) * z)
        return z

    def backward(self, dy):
        if self.act:
            dy = dy * np.where(self._z > 0, 1.0, LEAKY_SLOPE).astype(dy.dtype)
        dw, db = kernels.conv3x3_backward_params(self._x, dy)
        self.dw += dw
        self.db += db
        return kernels.conv3x3_backward_input(dy, self.w)

    def zero_grad(self):
        self.dw[...] = 0
        self.db[...] = 0


def avgpool2(x):
    B, C, H, W = x.shape
    return x.reshape(B, C, H // 2, 2, W // 2, 2).mean(axis=(3, 5))


def avgpool2_backward(dy):
    B, C, H, W = dy.shape
    out = np.empty((B, C, H * 2, W * 2), dtype=dy.dtype)
    q = dy * dy.dtype.type(0.25)
    out[:, :, 0::2, 0::2] = q
    out[:, :, 0::2, 1::2] = q
    out[:, :, 1::2, 0::2] = q
    out[:, :, 1::2, 1::2] = q
    return out


def upsample2(x):
    return x.repeat(2, axis=2).repeat(2, axis=3)


def upsample2_backward(dy):
    B, C, H, W = dy.shape
    return dy.reshape(B, C, H // 2, 2, W // 2, 2).sum(axis=(3, 5))


def pad_to_multiple(x, multiple):
    """Reflect-pad bottom/right so H and W divide ``multiple``."""
    H, W = x.shape[2], x.shape[3]
    ph = (-H) % multiple
    pw = (-W) % multiple
    if ph == 0 and pw == 0:
        return x, (0, 0)
    if ph >= H or pw >= W:
        raise ValueError(f"input {H}x{W} too small to pad to a multiple of {multiple}")
    xp = np.pad(x, ((0, 0), (0, 0), (0, ph), (0, pw)), mode="reflect")
    return xp, (ph, pw)


def pad_to_multiple_backward(dyp, pad):
    """Fold gradients of reflected rows/cols back onto their sources."""
    ph, pw = pad
    if ph == 0 and pw == 0:
        return dyp
    H = dyp.shape[2] - ph
    W = dyp.shape[3] - pw
    dyp = dyp.copy()
    for p in range(pw):
        dyp[:, :, :, W - 2 - p] += dyp[:, :, :, W + p]
    dx = dyp[:, :, :, :W].copy()
    for p in range(ph):
        dx[:, :, H - 2 - p] += dyp[:, :, H + p, :W]
    return dx[:, :, :H]
