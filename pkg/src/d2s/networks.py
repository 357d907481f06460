"""Encoder-decoder networks and the public single/multi-frame ops.

One ``UNet`` class serves all three learnable components: the
single-frame denoiser (1 input channel), the multi-frame denoiser
(2*(N+1) channels) and the displacement regressor (2 in, 2 out, with a
zero-initialized head so training starts from the identity transform).
The denoisers share the architecture except for the first layer's
input-channel count.

Inputs whose spatial size does not divide 2**depth are reflect-padded
and cropped back, so callers never see the internal alignment.
"""

import numpy as np

from .layers import (Conv3x3, avgpool2, avgpool2_backward, pad_to_multiple,
                     pad_to_multiple_backward, upsample2, upsample2_backward)

DENOISER_BASE = 16
DENOISER_DEPTH = 3
REG_BASE = 16
REG_DEPTH = 3


class UNet:
    def __init__(self, in_ch, out_ch, base, depth, rng, dtype=np.float32,
                 zero_init_head=False):
        self.in_ch = in_ch
        self.out_ch = out_ch
        self.base = base
        self.depth = depth
        widths = [base * 2 ** l for l in range(depth + 1)]
        self.enc = []
        prev = in_ch
        for l in range(depth):
            self.enc.append((Conv3x3(prev, widths[l], rng, dtype),
                             Conv3x3(widths[l], widths[l], rng, dtype)))
            prev = widths[l]
        self.bott = (Conv3x3(widths[depth - 1], widths[depth], rng, dtype),
                     Conv3x3(widths[depth], widths[depth], rng, dtype))
        self.dec = []
        for l in range(depth):
            self.dec.append((Conv3x3(widths[l + 1], widths[l], rng, dtype),
                             Conv3x3(2 * widths[l], widths[l], rng, dtype)))
        self.head = Conv3x3(widths[0], out_ch, rng, dtype, act=False,
                            zero_init=zero_init_head)

    def _layers(self):
        out = []
        for l, (a, b) in enumerate(self.enc):
            out.append((f"enc{l}a", a))
            out.append((f"enc{l}b", b))
        out.append(("botta", self.bott[0]))
        out.append(("bottb", self.bott[1]))
        for l, (a, b) in enumerate(self.dec):
            out.append((f"dec{l}up", a))
            out.append((f"dec{l}fuse", b))
        out.append(("head", self.head))
        return out

    def parameters(self):
        """Named (weight, grad) pairs; arrays are live references."""
        out = []
        for name, layer in self._layers():
            out.append((f"{name}.w", layer.w, layer.dw))
            out.append((f"{name}.b", layer.b, layer.db))
        return out

    def zero_grad(self):
        for _, layer in self._layers():
            layer.zero_grad()

    def forward(self, x):
        if x.ndim != 4 or x.shape[1] != self.in_ch:
            raise ValueError(f"expected [B, {self.in_ch}, H, W] input, got {x.shape}")
        x, self._pad = pad_to_multiple(x, 2 ** self.depth)
        a = x
        skips = []
        for ca, cb in self.enc:
            a = cb.forward(ca.forward(a))
            skips.append(a)
            a = avgpool2(a)
        a = self.bott[1].forward(self.bott[0].forward(a))
        for l in reversed(range(self.depth)):
            ca, cb = self.dec[l]
            a = ca.forward(upsample2(a))
            a = cb.forward(np.concatenate([a, skips[l]], axis=1))
        y = self.head.forward(a)
        ph, pw = self._pad
        if ph or pw:
            y = np.ascontiguousarray(y[:, :, :y.shape[2] - ph, :y.shape[3] - pw])
        self._out_hw = (x.shape[2], x.shape[3])
        return y

    def backward(self, dy):
        ph, pw = self._pad
        if ph or pw:
            buf = np.zeros((dy.shape[0], dy.shape[1]) + self._out_hw, dtype=dy.dtype)
            buf[:, :, :dy.shape[2], :dy.shape[3]] = dy
            dy = buf
        da = self.head.backward(dy)
        dskips = [None] * self.depth
        for l in range(self.depth):
            ca, cb = self.dec[l]
            dcat = cb.backward(da)
            w = ca.cout
            dskips[l] = dcat[:, w:]
            da = upsample2_backward(ca.backward(dcat[:, :w]))
        da = self.bott[0].backward(self.bott[1].backward(da))
        for l in reversed(range(self.depth)):
            ca, cb = self.enc[l]
            da = avgpool2_backward(da)
            da = da + dskips[l]
            da = ca.backward(cb.backward(da))
        if ph or pw:
            da = pad_to_multiple_backward(da, self._pad)
        return da


def make_single_denoiser(rng, dtype=np.float32):
    return UNet(1, 1, DENOISER_BASE, DENOISER_DEPTH, rng, dtype)


def make_multi_denoiser(n_aux, rng, dtype=np.float32):
    return UNet(2 * (n_aux + 1), 1, DENOISER_BASE, DENOISER_DEPTH, rng, dtype)


def make_registrator(rng, dtype=np.float32):
    return UNet(2, 2, REG_BASE, REG_DEPTH, rng, dtype, zero_init_head=True)


def denoise_single(net, masked_y):
    """Run the single-frame denoiser on one masked image [H, W]."""
    if not np.isfinite(masked_y).all():
        raise ValueError("non-finite values in denoiser input")
    return net.forward(masked_y[None, None])[0, 0]


def predict_field(net, moving, fixed):
    """Predict the displacement field [2, H, W] mapping fixed onto moving."""
    if moving.shape != fixed.shape:
        raise ValueError(f"shape mismatch: moving {moving.shape} vs fixed {fixed.shape}")
    return net.forward(np.stack([moving, fixed])[None])[0]


def denoise_multi(net, stack):
    """Run the multi-frame denoiser on a [2*(N+1), H, W] channel stack."""
    if stack.ndim != 3 or stack.shape[0] != net.in_ch:
        raise ValueError(f"expected {net.in_ch} input channels, got {stack.shape}")
    return net.forward(stack[None])[0, 0]
