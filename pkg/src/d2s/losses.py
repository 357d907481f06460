"""Training losses and their hand-derived gradients.

The two blind-spot losses average squared residuals over the *dropped*
pixels only (count-normalized, so the scale does not depend on image
size or dropout rate); the registration loss is a plain MSE similarity
term plus a weighted field-smoothness penalty.
"""

import numpy as np

from .warp import smoothness_penalty, smoothness_penalty_grad


def _masked_mse(residual, mask):
    inv = 1.0 - mask
    count = inv.sum()
    if count == 0:
        return 0.0
    return float((inv * residual * residual).sum() / count)


def _masked_mse_grad(residual, mask):
    inv = (1.0 - mask).astype(residual.dtype)
    count = inv.sum()
    if count == 0:
        return np.zeros_like(residual)
    return 2.0 * inv * residual / residual.dtype.type(count)


def loss_single(outputs, frames, masks):
    """Blind-spot loss of the single-frame stage.

    outputs, frames: [K, H, W]; masks: list of K BlindSpotMask. Mean over
    frames of the per-frame dropped-pixel MSE against the noisy frame.
    """
    if len(masks) != outputs.shape[0]:
        raise ValueError(f"{outputs.shape[0]} frames but {len(masks)} masks")
    total = 0.0
    for k, m in enumerate(masks):
        total += _masked_mse(outputs[k] - frames[k], m.mask)
    return total / len(masks)


def loss_single_grad(outputs, frames, masks):
    g = np.empty_like(outputs)
    for k, m in enumerate(masks):
        g[k] = _masked_mse_grad(outputs[k] - frames[k], m.mask) / len(masks)
    return g


def loss_registration(warped, target, fields, lambda_smooth):
    """Similarity + smoothness loss of the registration stage.

    warped: [N, H, W] frames aligned to the target, target: [H, W],
    fields: [N, 2, H, W].
    """
    N = warped.shape[0]
    total = 0.0
    for k in range(N):
        r = warped[k] - target
        total += float((r * r).mean()) + lambda_smooth * smoothness_penalty(fields[k])
    return total / N


def loss_registration_grads(warped, target, fields, lambda_smooth):
    """Gradients w.r.t. (warped, target, fields)."""
    N = warped.shape[0]
    r = warped - target
    npix = r.dtype.type(r.shape[1] * r.shape[2])
    dwarped = 2.0 * r / (npix * N)
    dtarget = -dwarped.sum(axis=0)
    dfields = np.empty_like(fields)
    for k in range(N):
        dfields[k] = (lambda_smooth / N) * smoothness_penalty_grad(fields[k])
    return dwarped, dtarget, dfields


def loss_multi(estimate, target_noisy, mask):
    """Blind-spot loss of the fusion stage: dropped-pixel MSE vs y_0."""
    if estimate.shape != target_noisy.shape:
        raise ValueError(
            f"shape mismatch: estimate {estimate.shape} vs target {target_noisy.shape}")
    return _masked_mse(estimate - target_noisy, mask.mask)


def loss_multi_grad(estimate, target_noisy, mask):
    return _masked_mse_grad(estimate - target_noisy, mask.mask)


def total_loss(ls, lr, lm, cfg):
    return cfg.lambda_s * ls + cfg.lambda_r * lr + lm
