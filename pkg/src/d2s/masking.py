"""Blind-spot masks: Bernoulli dropout patterns over pixels.

A mask entry of 1 means the pixel stays visible to the network; dropped
pixels (0) are the only ones the masked losses supervise, which is what
prevents the denoisers from learning the identity map.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class BlindSpotMask:
    mask: np.ndarray  # {0, 1} per pixel
    rate: float


def sample_mask(shape, rate, seed):
    """I.i.d. Bernoulli(1 - rate) mask; deterministic in (shape, rate, seed)."""
    rng = np.random.default_rng(seed)
    return sample_mask_from(rng, shape, rate)


def sample_mask_from(rng, shape, rate, dtype=np.float32):
    if not 0 <= rate < 1:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    mask = (rng.random(shape) >= rate).astype(dtype)
    return BlindSpotMask(mask=mask, rate=float(rate))


def apply_blind_spot(y, m):
    """Zero the dropped pixels and rescale survivors by 1/(1 - rate)."""
    if y.shape != m.mask.shape:
        raise ValueError(f"shape mismatch: image {y.shape} vs mask {m.mask.shape}")
    scale = y.dtype.type(1.0 / (1.0 - m.rate))
    return y * m.mask.astype(y.dtype) * scale
