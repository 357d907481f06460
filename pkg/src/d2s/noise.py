"""Seeded pixelwise noise simulators: Gaussian, Poisson, Rician.

Outputs are deliberately not clipped to [0, 1]; clipping is an
evaluation-stage decision made by the metrics module. Applying a
simulator to frame k of a sequence uses a sub-seed derived from
(seed, k), so extending a sequence never reshuffles the noise already
drawn for earlier frames.
"""

from dataclasses import dataclass

import numpy as np

NOISE_KINDS = ("gaussian", "poisson", "rician")


def derive_frame_seed(seed, frame_index):
    """Stable per-frame sub-seed for a sequence-level seed."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(frame_index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class NoiseSpec:
    kind: str
    sigma: float = 0.0
    p_level: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind in ("gaussian", "rician") and self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.kind == "poisson" and not self.p_level > 0:
            raise ValueError(f"p_level must be > 0, got {self.p_level}")

    def to_dict(self):
        return {"kind": self.kind, "sigma": self.sigma,
                "p_level": self.p_level, "seed": self.seed}

    @classmethod
    def from_dict(cls, d):
        return cls(kind=d["kind"], sigma=d.get("sigma", 0.0),
                   p_level=d.get("p_level", 0.0), seed=d.get("seed", 0))


def add_gaussian_noise(x, sigma, seed):
    """y = x + N(0, sigma^2), i.i.d. per pixel."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if not np.isfinite(x).all():
        raise ValueError("non-finite values in input image")
    x = np.asarray(x, dtype=np.float64)
    if sigma == 0:
        return x.copy()
    rng = np.random.default_rng(seed)
    return x + rng.normal(0.0, sigma, size=x.shape)


def add_poisson_noise(x, p_level, seed):
    """y = z / P with z ~ Poisson(P * x); exact discrete sampling."""
    if not p_level > 0:
        raise ValueError(f"p_level must be > 0, got {p_level}")
    x = np.asarray(x, dtype=np.float64)
    if (x < 0).any():
        raise ValueError("Poisson noise requires a nonnegative image")
    rng = np.random.default_rng(seed)
    return rng.poisson(p_level * x).astype(np.float64) / p_level


def add_rician_noise(x, sigma, seed):
    """y = sqrt((x + n1)^2 + n2^2), n1, n2 ~ N(0, sigma^2) independent."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    if (x < 0).any():
        raise ValueError("Rician noise requires a nonnegative image")
    if sigma == 0:
        return x.copy()
    rng = np.random.default_rng(seed)
    n1 = rng.normal(0.0, sigma, size=x.shape)
    n2 = rng.normal(0.0, sigma, size=x.shape)
    return np.sqrt((x + n1) ** 2 + n2 ** 2)


def apply_noise(x, spec, frame_index=0):
    """Apply ``spec`` to one frame, using the per-frame sub-seed."""
    sub = derive_frame_seed(spec.seed, frame_index)
    if spec.kind == "gaussian":
        return add_gaussian_noise(x, spec.sigma, sub)
    if spec.kind == "poisson":
        return add_poisson_noise(x, spec.p_level, sub)
    return add_rician_noise(x, spec.sigma, sub)
