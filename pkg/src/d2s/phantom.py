"""Synthetic dynamic 2D sequence with known motion and intensities.

The scene is analytic: a bright annulus ("myocardium") with an interior
pool on a textured background, sampled at continuously deformed
coordinates, so every frame comes with its exact ground-truth
displacement field and warping frame k by that field reproduces the
target frame up to bilinear interpolation error.

Motion follows the smooth periodic schedule s_k = sin(2*pi*(k - t)/T)
around the target frame t = T // 2 (s_t = 0, so the target is the
reference state):

    contraction   radial scaling of the annulus, compactly supported
    translation   whole-grid shift by (amplitude * s_k, 0)
    mixed         half-amplitude contraction plus half-amplitude shift

Intensities stay well inside [0, 1] (roughly 0.27..0.86) so that
clipping at the metrics stage barely perturbs noise statistics.
Contrast drift scales only the annulus/pool intensity, mimicking
perfusion-like uptake confined to the moving structure.
"""

from dataclasses import dataclass

import numpy as np

MOTION_KINDS = ("contraction", "translation", "mixed")

_BG = 0.32
_RING_VALUE = 0.78
_POOL_VALUE = 0.55
_EDGE_WIDTH = 1.5  # px, smoothstep transition at structure boundaries

# Radii as fractions of the image side.
_R_POOL = 0.14
_R_RING = 0.22
_R_SUPPORT = 0.36  # radial motion tapers to zero here


@dataclass
class PhantomSpec:
    size: int = 64
    n_frames: int = 5
    motion_amplitude: float = 3.0
    motion_kind: str = "contraction"
    contrast_drift: float = 1.03
    seed: int = 0

    def __post_init__(self):
        if self.size < 32:
            raise ValueError(f"size must be >= 32, got {self.size}")
        if self.n_frames < 2:
            raise ValueError(f"n_frames must be >= 2, got {self.n_frames}")
        if self.motion_kind not in MOTION_KINDS:
            raise ValueError(f"unknown motion kind {self.motion_kind!r}")
        if not 0.9 <= self.contrast_drift <= 1.1:
            raise ValueError(
                f"contrast_drift must be in [0.9, 1.1], got {self.contrast_drift}")
        if self.motion_amplitude < 0:
            raise ValueError("motion_amplitude must be >= 0")
        # Keeps the radial map monotonic (invertible); slope bound of the taper.
        if self.motion_amplitude > 0.09 * self.size:
            raise ValueError(
                f"motion_amplitude {self.motion_amplitude} too large for size "
                f"{self.size} (max {0.09 * self.size:.1f} px)")

    @property
    def target_index(self):
        return self.n_frames // 2


@dataclass
class PhantomOutput:
    clean_frames: np.ndarray  # [T, H, W] float32 in [0, 1]
    true_fields: np.ndarray   # [T, 2, H, W]: warp(frame k, field k) ~ target
    roi_mask: np.ndarray      # bool [H, W], covers the moving structure
    target_index: int


def motion_schedule(n_frames, target_index=None):
    """Per-frame motion phase s_k; zero at the target frame."""
    t = n_frames // 2 if target_index is None else target_index
    k = np.arange(n_frames)
    return np.sin(2.0 * np.pi * (k - t) / n_frames)


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _radial_shift(rho, amp, r_ring, r_support):
    """Displacement profile: linear up to the ring, tapering to zero."""
    inner = rho / r_ring
    t = (rho - r_ring) / (r_support - r_ring)
    outer = 1.0 - _smoothstep(t)
    return amp * np.where(rho <= r_ring, inner, outer)


def _invert_radial(R, amp, r_ring, r_support):
    """Solve rho + shift(rho) = R by bisection; identity beyond support."""
    out = R.astype(np.float64).copy()
    m = R < r_support
    if amp == 0.0 or not m.any():
        return out
    lo = np.zeros(np.count_nonzero(m))
    hi = np.full_like(lo, r_support)
    Rm = R[m]
    for _ in range(54):
        mid = 0.5 * (lo + hi)
        g = mid + _radial_shift(mid, amp, r_ring, r_support)
        lower = g < Rm
        lo = np.where(lower, mid, lo)
        hi = np.where(lower, hi, mid)
    out[m] = 0.5 * (lo + hi)
    return out


class _Scene:
    """Continuous target-frame scene, evaluated at arbitrary coordinates."""

    def __init__(self, spec, rng):
        S = spec.size
        self.size = S
        self.center = (S - 1) / 2.0
        self.r_pool = _R_POOL * S
        self.r_ring = _R_RING * S
        self.textured = spec.motion_kind == "contraction"
        self.phases = rng.uniform(0, 2 * np.pi, size=2)
        self.blob_pos = np.array([[0.17, 0.17], [0.82, 0.78]]) * S
        self.blob_pos += rng.uniform(-0.03, 0.03, size=(2, 2)) * S
        self.blob_amp = (0.16, 0.12)
        self.blob_sigma = 0.05 * S

    def __call__(self, y, x, gamma):
        S = self.size
        if self.textured:
            v = _BG + 0.05 * (np.sin(2 * np.pi * 2.3 * y / S + self.phases[0])
                              * np.sin(2 * np.pi * 3.1 * x / S + self.phases[1]))
            for (by, bx), amp in zip(self.blob_pos, self.blob_amp):
                d2 = (y - by) ** 2 + (x - bx) ** 2
                v = v + amp * np.exp(-0.5 * d2 / self.blob_sigma ** 2)
        else:
            v = np.full(np.broadcast(y, x).shape, _BG)
        rho = np.sqrt((y - self.center) ** 2 + (x - self.center) ** 2)
        ring = (_smoothstep((self.r_ring - rho) / _EDGE_WIDTH)
                * _smoothstep((rho - self.r_pool) / _EDGE_WIDTH))
        pool = _smoothstep((self.r_pool - rho) / _EDGE_WIDTH)
        v = v + (gamma * _RING_VALUE - v) * ring
        v = v + (gamma * _POOL_VALUE - v) * pool
        return np.clip(v, 0.0, 1.0)


def generate_phantom(spec):
    """Build the clean sequence, ground-truth fields and ROI for ``spec``."""
    S = spec.size
    T = spec.n_frames
    t = spec.target_index
    rng = np.random.default_rng(spec.seed)
    scene = _Scene(spec, rng)
    c = scene.center
    r_support = _R_SUPPORT * S

    s = motion_schedule(T, t)
    u = 0.5 * (1.0 - np.cos(2.0 * np.pi * (np.arange(T) - t) / T))
    gammas = 1.0 + (spec.contrast_drift - 1.0) * u

    if spec.motion_kind == "contraction":
        radial_amp = spec.motion_amplitude * s
        shifts = np.zeros((T, 2))
    elif spec.motion_kind == "translation":
        radial_amp = np.zeros(T)
        shifts = np.stack([spec.motion_amplitude * s, np.zeros(T)], axis=1)
    else:
        radial_amp = 0.5 * spec.motion_amplitude * s
        shifts = np.stack([0.5 * spec.motion_amplitude * s, np.zeros(T)], axis=1)

    ii, jj = np.meshgrid(np.arange(S, dtype=np.float64),
                         np.arange(S, dtype=np.float64), indexing="ij")
    rho = np.sqrt((ii - c) ** 2 + (jj - c) ** 2)
    safe_rho = np.where(rho > 0, rho, 1.0)

    frames = np.empty((T, S, S), dtype=np.float32)
    fields = np.zeros((T, 2, S, S), dtype=np.float32)
    for k in range(T):
        # Frame image: sample the scene at the inverse-mapped coordinates.
        py = ii - shifts[k, 0]
        px = jj - shifts[k, 1]
        if radial_amp[k] != 0.0:
            R = np.sqrt((py - c) ** 2 + (px - c) ** 2)
            rho_src = _invert_radial(R, radial_amp[k], scene.r_ring, r_support)
            scale = np.where(R > 0, rho_src / np.where(R > 0, R, 1.0), 0.0)
            py = c + (py - c) * scale
            px = c + (px - c) * scale
        frames[k] = scene(py, px, gammas[k])

        # Ground-truth field on the target grid: forward map minus identity.
        if radial_amp[k] != 0.0:
            disp = _radial_shift(rho, radial_amp[k], scene.r_ring, r_support)
            fields[k, 0] = disp * (ii - c) / safe_rho + shifts[k, 0]
            fields[k, 1] = disp * (jj - c) / safe_rho + shifts[k, 1]
        else:
            fields[k, 0] = shifts[k, 0]
            fields[k, 1] = shifts[k, 1]

    roi_radius = r_support + 1.0 + np.abs(shifts).max()
    roi = rho <= roi_radius
    return PhantomOutput(clean_frames=frames, true_fields=fields,
                         roi_mask=roi, target_index=t)
