"""Self-supervised denoising for dynamic 2D image sequences.

Trains, on a single noisy target frame plus a few auxiliary time
frames, a three-stage pipeline (blind-spot single-frame denoising,
deformable registration, blind-spot multi-frame fusion) and emits a
denoised target frame. Ships with seeded noise simulators, a synthetic
moving phantom, PSNR/SSIM metrics and a CLI (``d2s``).
"""

__version__ = "0.1.0"

from .masking import BlindSpotMask, apply_blind_spot, sample_mask
from .metrics import EvalReport, masked_metrics, psnr, ssim
from .noise import (NoiseSpec, add_gaussian_noise, add_poisson_noise,
                    add_rician_noise)
from .phantom import PhantomOutput, PhantomSpec, generate_phantom
from .pipeline import (FrameStack, PipelineState, TrainConfig, infer,
                       load_checkpoint, save_checkpoint, train)
from .warp import smoothness_penalty, warp

__all__ = [
    "BlindSpotMask", "apply_blind_spot", "sample_mask",
    "EvalReport", "masked_metrics", "psnr", "ssim",
    "NoiseSpec", "add_gaussian_noise", "add_poisson_noise", "add_rician_noise",
    "PhantomOutput", "PhantomSpec", "generate_phantom",
    "FrameStack", "PipelineState", "TrainConfig", "infer",
    "load_checkpoint", "save_checkpoint", "train",
    "smoothness_penalty", "warp",
    "__version__",
]
