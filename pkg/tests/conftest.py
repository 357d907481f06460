import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from d2s.metrics import psnr
from d2s.noise import NoiseSpec, apply_noise
from d2s.phantom import PhantomSpec, generate_phantom
from d2s.pipeline import FrameStack, TrainConfig, infer, select_auxiliaries, train


def make_noisy_stack(seed, size=64, n_frames=5, amplitude=3.0, sigma=0.15,
                     noise_seed_offset=100):
    """Phantom + gaussian noise, packaged as a FrameStack for training."""
    ph = generate_phantom(PhantomSpec(size=size, n_frames=n_frames,
                                      motion_amplitude=amplitude, seed=seed))
    spec = NoiseSpec(kind="gaussian", sigma=sigma, seed=noise_seed_offset + seed)
    noisy = np.stack([apply_noise(ph.clean_frames[k], spec, k)
                      for k in range(n_frames)]).astype(np.float32)
    t = ph.target_index
    aux = select_auxiliaries(n_frames, t, n_frames - 1)
    stack = FrameStack(target=noisy[t], auxiliaries=noisy[aux],
                       clean=ph.clean_frames[t], roi=ph.roi_mask)
    return ph, stack


@pytest.fixture(scope="session")
def trained_runs():
    """Full 500-iteration runs for three seeds plus both ablations.

    Shared by the end-to-end, ablation-ordering and averaging-benefit
    acceptance criteria. Runs on the numpy backend: the BLAS-backed path
    is the faster one at training shapes on this hardware (see
    benchmarks/bench_backends.py); backend choice does not change any
    contract being tested here.
    """
    from d2s import kernels

    previous = kernels.get_backend()
    kernels.set_backend("numpy")
    runs = {}
    try:
        for seed in (0, 1, 2):
            ph, stack = make_noisy_stack(seed)
            noisy_psnr = psnr(stack.target, stack.clean)
            per_ablation = {}
            for ablation in ("full", "no_single", "no_registration"):
                cfg = TrainConfig(n_train=500, n_test=50, seed=seed,
                                  ablation=ablation)
                state = train(stack, cfg)
                denoised = infer(state, stack, n_test=50, seed=seed)
                per_ablation[ablation] = {"state": state, "denoised": denoised}
            runs[seed] = {"phantom": ph, "stack": stack,
                          "noisy_psnr": noisy_psnr, "ablations": per_ablation}
    finally:
        kernels.set_backend(previous)
    return runs
