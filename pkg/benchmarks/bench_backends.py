"""Compare the numba and numpy kernel backends.

Times the three conv kernels and the warp pair at the shapes the
training loop actually hits, then a complete training iteration under
each backend. Run from the repo root:

    python3 benchmarks/bench_backends.py
"""

import time

import numpy as np

from d2s import kernels
from d2s.kernels import numba_impl, numpy_impl
from d2s.noise import NoiseSpec, apply_noise
from d2s.phantom import PhantomSpec, generate_phantom
from d2s.pipeline import FrameStack, TrainConfig, train

# [B, Ci, Co, H, W] as seen by the denoiser/registrator at 64x64 inputs.
CONV_SHAPES = [
    (5, 16, 16, 64, 64),
    (5, 32, 32, 32, 32),
    (5, 64, 64, 16, 16),
    (1, 128, 128, 8, 8),
]


def time_fn(fn, repeats=30):
    fn()  # warm-up / JIT
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def bench_kernels():
    rng = np.random.default_rng(0)
    rows = []
    for B, Ci, Co, H, W in CONV_SHAPES:
        x = rng.normal(size=(B, Ci, H, W)).astype(np.float32)
        w = (rng.normal(size=(Co, Ci, 3, 3)) * 0.1).astype(np.float32)
        b = np.zeros(Co, np.float32)
        dy = rng.normal(size=(B, Co, H, W)).astype(np.float32)
        for name, args in (("conv_fwd", (x, w, b)),
                           ("conv_bwd_in", (dy, w)),
                           ("conv_bwd_par", (x, dy))):
            fn_name = {"conv_fwd": "conv3x3_forward",
                       "conv_bwd_in": "conv3x3_backward_input",
                       "conv_bwd_par": "conv3x3_backward_params"}[name]
            t_np = time_fn(lambda: getattr(numpy_impl, fn_name)(*args))
            t_nb = time_fn(lambda: getattr(numba_impl, fn_name)(*args))
            rows.append((f"{name} B{B} {Ci}->{Co} {H}x{W}", t_np, t_nb))

    img = rng.normal(size=(4, 1, 64, 64)).astype(np.float32)
    field = rng.uniform(-3, 3, size=(4, 2, 64, 64)).astype(np.float32)
    dout = rng.normal(size=(4, 1, 64, 64)).astype(np.float32)
    rows.append(("warp_fwd B4 64x64",
                 time_fn(lambda: numpy_impl.warp_forward(img, field)),
                 time_fn(lambda: numba_impl.warp_forward(img, field))))
    rows.append(("warp_bwd B4 64x64",
                 time_fn(lambda: numpy_impl.warp_backward(img, field, dout)),
                 time_fn(lambda: numba_impl.warp_backward(img, field, dout))))
    return rows


def bench_train_iteration():
    ph = generate_phantom(PhantomSpec(size=64, n_frames=5, motion_amplitude=3.0,
                                      seed=0))
    spec = NoiseSpec(kind="gaussian", sigma=0.15, seed=1)
    noisy = np.stack([apply_noise(ph.clean_frames[k], spec, k)
                      for k in range(5)]).astype(np.float32)
    stack = FrameStack(target=noisy[2], auxiliaries=noisy[[1, 3, 0, 4]])
    rows = []
    for backend in ("numpy", "numba"):
        kernels.set_backend(backend)
        train(stack, TrainConfig(n_train=3, seed=0))  # warm-up
        t0 = time.perf_counter()
        train(stack, TrainConfig(n_train=20, seed=0))
        rows.append((backend, (time.perf_counter() - t0) / 20))
    return rows


def main():
    print(f"{'kernel':<34} {'numpy':>10} {'numba':>10} {'numba/numpy':>12}")
    for name, t_np, t_nb in bench_kernels():
        print(f"{name:<34} {t_np * 1e3:>8.2f}ms {t_nb * 1e3:>8.2f}ms "
              f"{t_nb / t_np:>11.2f}x")
    print()
    print("full training iteration (64x64 phantom, N=4):")
    for backend, dt in bench_train_iteration():
        print(f"  {backend:<8} {dt * 1e3:8.1f} ms/iteration")


if __name__ == "__main__":
    main()
