"""Per-sequence training, dropout-averaged inference and checkpoints.

The three stages run end-to-end: gradients from the registration and
fusion losses flow back into the single-frame denoiser with no
detaching. Two ablation variants mirror the full pipeline with one
stage removed:

    no_single        the single-frame denoiser is dropped; registration
                     runs on the noisy frames and the fusion network
                     sees warped noisy frames (the target stays
                     blind-spot masked so the identity map is never
                     a zero-loss solution)
    no_registration  the warp stage is dropped; the fusion network sees
                     the per-frame denoised images unwarped

One Adam instance covers all trainable parameters, so the ablated
stage's parameters simply receive zero gradients.
"""

import hashlib
import json
from dataclasses import dataclass, field as dataclass_field
from typing import Optional

import numpy as np

from . import networks
from .errors import DataFormatError, TrainingDivergedError
from .losses import (loss_multi, loss_multi_grad, loss_registration,
                     loss_registration_grads, loss_single, loss_single_grad,
                     total_loss)
from .masking import apply_blind_spot, sample_mask_from
from .optim import Adam
from .warp import warp_batch, warp_batch_backward

ABLATIONS = ("full", "no_single", "no_registration")


@dataclass
class TrainConfig:
    n_aux: int = 4
    lambda_smooth: float = 0.1
    lambda_s: float = 1.0
    lambda_r: float = 1.0
    dropout_rate: float = 0.3
    learning_rate: float = 1e-4
    n_train: int = 500
    n_test: int = 100
    augment_rotations: bool = True
    seed: int = 0
    ablation: str = "full"

    def __post_init__(self):
        if self.n_aux < 1:
            raise ValueError(f"n_aux must be >= 1, got {self.n_aux}")
        for name in ("lambda_smooth", "lambda_s", "lambda_r"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.n_train < 1:
            raise ValueError(f"n_train must be >= 1, got {self.n_train}")
        if self.n_test < 1:
            raise ValueError(f"n_test must be >= 1, got {self.n_test}")
        if self.ablation not in ABLATIONS:
            raise ValueError(f"unknown ablation {self.ablation!r}, "
                             f"expected one of {ABLATIONS}")

    def to_dict(self):
        return {
            "n_aux": self.n_aux,
            "lambda_smooth": self.lambda_smooth,
            "lambda_s": self.lambda_s,
            "lambda_r": self.lambda_r,
            "dropout_rate": self.dropout_rate,
            "learning_rate": self.learning_rate,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "augment_rotations": self.augment_rotations,
            "seed": self.seed,
            "ablation": self.ablation,
        }

    @classmethod
    def from_dict(cls, d):
        known = set(cls().to_dict())
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass
class FrameStack:
    target: np.ndarray                 # [H, W] noisy target frame
    auxiliaries: np.ndarray            # [N, H, W] noisy neighbor frames
    clean: Optional[np.ndarray] = None  # [H, W] clean target, evaluation only
    roi: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.auxiliaries.ndim != 3 or self.auxiliaries.shape[1:] != self.target.shape:
            raise ValueError(
                f"auxiliary shape {self.auxiliaries.shape} does not match "
                f"target {self.target.shape}")

    @property
    def n_aux(self):
        return self.auxiliaries.shape[0]

    @property
    def frames(self):
        """[N+1, H, W] float32, target first."""
        return np.concatenate(
            [self.target[None], self.auxiliaries]).astype(np.float32)


def select_auxiliaries(frame_count, target_index, n_aux):
    """Indices of the n_aux frames nearest the target (closest first)."""
    if frame_count < n_aux + 1:
        raise ValueError(
            f"sequence has {frame_count} frames but n_aux={n_aux} requires "
            f"at least {n_aux + 1}")
    others = sorted((k for k in range(frame_count) if k != target_index),
                    key=lambda k: (abs(k - target_index), k))
    return others[:n_aux]


def stack_from_container(container, n_aux):
    frames = container.read_frames()
    t = container.target_index
    aux_idx = select_auxiliaries(container.frame_count, t, n_aux)
    clean = container.read_clean()
    return FrameStack(target=frames[t],
                      auxiliaries=frames[aux_idx],
                      clean=None if clean is None else clean[t],
                      roi=container.read_roi())


class PipelineState:
    def __init__(self, cfg, arch=None, dtype=np.float32):
        self.config = cfg
        self.arch = arch or {
            "denoiser_base": networks.DENOISER_BASE,
            "denoiser_depth": networks.DENOISER_DEPTH,
            "reg_base": networks.REG_BASE,
            "reg_depth": networks.REG_DEPTH,
        }
        init_rng = np.random.default_rng(
            np.random.SeedSequence(entropy=cfg.seed, spawn_key=(0,)))
        a = self.arch
        self.fs = networks.UNet(1, 1, a["denoiser_base"], a["denoiser_depth"],
                                init_rng, dtype)
        self.fr = networks.UNet(2, 2, a["reg_base"], a["reg_depth"],
                                init_rng, dtype, zero_init_head=True)
        self.fm = networks.UNet(2 * (cfg.n_aux + 1), 1, a["denoiser_base"],
                                a["denoiser_depth"], init_rng, dtype)
        self.optimizer = Adam(self.parameters(), lr=cfg.learning_rate)
        self.iteration = 0
        self.loss_trace = []

    def parameters(self):
        out = []
        for prefix, net in (("fs", self.fs), ("fr", self.fr), ("fm", self.fm)):
            out.extend((f"{prefix}.{n}", w, g) for n, w, g in net.parameters())
        return out

    def zero_grad(self):
        self.fs.zero_grad()
        self.fr.zero_grad()
        self.fm.zero_grad()


def _sample_iteration_masks(rng, cfg, shape):
    masks_s = None
    if cfg.ablation != "no_single":
        masks_s = [sample_mask_from(rng, shape, cfg.dropout_rate)
                   for _ in range(cfg.n_aux + 1)]
    mask_m = sample_mask_from(rng, shape, cfg.dropout_rate)
    return masks_s, mask_m


def _forward(state, frames, masks_s, mask_m):
    """Run the three stages; returns all intermediates needed for backward."""
    cfg = state.config
    N = cfg.n_aux
    out = {}

    if cfg.ablation == "no_single":
        base = frames
    else:
        xs = np.stack([apply_blind_spot(frames[k], masks_s[k])
                       for k in range(N + 1)])[:, None]
        xt = state.fs.forward(xs)
        out["xt"] = xt[:, 0]
        base = out["xt"]

    masked_target = apply_blind_spot(frames[0], mask_m)

    if cfg.ablation == "no_registration":
        fused_first = base[:1]
        aligned = base[1:]
    else:
        reg_in = np.stack([base[1:], np.broadcast_to(base[0], base[1:].shape)],
                          axis=1)
        fields = state.fr.forward(np.ascontiguousarray(reg_in))
        if not np.isfinite(fields).all():
            raise TrainingDivergedError(
                f"non-finite displacement field at iteration {state.iteration + 1}")
        moving = np.ascontiguousarray(base[1:, None])
        warped = warp_batch(moving, fields)
        out["fields"] = fields
        out["moving"] = moving
        out["warped"] = warped[:, 0]
        fused_first = (masked_target[None] if cfg.ablation == "no_single"
                       else base[:1])
        aligned = warped[:, 0]

    z = np.concatenate([fused_first, aligned, masked_target[None], frames[1:]])
    out["xhat"] = state.fm.forward(np.ascontiguousarray(z[None]))[0, 0]
    return out


def train_step(state, frames, masks_s, mask_m):
    """One forward/backward/update pass; returns (ls, lr, lm, total)."""
    cfg = state.config
    N = cfg.n_aux
    fwd = _forward(state, frames, masks_s, mask_m)
    xhat = fwd["xhat"]

    ls = (loss_single(fwd["xt"], frames, masks_s)
          if cfg.ablation != "no_single" else 0.0)
    if cfg.ablation == "no_registration":
        lr = 0.0
    else:
        target = frames[0] if cfg.ablation == "no_single" else fwd["xt"][0]
        lr = loss_registration(fwd["warped"], target, fwd["fields"],
                               cfg.lambda_smooth)
    lm = loss_multi(xhat, frames[0], mask_m)
    total = total_loss(ls, lr, lm, cfg)
    if not np.isfinite(total):
        raise TrainingDivergedError(
            f"non-finite loss at iteration {state.iteration + 1}: "
            f"ls={ls} lr={lr} lm={lm}")

    state.zero_grad()
    dz = state.fm.backward(
        loss_multi_grad(xhat, frames[0], mask_m)[None, None])[0]

    K = N + 1
    if cfg.ablation == "no_registration":
        dxt = dz[:K].copy()
    elif cfg.ablation == "no_single":
        dwarped = dz[1:K].copy()
        dw_r, _, df_r = loss_registration_grads(
            fwd["warped"], frames[0], fwd["fields"], cfg.lambda_smooth)
        dwarped += cfg.lambda_r * dw_r
        _, dfields = warp_batch_backward(fwd["moving"], fwd["fields"],
                                         np.ascontiguousarray(dwarped[:, None]))
        dfields += cfg.lambda_r * df_r
        state.fr.backward(dfields)
        dxt = None
    else:
        dxt = np.zeros_like(fwd["xt"])
        dxt[0] = dz[0]
        dwarped = dz[1:K].copy()
        dw_r, dt_r, df_r = loss_registration_grads(
            fwd["warped"], fwd["xt"][0], fwd["fields"], cfg.lambda_smooth)
        dwarped += cfg.lambda_r * dw_r
        dxt[0] += cfg.lambda_r * dt_r
        dimg, dfields = warp_batch_backward(fwd["moving"], fwd["fields"],
                                            np.ascontiguousarray(dwarped[:, None]))
        dfields += cfg.lambda_r * df_r
        dxt[1:] += dimg[:, 0]
        dreg = state.fr.backward(dfields)
        dxt[1:] += dreg[:, 0]
        dxt[0] += dreg[:, 1].sum(axis=0)

    if cfg.ablation != "no_single":
        dxt += cfg.lambda_s * loss_single_grad(fwd["xt"], frames, masks_s)
        state.fs.backward(np.ascontiguousarray(dxt[:, None]))

    state.optimizer.step()
    state.iteration += 1
    return ls, lr, lm, total


def train(stack, cfg, log_stream=None):
    """Optimize the pipeline on one frame stack for cfg.n_train iterations."""
    if stack.n_aux != cfg.n_aux:
        raise ValueError(
            f"stack provides {stack.n_aux} auxiliary frames but the config "
            f"expects n_aux={cfg.n_aux}")
    state = PipelineState(cfg)
    frames = stack.frames
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=cfg.seed, spawn_key=(1,)))
    if log_stream is not None:
        log_stream.write("iteration,loss_single,loss_registration,loss_multi,loss_total\n")
    for _ in range(cfg.n_train):
        r = int(rng.integers(0, 4)) if cfg.augment_rotations else 0
        cur = np.rot90(frames, r, axes=(1, 2)).copy() if r else frames
        masks_s, mask_m = _sample_iteration_masks(rng, cfg, cur.shape[1:])
        ls, lr, lm, total = train_step(state, cur, masks_s, mask_m)
        state.loss_trace.append((state.iteration, ls, lr, lm, total))
        if log_stream is not None:
            log_stream.write(f"{state.iteration},{float(ls)!r},{float(lr)!r},"
                             f"{float(lm)!r},{float(total)!r}\n")
    return state


def infer(state, stack, n_test=None, seed=0):
    """Average n_test dropout-enabled forward passes (no rotation)."""
    cfg = state.config
    if stack.n_aux != cfg.n_aux:
        raise ValueError(
            f"stack provides {stack.n_aux} auxiliary frames but the checkpoint "
            f"was trained with n_aux={cfg.n_aux}")
    if n_test is None:
        n_test = cfg.n_test
    if n_test < 1:
        raise ValueError(f"n_test must be >= 1, got {n_test}")
    frames = stack.frames
    rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed)))
    passes = np.empty((n_test,) + frames.shape[1:], dtype=np.float32)
    for p in range(n_test):
        masks_s, mask_m = _sample_iteration_masks(rng, cfg, frames.shape[1:])
        passes[p] = _forward(state, frames, masks_s, mask_m)["xhat"]
    return passes.mean(axis=0)


def _checkpoint_paths(path):
    path = str(path)
    if not path.endswith(".npz"):
        path += ".npz"
    return path, path[:-4] + ".json"


def save_checkpoint(state, path):
    """Write the parameter container (.npz) and its JSON sidecar."""
    npz_path, sidecar_path = _checkpoint_paths(path)
    arrays = {"iteration": np.array(state.iteration, dtype=np.int64)}
    for name, w, _ in state.parameters():
        arrays[f"param.{name}"] = w
    arrays.update(state.optimizer.state_arrays())
    np.savez(npz_path, **arrays)
    sidecar = {
        "architecture": state.arch,
        "n_aux": state.config.n_aux,
        "config": state.config.to_dict(),
        "config_hash": state.config.hash(),
        "iterations_completed": state.iteration,
    }
    with open(sidecar_path, "w") as f:
        json.dump(sidecar, f, indent=2)


def load_checkpoint(path, expected_n_aux=None):
    npz_path, sidecar_path = _checkpoint_paths(path)
    try:
        with open(sidecar_path) as f:
            sidecar = json.load(f)
    except FileNotFoundError:
        raise DataFormatError(f"{sidecar_path}: checkpoint sidecar not found")
    except json.JSONDecodeError as e:
        raise DataFormatError(f"{sidecar_path}: malformed sidecar ({e})") from e

    cfg = TrainConfig.from_dict(sidecar["config"])
    if sidecar.get("config_hash") != cfg.hash():
        raise DataFormatError(
            f"{sidecar_path}: config-hash mismatch (sidecar "
            f"{sidecar.get('config_hash')}, recomputed {cfg.hash()})")
    if expected_n_aux is not None and expected_n_aux != cfg.n_aux:
        raise ValueError(
            f"requested n_aux={expected_n_aux} but checkpoint was trained "
            f"with n_aux={cfg.n_aux}")

    try:
        arrays = np.load(npz_path)
    except (OSError, ValueError) as e:
        raise DataFormatError(f"{npz_path}: unreadable checkpoint ({e})") from e

    state = PipelineState(cfg, arch=sidecar.get("architecture"))
    for name, w, _ in state.parameters():
        key = f"param.{name}"
        if key not in arrays:
            raise DataFormatError(f"{npz_path}: missing parameter {name}")
        if arrays[key].shape != w.shape:
            raise DataFormatError(
                f"{npz_path}: parameter {name} has shape {arrays[key].shape}, "
                f"expected {w.shape}")
        w[...] = arrays[key]
    state.optimizer.load_state_arrays(arrays)
    state.iteration = int(arrays["iteration"])
    return state
