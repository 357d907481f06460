"""Command-line surface: phantom / simulate / denoise / evaluate / export-png.

Exit codes: 0 success, 2 invalid arguments, 3 data-format error,
4 training divergence. All randomness flows from explicit --seed flags,
so every command is deterministic given its arguments. ``D2S_LOG``
(debug|info) controls verbosity.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import container as cont
from . import metrics, noise, phantom, pipeline
from .errors import DataFormatError, TrainingDivergedError

log = logging.getLogger("d2s")


def _setup_logging():
    level = {"debug": logging.DEBUG, "info": logging.INFO}.get(
        os.environ.get("D2S_LOG", "").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def cmd_phantom(args):
    spec = phantom.PhantomSpec(size=args.size, n_frames=args.frames,
                               motion_amplitude=args.amplitude,
                               motion_kind=args.kind,
                               contrast_drift=args.drift, seed=args.seed)
    out = phantom.generate_phantom(spec)
    cont.write_container(args.out, out.clean_frames, out.target_index,
                         roi=out.roi_mask, fields=out.true_fields)
    log.info("wrote %d clean frames to %s", spec.n_frames, args.out)
    return 0


def cmd_simulate(args):
    if args.noise in ("gaussian", "rician"):
        if args.sigma is None:
            raise ValueError(f"--sigma is required for {args.noise} noise")
        spec = noise.NoiseSpec(kind=args.noise, sigma=args.sigma, seed=args.seed)
    else:
        if args.plevel is None:
            raise ValueError("--plevel is required for poisson noise")
        spec = noise.NoiseSpec(kind=args.noise, p_level=args.plevel, seed=args.seed)
    src = cont.read_container(getattr(args, "in"))
    clean = src.read_frames()
    noisy = np.stack([noise.apply_noise(clean[k], spec, frame_index=k)
                      for k in range(src.frame_count)]).astype(np.float32)
    roi = src.read_roi()
    cont.write_container(args.out, noisy, src.target_index, roi=roi,
                         clean=clean, noise=spec.to_dict())
    log.info("wrote noisy sequence (%s) to %s", args.noise, args.out)
    return 0


def _load_train_config(args):
    values = pipeline.TrainConfig().to_dict()
    if args.config:
        try:
            with open(args.config) as f:
                file_values = json.load(f)
        except json.JSONDecodeError as e:
            raise DataFormatError(f"{args.config}: malformed JSON ({e})") from e
        unknown = set(file_values) - set(values)
        if unknown:
            raise ValueError(f"{args.config}: unknown config keys {sorted(unknown)}")
        values.update(file_values)
    overrides = {
        "n_aux": args.n_aux,
        "lambda_smooth": args.lambda_smooth,
        "lambda_s": args.lambda_s,
        "lambda_r": args.lambda_r,
        "dropout_rate": args.dropout,
        "learning_rate": args.lr,
        "n_train": args.n_train,
        "n_test": args.n_test,
        "seed": args.seed,
    }
    for key, value in overrides.items():
        if value is not None:
            values[key] = value
    if args.ablation is not None:
        values["ablation"] = "full" if args.ablation == "none" else args.ablation
    if args.no_augment:
        values["augment_rotations"] = False
    return pipeline.TrainConfig.from_dict(values)


def cmd_denoise(args):
    cfg = _load_train_config(args)
    src = cont.read_container(getattr(args, "in"))
    stack = pipeline.stack_from_container(src, cfg.n_aux)
    os.makedirs(args.out, exist_ok=True)

    log.info("training: %d iterations, ablation=%s", cfg.n_train, cfg.ablation)
    with open(os.path.join(args.out, "train_log.csv"), "w") as log_stream:
        state = pipeline.train(stack, cfg, log_stream=log_stream)
    denoised = pipeline.infer(state, stack, n_test=cfg.n_test, seed=cfg.seed)

    cont.write_raw(os.path.join(args.out, "denoised.raw"), denoised)
    pipeline.save_checkpoint(state, os.path.join(args.out, "checkpoint.npz"))

    if stack.clean is not None:
        report = metrics.evaluate(denoised, stack.clean, roi=stack.roi,
                                  noise_spec=src.noise_spec_dict(),
                                  seed=cfg.seed, method=f"d2s-{cfg.ablation}")
        payload = report.to_dict()
        payload["config"] = cfg.to_dict()
        with open(os.path.join(args.out, "report.json"), "w") as f:
            json.dump(payload, f, indent=2)
        print(report.to_json())
    log.info("wrote denoised frame and checkpoint to %s", args.out)
    return 0


def cmd_evaluate(args):
    src = cont.read_container(getattr(args, "in"))
    clean = src.read_clean()
    if clean is None:
        raise DataFormatError(
            f"{getattr(args, 'in')}: container has no clean frames to evaluate against")
    reference = clean[src.target_index]
    estimate = cont.read_raw(args.estimate, src.height, src.width)
    roi = src.read_roi() if args.roi else None
    if args.roi and roi is None:
        raise DataFormatError(f"{getattr(args, 'in')}: container has no ROI mask")
    seed = (src.noise_spec_dict() or {}).get("seed")
    report = metrics.evaluate(estimate, reference, roi=roi,
                              noise_spec=src.noise_spec_dict(),
                              seed=seed, method=args.method)
    print(report.to_json())
    if args.out:
        payload = report.to_dict()
        payload["config"] = {"estimate": args.estimate,
                             "container": getattr(args, "in"),
                             "roi": bool(args.roi)}
        with open(args.out, "w") as f:
            json.dump(payload, f, indent=2)
    return 0


def cmd_export_png(args):
    from PIL import Image

    if args.height is not None and args.width is not None:
        h, w = args.height, args.width
    else:
        manifest = os.path.join(os.path.dirname(os.path.abspath(getattr(args, "in"))),
                                "manifest.json")
        if not os.path.isfile(manifest):
            raise ValueError(
                "--height/--width required when the input is not inside a container")
        c = cont.read_container(os.path.dirname(os.path.abspath(getattr(args, "in"))))
        h, w = c.height, c.width
    img = cont.read_raw(getattr(args, "in"), h, w)
    # Round half up so 0.5 maps to 128, not banker's 127.
    quantized = np.floor(np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(quantized, mode="L").save(args.out)
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="d2s",
        description="Self-supervised denoising for dynamic 2D image sequences")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("phantom", help="generate a synthetic dynamic sequence")
    q.add_argument("--out", required=True)
    q.add_argument("--size", type=int, default=64)
    q.add_argument("--frames", type=int, default=5)
    q.add_argument("--amplitude", type=float, default=3.0)
    q.add_argument("--kind", choices=phantom.MOTION_KINDS, default="contraction")
    q.add_argument("--drift", type=float, default=1.03)
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_phantom)

    q = sub.add_parser("simulate", help="add noise to a clean sequence")
    q.add_argument("--in", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--noise", choices=noise.NOISE_KINDS, required=True)
    q.add_argument("--sigma", type=float, default=None)
    q.add_argument("--plevel", type=float, default=None)
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_simulate)

    q = sub.add_parser("denoise", help="train per-sequence and denoise the target")
    q.add_argument("--in", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--config", default=None, help="JSON file with TrainConfig keys")
    q.add_argument("--n-aux", type=int, default=None)
    q.add_argument("--lambda-smooth", type=float, default=None)
    q.add_argument("--lambda-s", type=float, default=None)
    q.add_argument("--lambda-r", type=float, default=None)
    q.add_argument("--dropout", type=float, default=None)
    q.add_argument("--lr", type=float, default=None)
    q.add_argument("--n-train", type=int, default=None)
    q.add_argument("--n-test", type=int, default=None)
    q.add_argument("--seed", type=int, default=None)
    q.add_argument("--ablation", choices=["none", "no_single", "no_registration"],
                   default=None)
    q.add_argument("--no-augment", action="store_true")
    q.set_defaults(func=cmd_denoise)

    q = sub.add_parser("evaluate", help="PSNR/SSIM report for an estimate")
    q.add_argument("--estimate", required=True)
    q.add_argument("--in", required=True)
    q.add_argument("--roi", action="store_true")
    q.add_argument("--method", default="estimate")
    q.add_argument("--out", default=None)
    q.set_defaults(func=cmd_evaluate)

    q = sub.add_parser("export-png", help="export a raw frame as 8-bit PNG")
    q.add_argument("--in", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--height", type=int, default=None)
    q.add_argument("--width", type=int, default=None)
    q.set_defaults(func=cmd_export_png)
    return p


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except DataFormatError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except TrainingDivergedError as e:
        print(f"training diverged: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
