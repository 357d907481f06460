"""Image-quality metrics: PSNR, SSIM and ROI-masked variants.

Both inputs are clipped to the data range before evaluation, since the
noise simulators intentionally leave values unclipped. SSIM uses the
canonical 11x11 Gaussian window (sigma 1.5, K1=0.01, K2=0.03) with the
local map averaged over fully supported window centers; ROI variants
restrict the PSNR average to ROI pixels and the SSIM average to windows
whose centers lie in the ROI.
"""

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def psnr(estimate, reference, peak=1.0):
    """10*log10(peak^2 / MSE) on [0, peak]-clipped inputs; inf when equal."""
    if estimate.shape != reference.shape:
        raise ValueError(
            f"shape mismatch: estimate {estimate.shape} vs reference {reference.shape}")
    a = np.clip(np.asarray(estimate, dtype=np.float64), 0.0, peak)
    b = np.clip(np.asarray(reference, dtype=np.float64), 0.0, peak)
    mse = float(((a - b) ** 2).mean())
    if mse == 0.0:
        return float("inf")
    return 10.0 * math.log10(peak * peak / mse)


def _gaussian_kernel1d():
    r = (SSIM_WINDOW - 1) // 2
    t = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-0.5 * (t / SSIM_SIGMA) ** 2)
    return k / k.sum()


def _filter_valid(img, k1d):
    """Separable 'valid' correlation with the Gaussian window."""
    from numpy.lib.stride_tricks import sliding_window_view
    n = k1d.size
    rows = sliding_window_view(img, n, axis=1) @ k1d
    return sliding_window_view(rows, n, axis=0) @ k1d


def ssim_map(estimate, reference, data_range=1.0):
    """Local SSIM over all fully supported window centers.

    Returns a map of shape (H - 10, W - 10); its mean is the global SSIM.
    """
    if estimate.shape != reference.shape:
        raise ValueError(
            f"shape mismatch: estimate {estimate.shape} vs reference {reference.shape}")
    if min(estimate.shape) < SSIM_WINDOW:
        raise ValueError(
            f"image {estimate.shape} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    a = np.clip(np.asarray(estimate, dtype=np.float64), 0.0, data_range)
    b = np.clip(np.asarray(reference, dtype=np.float64), 0.0, data_range)
    k = _gaussian_kernel1d()
    ua = _filter_valid(a, k)
    ub = _filter_valid(b, k)
    uaa = _filter_valid(a * a, k)
    ubb = _filter_valid(b * b, k)
    uab = _filter_valid(a * b, k)
    va = uaa - ua * ua
    vb = ubb - ub * ub
    vab = uab - ua * ub
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    return (((2 * ua * ub + c1) * (2 * vab + c2))
            / ((ua * ua + ub * ub + c1) * (va + vb + c2)))


def ssim(estimate, reference, data_range=1.0):
    return float(ssim_map(estimate, reference, data_range).mean())


def masked_metrics(estimate, reference, roi, peak=1.0):
    """(roi_psnr, roi_ssim) restricted to a binary region of interest."""
    roi = np.asarray(roi).astype(bool)
    if roi.shape != estimate.shape:
        raise ValueError(f"shape mismatch: roi {roi.shape} vs image {estimate.shape}")
    if not roi.any():
        raise ValueError("empty ROI")
    a = np.clip(np.asarray(estimate, dtype=np.float64), 0.0, peak)
    b = np.clip(np.asarray(reference, dtype=np.float64), 0.0, peak)
    mse = float(((a - b) ** 2)[roi].mean())
    roi_psnr = float("inf") if mse == 0.0 else 10.0 * math.log10(peak * peak / mse)

    smap = ssim_map(estimate, reference, data_range=peak)
    r = (SSIM_WINDOW - 1) // 2
    centers = roi[r:-r, r:-r]
    if not centers.any():
        raise ValueError("ROI contains no fully supported SSIM window centers")
    roi_ssim = float(smap[centers].mean())
    return roi_psnr, roi_ssim


def _json_num(v):
    if v is None:
        return None
    return "inf" if math.isinf(v) else v


def _parse_num(v):
    if v is None:
        return None
    return float("inf") if v == "inf" else float(v)


@dataclass
class EvalReport:
    psnr: float
    ssim: float
    roi_psnr: Optional[float] = None
    roi_ssim: Optional[float] = None
    noise_spec: Optional[dict] = None
    seed: Optional[int] = None
    method: str = ""

    def to_dict(self):
        return {
            "psnr": _json_num(self.psnr),
            "ssim": self.ssim,
            "roi_psnr": _json_num(self.roi_psnr),
            "roi_ssim": self.roi_ssim,
            "noise_spec": self.noise_spec,
            "seed": self.seed,
            "method": self.method,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d):
        return cls(psnr=_parse_num(d["psnr"]), ssim=d["ssim"],
                   roi_psnr=_parse_num(d.get("roi_psnr")),
                   roi_ssim=d.get("roi_ssim"), noise_spec=d.get("noise_spec"),
                   seed=d.get("seed"), method=d.get("method", ""))


def evaluate(estimate, reference, roi=None, noise_spec=None, seed=None, method=""):
    """Full report for one estimate/reference pair."""
    roi_psnr = roi_ssim = None
    if roi is not None:
        roi_psnr, roi_ssim = masked_metrics(estimate, reference, roi)
    return EvalReport(psnr=psnr(estimate, reference),
                      ssim=ssim(estimate, reference),
                      roi_psnr=roi_psnr, roi_ssim=roi_ssim,
                      noise_spec=noise_spec, seed=seed, method=method)
