import json
import math

import numpy as np
import pytest

from d2s.metrics import EvalReport, masked_metrics, psnr, ssim, ssim_map
from oracles import roi_psnr_loops


def test_psnr_identity_is_inf():
    x = np.random.default_rng(0).uniform(size=(32, 32))
    assert psnr(x, x.copy()) == float("inf")


def test_psnr_formula():
    ref = np.full((100, 100), 0.5)
    est = ref + 0.1  # MSE = 0.01 after no clipping effect
    assert abs(psnr(est, ref) - 20.0) < 1e-9


def test_psnr_clips_before_evaluating():
    ref = np.zeros((10, 10))
    est = np.full((10, 10), -1.0)  # clips to 0 -> identical
    assert psnr(est, ref) == float("inf")


def test_psnr_shape_mismatch():
    with pytest.raises(ValueError):
        psnr(np.zeros((4, 4)), np.zeros((4, 5)))


def test_psnr_strictly_decreasing_in_mse():
    ref = np.full((50, 50), 0.5)
    values = [psnr(ref + d, ref) for d in (0.01, 0.02, 0.05, 0.1)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_more_noise_never_helps_on_average():
    rng = np.random.default_rng(1)
    ref = rng.uniform(0.2, 0.8, size=(48, 48))
    diffs = []
    for _ in range(100):
        small = ref + rng.normal(0, 0.05, ref.shape)
        diffs.append(psnr(small, ref)
                     - psnr(small + rng.normal(0, 0.05, ref.shape), ref))
    assert np.mean(diffs) > 0


def test_ssim_identity_is_exactly_one():
    x = np.random.default_rng(2).uniform(size=(40, 40))
    assert ssim(x, x.copy()) == 1.0


def test_ssim_constant_images_closed_form():
    c1, c2 = 0.3, 0.6
    a = np.full((32, 32), c1)
    b = np.full((32, 32), c2)
    C1 = 0.01 ** 2
    expected = (2 * c1 * c2 + C1) / (c1 * c1 + c2 * c2 + C1)
    assert abs(ssim(a, b) - expected) < 1e-12


def test_ssim_symmetry():
    rng = np.random.default_rng(3)
    a = rng.uniform(size=(36, 36))
    b = np.clip(a + rng.normal(0, 0.1, a.shape), 0, 1)
    assert abs(ssim(a, b) - ssim(b, a)) < 1e-12


def test_ssim_matches_skimage():
    from skimage.metrics import structural_similarity

    rng = np.random.default_rng(4)
    for _ in range(20):
        a = rng.uniform(size=(48, 48))
        b = np.clip(a + rng.normal(0, rng.uniform(0.02, 0.3), a.shape), 0, 1)
        ours = ssim(a, b)
        ref = structural_similarity(a, b, win_size=11, gaussian_weights=True,
                                    sigma=1.5, use_sample_covariance=False,
                                    data_range=1.0)
        assert abs(ours - ref) < 1e-3


def test_ssim_rejects_tiny_images():
    with pytest.raises(ValueError):
        ssim(np.zeros((8, 8)), np.zeros((8, 8)))


def test_masked_metrics_full_roi_equals_global():
    rng = np.random.default_rng(5)
    a = rng.uniform(size=(40, 40))
    b = rng.uniform(size=(40, 40))
    rp, rs = masked_metrics(a, b, np.ones((40, 40), bool))
    assert rp == psnr(a, b)
    assert rs == ssim(a, b)


def test_masked_metrics_identical_pixels_inf():
    rng = np.random.default_rng(6)
    a = rng.uniform(size=(32, 32))
    b = a.copy()
    b[20:, :] += 0.2  # differences only outside the ROI
    roi = np.zeros((32, 32), bool)
    roi[:16, :] = True
    rp, _ = masked_metrics(a, b, roi)
    assert rp == float("inf")


def test_masked_metrics_empty_roi():
    with pytest.raises(ValueError):
        masked_metrics(np.zeros((20, 20)), np.zeros((20, 20)),
                       np.zeros((20, 20), bool))


def test_roi_psnr_matches_bruteforce():
    rng = np.random.default_rng(7)
    a = rng.uniform(-0.1, 1.1, size=(24, 24))
    b = rng.uniform(0, 1, size=(24, 24))
    roi = rng.random((24, 24)) > 0.4
    rp, _ = masked_metrics(a, b, roi)
    assert abs(rp - roi_psnr_loops(a, b, roi)) < 1e-9


def test_roi_ssim_averages_windows_centered_in_roi():
    rng = np.random.default_rng(8)
    a = rng.uniform(size=(30, 30))
    b = np.clip(a + rng.normal(0, 0.1, a.shape), 0, 1)
    roi = np.zeros((30, 30), bool)
    roi[8:20, 10:22] = True
    _, rs = masked_metrics(a, b, roi)
    smap = ssim_map(a, b)
    expected = smap[roi[5:-5, 5:-5]].mean()
    assert abs(rs - expected) < 1e-12


def test_report_json_roundtrip_full_precision():
    r = EvalReport(psnr=23.123456789012345, ssim=0.8765432109876543,
                   roi_psnr=float("inf"), roi_ssim=None,
                   noise_spec={"kind": "gaussian", "sigma": 0.15,
                               "p_level": 0.0, "seed": 7},
                   seed=7, method="d2s-full")
    parsed = EvalReport.from_dict(json.loads(r.to_json()))
    assert parsed.psnr == r.psnr
    assert parsed.ssim == r.ssim
    assert math.isinf(parsed.roi_psnr)
    assert parsed.noise_spec == r.noise_spec
    assert parsed.method == r.method
    payload = json.loads(r.to_json())
    assert set(payload) == {"psnr", "ssim", "roi_psnr", "roi_ssim",
                            "noise_spec", "seed", "method"}
