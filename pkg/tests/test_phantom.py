import numpy as np
import pytest

from d2s.phantom import PhantomSpec, generate_phantom, motion_schedule
from d2s.warp import warp


def _dilate(mask, px):
    out = mask.copy()
    for dy in range(-px, px + 1):
        for dx in range(-px, px + 1):
            out |= np.roll(np.roll(mask, dy, axis=0), dx, axis=1)
    return out


def test_static_phantom_frames_identical():
    out = generate_phantom(PhantomSpec(motion_amplitude=0.0, contrast_drift=1.0,
                                       seed=4))
    for k in range(out.clean_frames.shape[0]):
        assert np.array_equal(out.clean_frames[k], out.clean_frames[0])
    assert np.abs(out.true_fields).max() == 0.0


def test_translation_field_is_constant_schedule():
    amp = 3.0
    out = generate_phantom(PhantomSpec(motion_amplitude=amp,
                                       motion_kind="translation", seed=1))
    s = motion_schedule(5)
    for k in range(5):
        assert np.all(out.true_fields[k, 0] == np.float32(amp * s[k]))
        assert np.all(out.true_fields[k, 1] == 0.0)


@pytest.mark.parametrize("kind", ["contraction", "translation", "mixed"])
def test_roundtrip_warp_reproduces_target(kind):
    out = generate_phantom(PhantomSpec(motion_amplitude=3.0, motion_kind=kind,
                                       seed=2))
    t = out.target_index
    for k in range(out.clean_frames.shape[0]):
        back = warp(out.clean_frames[k].astype(np.float64),
                    out.true_fields[k].astype(np.float64))
        assert np.abs(back - out.clean_frames[t]).mean() < 0.01


def test_roundtrip_at_max_amplitude():
    out = generate_phantom(PhantomSpec(motion_amplitude=5.0, seed=6))
    t = out.target_index
    for k in range(out.clean_frames.shape[0]):
        back = warp(out.clean_frames[k].astype(np.float64),
                    out.true_fields[k].astype(np.float64))
        assert np.abs(back - out.clean_frames[t]).mean() < 0.01


def test_frames_within_unit_range():
    out = generate_phantom(PhantomSpec(seed=9, motion_kind="mixed"))
    assert out.clean_frames.min() >= 0.0
    assert out.clean_frames.max() <= 1.0


def test_deterministic_under_seed():
    a = generate_phantom(PhantomSpec(seed=12))
    b = generate_phantom(PhantomSpec(seed=12))
    assert np.array_equal(a.clean_frames, b.clean_frames)
    assert np.array_equal(a.true_fields, b.true_fields)
    c = generate_phantom(PhantomSpec(seed=13))
    assert not np.array_equal(a.clean_frames, c.clean_frames)


@pytest.mark.parametrize("kind", ["contraction", "translation", "mixed"])
def test_roi_covers_changing_pixels(kind):
    out = generate_phantom(PhantomSpec(motion_amplitude=4.0, motion_kind=kind,
                                       seed=3))
    spread = out.clean_frames.max(axis=0) - out.clean_frames.min(axis=0)
    changing = spread > 0.05
    dilated = _dilate(out.roi_mask, 2)
    assert not (changing & ~dilated).any()


def test_target_index_is_middle_frame():
    assert generate_phantom(PhantomSpec(n_frames=5)).target_index == 2
    assert generate_phantom(PhantomSpec(n_frames=8)).target_index == 4


def test_spec_validation():
    with pytest.raises(ValueError):
        PhantomSpec(size=16)
    with pytest.raises(ValueError):
        PhantomSpec(n_frames=1)
    with pytest.raises(ValueError):
        PhantomSpec(motion_kind="spin")
    with pytest.raises(ValueError):
        PhantomSpec(contrast_drift=1.5)
    with pytest.raises(ValueError):
        PhantomSpec(motion_amplitude=20.0, size=64)
