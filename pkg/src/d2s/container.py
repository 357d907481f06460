"""On-disk sequence container: manifest.json plus raw float32 frames.

Layout of a container directory:

    manifest.json        height, width, frame_count, target_index,
                         intensity_range, plus optional keys: "roi"
                         (file name), "clean_dir", "fields_dir", "noise"
    frame_0000.raw ...   little-endian IEEE-754 float32, row-major
    roi.raw              optional binary ROI (0/1 as float32)
    clean/frame_*.raw    optional clean counterparts of noisy frames
    fields/field_0000_dy.raw / _dx.raw
                         optional ground-truth displacement components

Structural problems (missing files, wrong byte length, malformed
manifest) raise ``DataFormatError``.
"""

import json
import os

import numpy as np

from .errors import DataFormatError


def _frame_name(k):
    return f"frame_{k:04d}.raw"


def write_raw(path, arr):
    np.asarray(arr, dtype="<f4").tofile(path)


def read_raw(path, height, width):
    data = np.fromfile(path, dtype="<f4")
    if data.size != height * width:
        raise DataFormatError(
            f"{path}: expected {height * width} float32 values, found {data.size}")
    return data.reshape(height, width)


class SequenceContainer:
    def __init__(self, path, manifest):
        self.path = path
        self.manifest = manifest

    @property
    def height(self):
        return self.manifest["height"]

    @property
    def width(self):
        return self.manifest["width"]

    @property
    def frame_count(self):
        return self.manifest["frame_count"]

    @property
    def target_index(self):
        return self.manifest["target_index"]

    def frame_path(self, k):
        return os.path.join(self.path, _frame_name(k))

    def read_frame(self, k):
        return read_raw(self.frame_path(k), self.height, self.width)

    def read_frames(self):
        return np.stack([self.read_frame(k) for k in range(self.frame_count)])

    def read_roi(self):
        if "roi" not in self.manifest:
            return None
        roi = read_raw(os.path.join(self.path, self.manifest["roi"]),
                       self.height, self.width)
        return roi > 0.5

    def read_clean(self):
        if "clean_dir" not in self.manifest:
            return None
        d = os.path.join(self.path, self.manifest["clean_dir"])
        return np.stack([read_raw(os.path.join(d, _frame_name(k)),
                                  self.height, self.width)
                         for k in range(self.frame_count)])

    def noise_spec_dict(self):
        return self.manifest.get("noise")


def write_container(path, frames, target_index, roi=None, clean=None,
                    fields=None, noise=None):
    """Write a sequence container; returns the SequenceContainer."""
    frames = np.asarray(frames)
    T, H, W = frames.shape
    os.makedirs(path, exist_ok=True)
    manifest = {
        "height": H,
        "width": W,
        "frame_count": T,
        "target_index": int(target_index),
        "intensity_range": [0.0, 1.0],
    }
    for k in range(T):
        write_raw(os.path.join(path, _frame_name(k)), frames[k])
    if roi is not None:
        manifest["roi"] = "roi.raw"
        write_raw(os.path.join(path, "roi.raw"), np.asarray(roi, dtype=np.float32))
    if clean is not None:
        manifest["clean_dir"] = "clean"
        d = os.path.join(path, "clean")
        os.makedirs(d, exist_ok=True)
        for k in range(T):
            write_raw(os.path.join(d, _frame_name(k)), clean[k])
    if fields is not None:
        manifest["fields_dir"] = "fields"
        d = os.path.join(path, "fields")
        os.makedirs(d, exist_ok=True)
        for k in range(T):
            write_raw(os.path.join(d, f"field_{k:04d}_dy.raw"), fields[k, 0])
            write_raw(os.path.join(d, f"field_{k:04d}_dx.raw"), fields[k, 1])
    if noise is not None:
        manifest["noise"] = noise
    with open(os.path.join(path, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2)
    return SequenceContainer(path, manifest)


def read_container(path):
    mpath = os.path.join(path, "manifest.json")
    if not os.path.isfile(mpath):
        raise DataFormatError(f"{path}: no manifest.json")
    try:
        with open(mpath) as f:
            manifest = json.load(f)
    except json.JSONDecodeError as e:
        raise DataFormatError(f"{mpath}: malformed JSON ({e})") from e
    for key in ("height", "width", "frame_count", "target_index"):
        if key not in manifest:
            raise DataFormatError(f"{mpath}: missing key {key!r}")
    c = SequenceContainer(path, manifest)
    for k in range(c.frame_count):
        p = c.frame_path(k)
        if not os.path.isfile(p):
            raise DataFormatError(f"{path}: missing {_frame_name(k)}")
        expect = c.height * c.width * 4
        actual = os.path.getsize(p)
        if actual != expect:
            raise DataFormatError(
                f"{p}: expected {expect} bytes ({c.height}x{c.width} float32), "
                f"found {actual}")
    return c
