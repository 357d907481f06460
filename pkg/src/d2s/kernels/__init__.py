"""Backend dispatch for the hot numeric kernels.

Two interchangeable implementations exist: jitted numba loops
(``numba_impl``) and a pure-numpy fallback (``numpy_impl``). The active
one is chosen once at import time from the ``D2S_BACKEND`` environment
variable (``numba`` or ``numpy``); without the flag, numba is used when
it imports cleanly. ``set_backend`` switches at runtime, which the test
suite and ``benchmarks/bench_backends.py`` rely on.

Kernel surface (all dtype-preserving, layout [B, C, H, W]):
    conv3x3_forward(x, w, b)            same-size 3x3 conv, zero padding
    conv3x3_backward_input(dy, w)
    conv3x3_backward_params(x, dy)      -> (dw, db)
    warp_forward(img, field)            bilinear, border clamp
    warp_backward(img, field, dout)     -> (dimg, dfield)
"""

import os

# The TBB probe is noisy on some installs and we gain nothing from it.
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

from . import numpy_impl

_BACKENDS = {"numpy": numpy_impl}
_active = {}


def _load_numba():
    if "numba" not in _BACKENDS:
        from . import numba_impl
        _BACKENDS["numba"] = numba_impl
    return _BACKENDS["numba"]


def set_backend(name):
    """Select the kernel backend: 'numba' or 'numpy'."""
    if name == "numpy":
        _active["mod"] = _BACKENDS["numpy"]
    elif name == "numba":
        _active["mod"] = _load_numba()
    else:
        raise ValueError(f"unknown backend {name!r}, expected 'numba' or 'numpy'")
    _active["name"] = name


def get_backend():
    return _active["name"]


def _init_from_env():
    choice = os.environ.get("D2S_BACKEND", "").strip().lower()
    if choice:
        set_backend(choice)
        return
    try:
        set_backend("numba")
    except ImportError:
        set_backend("numpy")


_init_from_env()


def conv3x3_forward(x, w, b):
    return _active["mod"].conv3x3_forward(x, w, b)


def conv3x3_backward_input(dy, w):
    return _active["mod"].conv3x3_backward_input(dy, w)


def conv3x3_backward_params(x, dy):
    return _active["mod"].conv3x3_backward_params(x, dy)


def warp_forward(img, field):
    return _active["mod"].warp_forward(img, field)


def warp_backward(img, field, dout):
    return _active["mod"].warp_backward(img, field, dout)
