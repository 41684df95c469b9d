"""Hot kernels behind a backend switch.

The compiled extension is used when it was built; set ``SCHEDKIT_BACKEND=python``
to force the numpy fallback.  Both backends consume identical inputs (random
draws are generated outside the kernels), so results agree to rounding.
"""

import os

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

_requested = os.environ.get("SCHEDKIT_BACKEND", "").strip().lower()
if _requested and _requested not in ("python", "cython"):
    raise ImportError(f"SCHEDKIT_BACKEND must be 'python' or 'cython', got {_requested!r}")
if _requested == "cython" and _ckernels is None:
    raise ImportError("SCHEDKIT_BACKEND=cython but the compiled extension is not built")

BACKEND = _requested or ("cython" if _ckernels is not None else "python")


def available_backends():
    return sorted(_BACKENDS)


def _impl(backend):
    return _BACKENDS[backend or BACKEND]


def ar1_recurrence(z0, decay, scale, noise, *, backend=None):
    """Run ``x_k = decay_k x_{k-1} + scale_k noise_k`` for every row; returns (n, T)."""
    noise = np.ascontiguousarray(noise, dtype=float)
    n, T = noise.shape
    z0 = np.ascontiguousarray(np.broadcast_to(np.asarray(z0, dtype=float), (n,)))
    decay = np.ascontiguousarray(decay, dtype=float)
    scale = np.ascontiguousarray(scale, dtype=float)
    if decay.shape != (T,) or scale.shape != (T,):
        raise ValueError("decay and scale must have one entry per column of noise")
    out = np.empty((n, T))
    _impl(backend).ar1_into(z0, decay, scale, noise, out)
    return out


def ks_2samp_sorted_rows(a, b, *, backend=None):
    """Two-sample KS statistics between matching rows of two row-sorted arrays."""
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[0] != b.shape[0]:
        raise ValueError("expected two 2-d arrays with the same number of rows")
    out = np.empty(a.shape[0])
    _impl(backend).ks_2samp_sorted_rows(a, b, out)
    return out


def ks_normal_sorted_rows(x, *, backend=None):
    """One-sample KS statistics against N(0, 1) for each row of a row-sorted array."""
    x = np.ascontiguousarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError("expected a 2-d array")
    out = np.empty(x.shape[0])
    _impl(backend).ks_normal_sorted_rows(x, out)
    return out
