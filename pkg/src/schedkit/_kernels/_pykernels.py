"""Numpy implementations of the hot loops (fallback when the extension is absent)."""

import numpy as np
from scipy.special import ndtr


def ar1_into(z0, decay, scale, noise, out):
    x = np.array(z0, dtype=float)
    for k in range(noise.shape[1]):
        x = decay[k] * x + scale[k] * noise[:, k]
        out[:, k] = x


def ks_2samp_sorted_rows(a, b, out):
    n1, n2 = a.shape[1], b.shape[1]
    for r in range(a.shape[0]):
        grid = np.concatenate([a[r], b[r]])
        cdf1 = np.searchsorted(a[r], grid, side="right") / n1
        cdf2 = np.searchsorted(b[r], grid, side="right") / n2
        out[r] = np.max(np.abs(cdf1 - cdf2))


def ks_normal_sorted_rows(x, out):
    n = x.shape[1]
    i = np.arange(n)
    for r in range(x.shape[0]):
        f = ndtr(x[r])
        out[r] = max(np.max((i + 1) / n - f), np.max(f - i / n), 0.0)
