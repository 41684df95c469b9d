# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.  Same signatures and semantics as ``_pykernels``."""

from libc.math cimport erfc, fabs, sqrt


def ar1_into(const double[::1] z0, const double[::1] decay, const double[::1] scale,
             const double[:, ::1] noise, double[:, ::1] out):
    """out[i, k] = decay[k] * out[i, k-1] + scale[k] * noise[i, k], with out[i, -1] = z0[i]."""
    cdef Py_ssize_t n = noise.shape[0], T = noise.shape[1], i, k
    cdef double x
    with nogil:
        for i in range(n):
            x = z0[i]
            for k in range(T):
                x = decay[k] * x + scale[k] * noise[i, k]
                out[i, k] = x


def ks_2samp_sorted_rows(const double[:, ::1] a, const double[:, ::1] b, double[::1] out):
    """Two-sample KS statistic per row of row-sorted samples."""
    cdef Py_ssize_t m = a.shape[0], n1 = a.shape[1], n2 = b.shape[1], r, i, j
    cdef double d, v, gap
    with nogil:
        for r in range(m):
            i = 0
            j = 0
            d = 0.0
            while i < n1 and j < n2:
                v = a[r, i] if a[r, i] <= b[r, j] else b[r, j]
                while i < n1 and a[r, i] == v:
                    i += 1
                while j < n2 and b[r, j] == v:
                    j += 1
                gap = fabs(<double>i / n1 - <double>j / n2)
                if gap > d:
                    d = gap
            out[r] = d


def ks_normal_sorted_rows(const double[:, ::1] x, double[::1] out):
    """One-sample KS statistic against N(0, 1) per row of row-sorted samples."""
    cdef Py_ssize_t m = x.shape[0], n = x.shape[1], r, i
    cdef double d, f, lo, hi
    cdef double inv_sqrt2 = 1.0 / sqrt(2.0)
    with nogil:
        for r in range(m):
            d = 0.0
            for i in range(n):
                f = 0.5 * erfc(-x[r, i] * inv_sqrt2)
                hi = <double>(i + 1) / n - f
                lo = f - <double>i / n
                if hi > d:
                    d = hi
                if lo > d:
                    d = lo
            out[r] = d
