# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Blocked int64 matrix multiply, the compiled hot kernel.

Row-range arguments let callers partition the output across threads; the
kernel releases the GIL so partitions actually run in parallel.
"""

from cython.parallel cimport prange  # noqa: F401  (kept for future use)
cimport cython


@cython.boundscheck(False)
@cython.wraparound(False)
cdef void _mm_block(const long long[:, ::1] a, const long long[:, ::1] b,
                    long long[:, ::1] out, Py_ssize_t r0, Py_ssize_t r1,
                    Py_ssize_t blk) noexcept nogil:
    cdef Py_ssize_t n = a.shape[1]
    cdef Py_ssize_t w = b.shape[1]
    cdef Py_ssize_t i, j, k, kk, jj, khi, jhi
    cdef long long aik
    kk = 0
    while kk < n:
        khi = kk + blk
        if khi > n:
            khi = n
        jj = 0
        while jj < w:
            jhi = jj + blk
            if jhi > w:
                jhi = w
            for i in range(r0, r1):
                for k in range(kk, khi):
                    aik = a[i, k]
                    if aik == 0:
                        continue
                    for j in range(jj, jhi):
                        out[i, j] += aik * b[k, j]
            jj = jhi
        kk = khi


def matmul_int64(const long long[:, ::1] a, const long long[:, ::1] b,
                 long long[:, ::1] out, Py_ssize_t row_start,
                 Py_ssize_t row_end, Py_ssize_t block=128):
    """out[row_start:row_end] += a[row_start:row_end] @ b (exact int64)."""
    with nogil:
        _mm_block(a, b, out, row_start, row_end, block)
