"""Exact count-matrix multiplication with a compiled core and numpy fallback.

Backend selection happens once at import: the Cython kernel if it built, else
a blocked numpy int64 path. Independently of that, products whose entries are
provably exact in float64 (bound <= 2^53) are routed through BLAS, which is an
order of magnitude faster and still bit-exact after rounding back to int64.
Set MMJOIN_BACKEND=cython|numpy|blas to force a specific path.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

try:
    from . import _kernel_cy
except ImportError:  # pragma: no cover - depends on build environment
    _kernel_cy = None

_FLOAT_EXACT_BOUND = 2 ** 53
_INT64_MAX = np.iinfo(np.int64).max

# the int64 path used whenever the BLAS shortcut is not exact-safe
INT_BACKEND = "cython" if _kernel_cy is not None else "numpy"
_env = os.environ.get("MMJOIN_BACKEND")
if _env in ("cython", "numpy"):
    INT_BACKEND = _env


class MatrixOverflowError(OverflowError):
    pass


class CountMatrix:
    """Dense nonnegative int64 counts with row/col keys back to value ids."""

    def __init__(self, data: np.ndarray, row_keys=None, col_keys=None):
        data = np.ascontiguousarray(data, dtype=np.int64)
        if data.ndim != 2:
            raise ValueError("CountMatrix needs a 2-d array")
        if data.size and data.min() < 0:
            raise ValueError("counts must be nonnegative")
        self.data = data
        self.row_keys = row_keys
        self.col_keys = col_keys

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other):
        return isinstance(other, CountMatrix) and np.array_equal(self.data, other.data)

    def __repr__(self):
        return f"CountMatrix({self.rows}x{self.cols})"


def identity(n: int) -> CountMatrix:
    return CountMatrix(np.eye(n, dtype=np.int64))


def _numpy_blocked(a: np.ndarray, b: np.ndarray, out: np.ndarray,
                   r0: int, r1: int, block: int = 256) -> None:
    n = a.shape[1]
    for k0 in range(0, n, block):
        k1 = min(k0 + block, n)
        out[r0:r1] += a[r0:r1, k0:k1] @ b[k0:k1]


def _int64_product(a: np.ndarray, b: np.ndarray, cores: int, backend: str) -> np.ndarray:
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    if backend == "cython":
        kern = lambda r0, r1: _kernel_cy.matmul_int64(a, b, out, r0, r1)
    else:
        kern = lambda r0, r1: _numpy_blocked(a, b, out, r0, r1)
    if cores <= 1 or a.shape[0] < 2 * cores:
        kern(0, a.shape[0])
        return out
    # disjoint row ranges keep the parallel result deterministic
    splits = np.linspace(0, a.shape[0], cores + 1).astype(int)
    with ThreadPoolExecutor(max_workers=cores) as pool:
        futs = [pool.submit(kern, splits[i], splits[i + 1]) for i in range(cores)]
        for f in futs:
            f.result()
    return out


def multiply_counts(a: CountMatrix, b: CountMatrix, cores: int = 1,
                    backend: Optional[str] = None) -> CountMatrix:
    """Exact integer product A @ B; deterministic for any cores/backend."""
    if a.cols != b.rows:
        raise ValueError(f"dimension mismatch: {a.rows}x{a.cols} @ {b.rows}x{b.cols}")
    if backend is None:
        backend = "auto"
    am = int(a.data.max()) if a.data.size else 0
    bm = int(b.data.max()) if b.data.size else 0
    bound = a.cols * am * bm
    if bound > _INT64_MAX:
        raise MatrixOverflowError(
            f"worst-case entry {bound} exceeds int64 capacity")
    if backend == "auto":
        backend = "blas" if bound <= _FLOAT_EXACT_BOUND else INT_BACKEND
    if backend == "blas":
        if bound > _FLOAT_EXACT_BOUND:
            raise MatrixOverflowError(
                f"worst-case entry {bound} is not exact in float64")
        # every term and partial sum is <= 2^53, hence exact in float64
        prod = a.data.astype(np.float64) @ b.data.astype(np.float64)
        data = np.rint(prod).astype(np.int64)
    elif backend in ("cython", "numpy"):
        if backend == "cython" and _kernel_cy is None:
            backend = "numpy"
        data = _int64_product(a.data, b.data, cores, backend)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return CountMatrix(data, row_keys=a.row_keys, col_keys=b.col_keys)


def theoretical_cost(u: int, v: int, w: int, omega: float = 3.0) -> float:
    """Analytic model U*V*W*beta^(omega-3), beta = min(U, V, W)."""
    if min(u, v, w) < 1:
        raise ValueError("dimensions must be >= 1")
    if not 2 <= omega <= 3:
        raise ValueError("omega must be in [2, 3]")
    beta = min(u, v, w)
    return float(u) * v * w * beta ** (omega - 3)
