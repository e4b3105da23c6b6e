"""Pure numpy implementations of the hot kernels.

Used when the compiled ``_ckernels`` extension is unavailable, or when
``SMOOTHLAB_PURE_PYTHON=1`` is set. Both backends expose the same four
functions with identical semantics.
"""
from __future__ import annotations

import numpy as np


def wht_inplace(a: np.ndarray) -> None:
    """Unnormalized Walsh-Hadamard transform of ``a`` (float64, length 2**n), in place."""
    size = a.shape[0]
    if size & (size - 1):
        raise ValueError(f"length {size} is not a power of two")
    h = 1
    while h < size:
        view = a.reshape(-1, 2, h)
        lo = view[:, 0, :].copy()
        view[:, 0, :] += view[:, 1, :]
        np.subtract(lo, view[:, 1, :], out=view[:, 1, :])
        h *= 2


def span_images(gens: np.ndarray) -> np.ndarray:
    """out[m] = XOR of gens[i] over the set bits i of m, for all m < 2**len(gens)."""
    out = np.zeros(1, dtype=np.uint64)
    for g in gens:
        out = np.concatenate([out, out ^ np.uint64(g)])
    return out


def popcount(x: np.ndarray) -> np.ndarray:
    return np.bitwise_count(x.astype(np.uint64, copy=False)).astype(np.int64)


def parity_products(z: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Bit r of out[j] is the F2 inner product of rows[r] and z[j]."""
    z = z.astype(np.uint64, copy=False)
    out = np.zeros(z.shape[0], dtype=np.uint64)
    for r, row in enumerate(rows):
        bit = np.bitwise_count(z & np.uint64(row)) & np.uint8(1)
        out |= bit.astype(np.uint64) << np.uint64(r)
    return out
