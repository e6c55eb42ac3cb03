"""Hot numeric kernels: blockwise 2D DCT and the one-level Haar transform.

Every kernel exists twice, as a vectorised numpy implementation
(``*_numpy``) and as an explicit loop compiled by numba (``*_jit``). The
public names (``dct2_blocks`` etc.) dispatch to whichever backend
:mod:`wmx.accel` selected at import time. Both paths compute the same
orthonormal transforms; they may differ in the last couple of float ulps
because the summation order differs.
"""

from functools import lru_cache

import numpy as np

from .accel import JIT_ENABLED, maybe_jit


@lru_cache(maxsize=16)
def _dct_matrix_cached(n: int):
    k = np.arange(n)
    t = np.cos(np.pi * np.outer(k, 2 * k + 1) / (2.0 * n))
    t[0] *= np.sqrt(1.0 / n)
    t[1:] *= np.sqrt(2.0 / n)
    t.setflags(write=False)
    return t


def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II basis matrix, rows indexed by frequency."""
    return _dct_matrix_cached(n)


def to_blocks(a: np.ndarray, b: int) -> np.ndarray:
    """Split a 2D array with side multiples of ``b`` into (n, b, b) blocks."""
    h, w = a.shape
    if h % b or w % b:
        raise ValueError(f"array of shape {a.shape} not divisible into {b}x{b} blocks")
    blocks = a.reshape(h // b, b, w // b, b).swapaxes(1, 2).reshape(-1, b, b)
    return np.ascontiguousarray(blocks)


def from_blocks(blocks: np.ndarray, h: int, w: int) -> np.ndarray:
    """Inverse of :func:`to_blocks`."""
    b = blocks.shape[1]
    return blocks.reshape(h // b, w // b, b, b).swapaxes(1, 2).reshape(h, w)


def dct2_blocks_numpy(blocks: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.einsum("ij,njk,lk->nil", t, blocks, t, optimize=True)


def idct2_blocks_numpy(blocks: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.einsum("ji,njk,kl->nil", t, blocks, t, optimize=True)


@maybe_jit
def dct2_blocks_jit(blocks, t):  # pragma: no cover - exercised via dispatch
    n = blocks.shape[0]
    out = np.empty_like(blocks)
    tt = np.ascontiguousarray(t.T)
    for i in range(n):
        bi = np.ascontiguousarray(blocks[i])
        out[i] = np.dot(t, np.dot(bi, tt))
    return out


@maybe_jit
def idct2_blocks_jit(blocks, t):  # pragma: no cover - exercised via dispatch
    n = blocks.shape[0]
    out = np.empty_like(blocks)
    tt = np.ascontiguousarray(t.T)
    for i in range(n):
        bi = np.ascontiguousarray(blocks[i])
        out[i] = np.dot(tt, np.dot(bi, t))
    return out


def haar2_numpy(x: np.ndarray):
    a = x[0::2, 0::2]
    b = x[0::2, 1::2]
    c = x[1::2, 0::2]
    d = x[1::2, 1::2]
    ll = (a + b + c + d) * 0.5
    lh = (a + b - c - d) * 0.5
    hl = (a - b + c - d) * 0.5
    hh = (a - b - c + d) * 0.5
    return ll, lh, hl, hh


def ihaar2_numpy(ll, lh, hl, hh):
    h2, w2 = ll.shape
    out = np.empty((h2 * 2, w2 * 2), dtype=ll.dtype)
    out[0::2, 0::2] = (ll + lh + hl + hh) * 0.5
    out[0::2, 1::2] = (ll + lh - hl - hh) * 0.5
    out[1::2, 0::2] = (ll - lh + hl - hh) * 0.5
    out[1::2, 1::2] = (ll - lh - hl + hh) * 0.5
    return out


@maybe_jit
def haar2_jit(x):  # pragma: no cover - exercised via dispatch
    h2 = x.shape[0] // 2
    w2 = x.shape[1] // 2
    ll = np.empty((h2, w2), dtype=x.dtype)
    lh = np.empty((h2, w2), dtype=x.dtype)
    hl = np.empty((h2, w2), dtype=x.dtype)
    hh = np.empty((h2, w2), dtype=x.dtype)
    for i in range(h2):
        for j in range(w2):
            a = x[2 * i, 2 * j]
            b = x[2 * i, 2 * j + 1]
            c = x[2 * i + 1, 2 * j]
            d = x[2 * i + 1, 2 * j + 1]
            ll[i, j] = (a + b + c + d) * 0.5
            lh[i, j] = (a + b - c - d) * 0.5
            hl[i, j] = (a - b + c - d) * 0.5
            hh[i, j] = (a - b - c + d) * 0.5
    return ll, lh, hl, hh


@maybe_jit
def ihaar2_jit(ll, lh, hl, hh):  # pragma: no cover - exercised via dispatch
    h2, w2 = ll.shape
    out = np.empty((h2 * 2, w2 * 2), dtype=ll.dtype)
    for i in range(h2):
        for j in range(w2):
            s = ll[i, j]
            v = lh[i, j]
            u = hl[i, j]
            t = hh[i, j]
            out[2 * i, 2 * j] = (s + v + u + t) * 0.5
            out[2 * i, 2 * j + 1] = (s + v - u - t) * 0.5
            out[2 * i + 1, 2 * j] = (s - v + u - t) * 0.5
            out[2 * i + 1, 2 * j + 1] = (s - v - u + t) * 0.5
    return out


if JIT_ENABLED:
    dct2_blocks = dct2_blocks_jit
    idct2_blocks = idct2_blocks_jit
    _haar2_impl = haar2_jit
    ihaar2 = ihaar2_jit
else:
    dct2_blocks = dct2_blocks_numpy
    idct2_blocks = idct2_blocks_numpy
    _haar2_impl = haar2_numpy
    ihaar2 = ihaar2_numpy


def haar2(x: np.ndarray):
    # the jit loops would silently drop a trailing odd row or column
    if x.shape[0] % 2 or x.shape[1] % 2:
        raise ValueError(f"single-level transform needs even sides, got {x.shape}")
    return _haar2_impl(x)
