"""Numba kernels for the bulk pipelines.

Scalar reference implementations of everything here live in rng.py,
shuffle.py, and estimator.py; equivalence is pinned by tests.  The kernels
work on blocks of permutations (shards) so the case-count loop can run
case-outer/permutation-inner, keeping each 4 KB counter block cache-hot.

Algorithm ids: 0 fy-mod, 1 fy-float, 2 fy-muldiv, 3 naive, 4 sattolo.
"""
from __future__ import annotations

import numpy as np
from numba import njit

ALGO_IDS = {"fy-mod": 0, "fy-float": 1, "fy-muldiv": 2, "naive": 3, "sattolo": 4}

_ONE = np.uint64(1)


@njit(cache=True, nogil=True)
def lcg_words(state: np.uint64, out: np.ndarray) -> np.uint64:
    """Fill `out` with 15-bit MSVC LCG words; returns the new state."""
    s = np.uint64(state)
    mult = np.uint64(214013)
    inc = np.uint64(2531011)
    mask32 = np.uint64(0xFFFFFFFF)
    for i in range(out.shape[0]):
        s = (s * mult + inc) & mask32
        out[i] = np.uint16((s >> np.uint64(16)) & np.uint64(0x7FFF))
    return s


@njit(cache=True, nogil=True)
def fill_perms(words, word_bits, bits, n, count, algo_id, out):
    """Shuffle `count` permutations of size n into out[count*n] (uint8).

    `words` is the raw stream (uint8 bytes or uint16 LCG words) consumed
    big-endian through a bit queue, exactly like BitSource.draw_bits.
    Returns the number of raw words consumed.
    """
    acc = np.uint64(0)
    queued = 0
    wi = 0
    w = np.uint64(word_bits)
    b = np.uint64(bits)
    mask = (_ONE << b) - _ONE
    nn = np.int64(n)
    for it in range(count):
        row = it * nn
        for i in range(nn):
            out[row + i] = np.uint8(i)
        for j in range(nn, 1, -1):
            while queued < bits:
                acc = (acc << w) | np.uint64(words[wi])
                wi += 1
                queued += word_bits
            queued -= bits
            r = np.int64((acc >> np.uint64(queued)) & mask)
            acc &= (_ONE << np.uint64(queued)) - _ONE
            if algo_id == 0:
                k = r % j
            elif algo_id == 1:
                k = (j * r) // (np.int64(1) << np.int64(bits))
            elif algo_id == 2:
                k = (r * j) >> np.int64(bits)
            elif algo_id == 3:
                k = r % nn
            else:
                k = r % (j - 1)
            t = out[row + k]
            out[row + k] = out[row + j - 1]
            out[row + j - 1] = t
    return wi


@njit(cache=True, nogil=True)
def fill_perms_ideal(stream, n, count, widths, out):
    """fy-ideal block shuffle: per-step rejection sampling on ceil(log2 j)
    bits from a uint8 keystream.

    Returns (permutations completed, bytes consumed).  Completion can fall
    short when the keystream runs out mid-rejection; the caller extends
    the stream (deterministic: it is a prefix-extension) and resumes.
    """
    acc = np.uint64(0)
    queued = 0
    wi = 0
    total = stream.shape[0]
    nn = np.int64(n)
    for it in range(count):
        row = it * nn
        for i in range(nn):
            out[row + i] = np.uint8(i)
        for j in range(nn, 1, -1):
            bits = np.int64(widths[j])
            mask = (_ONE << np.uint64(bits)) - _ONE
            while True:
                while queued < bits:
                    if wi >= total:
                        return it, wi
                    acc = (acc << np.uint64(8)) | np.uint64(stream[wi])
                    wi += 1
                    queued += 8
                queued -= bits
                k = np.int64((acc >> np.uint64(queued)) & mask)
                acc &= (_ONE << np.uint64(queued)) - _ONE
                if k < j:
                    break
            t = out[row + k]
            out[row + k] = out[row + j - 1]
            out[row + j - 1] = t
    return count, wi


@njit(cache=True, nogil=True)
def accumulate_block(perms, count, n, pair_a, pair_b, cnt):
    """Ordered-outcome case counting: cnt[p*n*n + f(a)*n + f(b)] += 1 for
    every input pair p=(a,b); case-outer so each block stays cache-hot."""
    pcount = pair_a.shape[0]
    nn = np.int64(n)
    for p in range(pcount):
        a = pair_a[p]
        b = pair_b[p]
        base = p * nn * nn
        for i in range(count):
            row = i * nn
            fa = np.int64(perms[row + a])
            fb = np.int64(perms[row + b])
            cnt[base + fa * nn + fb] += np.uint32(1)


@njit(cache=True, nogil=True)
def rank_histogram(perms, count, n, factorials, hist):
    """Factoradic rank of each permutation, accumulated into hist[n!]."""
    nn = np.int64(n)
    for i in range(count):
        row = i * nn
        rank = np.int64(0)
        for a in range(nn - 1):
            va = perms[row + a]
            smaller_later = np.int64(0)
            for b in range(a + 1, nn):
                if perms[row + b] < va:
                    smaller_later += 1
            rank += smaller_later * factorials[nn - 1 - a]
        hist[rank] += np.uint32(1)
