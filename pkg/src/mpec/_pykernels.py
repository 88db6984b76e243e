"""Pure-Python/numpy versions of the hot kernels (fallback for ``_kernels``)."""

from __future__ import annotations

from itertools import combinations

import numpy as np


def cnot_layer(x: np.ndarray, z: np.ndarray, ctrl: np.ndarray, tgt: np.ndarray) -> None:
    """Bit-sliced CNOTs on disjoint qubit pairs, in place."""
    x[tgt] ^= x[ctrl]
    z[ctrl] ^= z[tgt]


def xor_scatter(plane: np.ndarray, rows: np.ndarray, words: np.ndarray, bits: np.ndarray) -> None:
    """``plane[rows[i], words[i]] ^= bits[i]`` with repeated indices accumulated."""
    np.bitwise_xor.at(plane, (rows, words), bits)


def match_batch(syndromes, offsets, incidence, masks, max_size: int = 3):
    """Flag-match search for many trials.

    Trial ``j`` owns flags ``offsets[j]:offsets[j+1]`` (sorted by id), each
    with a packed incidence and a 9-bit data-position mask.  Returns the
    correction mask per trial and the size of the chosen match (0 when the
    search fell back to the bare syndrome).
    """
    n = len(syndromes)
    corr = np.zeros(n, dtype=np.int64)
    size = np.zeros(n, dtype=np.int64)
    for j in range(n):
        s = int(syndromes[j])
        lo, hi = int(offsets[j]), int(offsets[j + 1])
        inc = [int(v) for v in incidence[lo:hi]]
        msk = [int(v) for v in masks[lo:hi]]
        idx = [i for i in range(len(inc)) if inc[i]]
        for k in range(1, max_size + 1):
            best = -1
            best_mask = 0
            for combo in combinations(idx, k):
                acc = 0
                m = 0
                for i in combo:
                    acc ^= inc[i]
                    m ^= msk[i]
                if acc != s:
                    continue
                n_corr = bin(m).count("1")
                if best < 0 or n_corr < best:
                    best, best_mask = n_corr, m
            if best >= 0:
                corr[j] = best_mask
                size[j] = k
                break
    return corr, size
