"""Ideal target operators: QFT, permutations and their controlled versions."""

from __future__ import annotations

import numpy as np

from .core import bits_to_index, index_to_bits

# Permutations of the two-qubit register value y in {0, 1, 2, 3}.
PERMUTATIONS = {
    "pi1": (0, 3, 2, 1),
    "pi2": (1, 0, 3, 2),
    "pi3": (0, 3, 1, 2),
    "pi4": (3, 0, 1, 2),
}

# Register layout used by the controlled permutations (0-based ions):
# control = ion 1, high bit of y = ion 3, low bit of y = ion 2.
CTRL, HI, LO = 0, 2, 1


def qft_unitary(n: int) -> np.ndarray:
    """F[j, k] = omega^(j k) / sqrt(2^n), omega = exp(2 pi i / 2^n)."""
    dim = 1 << n
    j = np.arange(dim)
    return np.exp(2j * np.pi * np.outer(j, j) / dim) / np.sqrt(dim)


def permutation_power(mapping, power: int) -> tuple:
    out = list(range(len(mapping)))
    for _ in range(power):
        out = [mapping[v] for v in out]
    return tuple(out)


def permutation_order(mapping, y: int | None = None) -> int:
    """Order of the permutation (on input ``y`` if given)."""
    k = 1
    while True:
        p = permutation_power(mapping, k)
        if (p[y] == y) if y is not None else p == tuple(range(len(mapping))):
            return k
        k += 1


def register_permutation_unitary(mapping) -> np.ndarray:
    """4x4 unitary |y> -> |pi(y)> in the value basis."""
    u = np.zeros((4, 4))
    for y, py in enumerate(mapping):
        u[py, y] = 1.0
    return u


def controlled_permutation(mapping, power: int = 1, n: int = 3,
                           ctrl: int = CTRL, hi: int = HI, lo: int = LO) -> np.ndarray:
    """|c, y> -> |c, pi^c(y)> on an ``n`` ion register (other ions untouched)."""
    p = permutation_power(mapping, power)
    dim = 1 << n
    u = np.zeros((dim, dim))
    for src in range(dim):
        bits = list(index_to_bits(src, n))
        if bits[ctrl]:
            y = 2 * bits[hi] + bits[lo]
            py = p[y]
            bits[hi], bits[lo] = py >> 1, py & 1
        u[bits_to_index(bits), src] = 1.0
    return u
