"""Numpy fallback for the compiled kernels; same signatures, in-place."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def _zsigns(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    return 1.0 - 2.0 * bits


@lru_cache(maxsize=32)
def _popcounts(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return np.array([bin(k).count("1") for k in idx], dtype=np.int64)


def apply_1q(psi, u, qubit, n):
    v = psi.reshape(1 << qubit, 2, -1)
    psi[:] = np.einsum("ab,ibj->iaj", u, v).reshape(-1)


def apply_z_phases(psi, angles, n):
    psi *= np.exp(-0.5j * (_zsigns(n) @ np.asarray(angles, dtype=float)))


def apply_popcount_phase(psi, table, mask):
    n = psi.shape[0].bit_length() - 1
    psi *= np.asarray(table)[_popcounts(n)[np.arange(psi.shape[0]) & mask]]


def excited_population(psi, qubit, n):
    v = psi.reshape(1 << qubit, 2, -1)
    return float(np.sum(np.abs(v[:, 0, :]) ** 2))
