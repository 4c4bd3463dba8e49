# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled state-vector kernels. All functions mutate ``psi`` in place."""

from libc.math cimport cos, sin


cdef extern from *:
    int _popcount "__builtin_popcountl"(unsigned long x) nogil


def apply_1q(double complex[::1] psi, double complex[:, ::1] u, int qubit, int n):
    cdef Py_ssize_t dim = psi.shape[0]
    cdef Py_ssize_t stride = (<Py_ssize_t>1) << (n - 1 - qubit)
    cdef Py_ssize_t i, j
    cdef double complex a, b
    cdef double complex u00 = u[0, 0], u01 = u[0, 1], u10 = u[1, 0], u11 = u[1, 1]
    with nogil:
        i = 0
        while i < dim:
            for j in range(i, i + stride):
                a = psi[j]
                b = psi[j + stride]
                psi[j] = u00 * a + u01 * b
                psi[j + stride] = u10 * a + u11 * b
            i += 2 * stride


def apply_z_phases(double complex[::1] psi, double[::1] angles, int n):
    """Multiply by exp(-i/2 sum_q angles[q] z_q), z_q = +1 on bit 0, -1 on bit 1."""
    cdef Py_ssize_t dim = psi.shape[0]
    cdef Py_ssize_t stride, i, j
    cdef int q
    cdef double complex p0, p1
    with nogil:
        for q in range(n):
            if angles[q] == 0.0:
                continue
            p0.real = cos(0.5 * angles[q])
            p0.imag = -sin(0.5 * angles[q])
            p1.real = p0.real
            p1.imag = -p0.imag
            stride = (<Py_ssize_t>1) << (n - 1 - q)
            i = 0
            while i < dim:
                for j in range(i, i + stride):
                    psi[j] = psi[j] * p0
                    psi[j + stride] = psi[j + stride] * p1
                i += 2 * stride


def apply_popcount_phase(double complex[::1] psi, double complex[::1] table, long mask):
    """Multiply amplitude k by table[popcount(k & mask)]."""
    cdef Py_ssize_t dim = psi.shape[0]
    cdef Py_ssize_t k
    with nogil:
        for k in range(dim):
            psi[k] = psi[k] * table[_popcount(<unsigned long>(k & mask))]


def excited_population(double complex[::1] psi, int qubit, int n):
    """Probability of bit value 0 on ``qubit``."""
    cdef Py_ssize_t dim = psi.shape[0]
    cdef Py_ssize_t stride = (<Py_ssize_t>1) << (n - 1 - qubit)
    cdef Py_ssize_t i, j
    cdef double acc = 0.0
    with nogil:
        i = 0
        while i < dim:
            for j in range(i, i + stride):
                acc += psi[j].real * psi[j].real + psi[j].imag * psi[j].imag
            i += 2 * stride
    return acc
