"""Independent reference implementations used by the tests.

Everything here is built from dense Kronecker products, matrix exponentials
and textbook formulas. None of it calls the package's kernels, so agreement
with the package is a real cross-check.
"""

import math

import numpy as np
from scipy import linalg, stats

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


def on_qubit(op, q, n):
    mats = [I2] * n
    mats[q] = op
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


def collective_generator(phi, n, active=None):
    active = range(n) if active is None else active
    s = np.zeros((1 << n, 1 << n), dtype=complex)
    for q in active:
        s += on_qubit(math.cos(phi) * X + math.sin(phi) * Y, q, n)
    return s


def zrot(q, theta, n):
    return linalg.expm(-0.5j * theta * on_qubit(Z, q, n))


def collective(phi, theta, n, active=None):
    return linalg.expm(-0.5j * theta * collective_generator(phi, n, active))


def ms(phi, theta, n, active=None):
    s = collective_generator(phi, n, active)
    return linalg.expm(-0.25j * theta * s @ s)


def phase_equal(a, b, atol=1e-9):
    """True when a = e^{i c} b for some global phase c."""
    a, b = np.asarray(a), np.asarray(b)
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[k]) < 1e-12:
        return np.allclose(a, b, atol=atol)
    ph = a[k] / b[k]
    if abs(abs(ph) - 1) > 1e-6:
        return False
    return np.allclose(a, ph * b, atol=atol)


def unitary_overlap(u, v):
    """|Tr(U^dag V)| / d."""
    return abs(np.trace(np.asarray(u).conj().T @ np.asarray(v))) / u.shape[0]


def dft(n):
    d = 1 << n
    j = np.arange(d)
    return np.exp(2j * np.pi * np.outer(j, j) / d) / math.sqrt(d)


def textbook_phase_estimation(perm, y, t=3):
    """Outcome distribution of the (t + 2)-qubit phase-estimation circuit.

    Layout: t phase qubits (most significant first) followed by the 2-qubit
    register. The circuit is H^t, controlled U^(2^(t-1-k)) from phase qubit k,
    then the inverse DFT on the phase register; outcome m is read from the
    phase register.
    """
    u = np.zeros((4, 4))
    for a, b in enumerate(perm):
        u[b, a] = 1.0
    n = t + 2
    psi = np.zeros(1 << n, dtype=complex)
    psi[y] = 1.0
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    for k in range(t):
        psi = on_qubit(h, k, n) @ psi
    for k in range(t):
        uk = np.linalg.matrix_power(u, 2 ** (t - 1 - k))
        p1 = on_qubit(np.diag([0, 1]), k, n)
        p0 = np.eye(1 << n) - p1
        big = p0 + p1 @ np.kron(np.eye(1 << t), uk)
        psi = big @ psi
    iqft = np.kron(dft(t).conj().T, np.eye(4))
    psi = iqft @ psi
    probs = np.abs(psi.reshape(1 << t, 4)) ** 2
    return probs.sum(axis=1)


def simpson_exponent(T, alpha, gamma, a1, a2, sigma=10.0, nu1=300.0, nu2=100.0,
                     kernel="ramsey", w_max=None, points=400001):
    """Fixed-step composite Simpson integral of A(w)^2 K_T(w) on [0, w_max]."""
    if T == 0:
        return 0.0
    tp = 2 * math.pi
    w_max = w_max or max(20.0 / T, tp * 8e3)
    w = np.linspace(0.0, w_max, points)
    g, s = tp * gamma, tp * sigma
    a = alpha * (g * g / (g * g + w * w) + a1 * np.exp(-((w - tp * nu1) / s) ** 2)
                 + a2 * np.exp(-((w - tp * nu2) / s) ** 2))
    with np.errstate(invalid="ignore", divide="ignore"):
        if kernel == "ramsey":
            k = np.where(w > 0, np.sin(w * T / 2) ** 2 / w**2, T * T / 4)
        else:
            k = np.where(w > 0, 4 * np.sin(w * T / 4) ** 4 / w**2, 0.0)
    f = a * a * k
    h = w[1] - w[0]
    return h / 3 * (f[0] + f[-1] + 4 * f[1:-1:2].sum() + 2 * f[2:-1:2].sum())


def poisson_threshold_error(rate_b, rate_d, t):
    """Minimum over thresholds of 1/2 (P(dark > th) + P(bright <= th))."""
    ks = np.arange(int(rate_b * t * 3 + 50))
    errs = 0.5 * (stats.poisson.sf(ks, rate_d * t) + stats.poisson.cdf(ks, rate_b * t))
    i = int(np.argmin(errs))
    return i, float(errs[i])


def random_state(rng, n):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


def random_unitary(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def dense_sequence_unitary(seq):
    """Unitary of a coherent sequence (Hide/Unhide/Idle allowed) from expm'd generators."""
    from tiqc.gates import MS, Collective, Hide, Idle, Unhide, ZRot

    n = seq.n_qubits
    hidden = set()
    u = np.eye(1 << n, dtype=complex)
    for op in seq.ops:
        active = [q for q in range(n) if q not in hidden]
        if isinstance(op, Hide):
            hidden.add(op.ion)
            continue
        if isinstance(op, Unhide):
            hidden.discard(op.ion)
            continue
        if isinstance(op, Idle):
            continue
        if isinstance(op, ZRot):
            g = zrot(op.ion, op.theta, n)
        elif isinstance(op, Collective):
            g = collective(op.phi, op.theta, n, active)
        elif isinstance(op, MS):
            g = ms(op.phi, op.theta, n, active)
        else:
            raise TypeError(op)
        u = g @ u
    return u
