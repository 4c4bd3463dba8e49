"""Dense state and operator algebra for small qubit registers.

Basis packing (used everywhere in the package): for an ``n`` qubit register
the basis index is ``sum(b[i] * 2**(n-1-i))``, so qubit 0 (ion 1) is the
leftmost, most significant bit of a printed ket. Bit value 0 is the metastable
level D and bit value 1 the ground level S. Registers start in ``|0...0>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 12
ATOL = 1e-9


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.flags.writeable = False
    return a


def _n_from_dim(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or (1 << n) != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def bits_to_index(bits: Sequence[int]) -> int:
    idx = 0
    for b in bits:
        idx = (idx << 1) | (int(b) & 1)
    return idx


def index_to_bits(index: int, n: int) -> tuple[int, ...]:
    return tuple((index >> (n - 1 - q)) & 1 for q in range(n))


def check_unitary(u: np.ndarray, atol: float = ATOL) -> np.ndarray:
    """Validate and return ``u`` as a complex unitary matrix."""
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError("unitary must be a square matrix")
    _n_from_dim(u.shape[0])
    if not np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=atol):
        raise ValueError("matrix is not unitary")
    return u


@dataclass(frozen=True)
class PureState:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = _freeze(np.ravel(self.amplitudes))
        if self.n_qubits < 0 or self.n_qubits > MAX_QUBITS:
            raise ValueError(f"n_qubits must be in [0, {MAX_QUBITS}]")
        if amp.shape[0] != 1 << self.n_qubits:
            raise ValueError("amplitude vector length must be 2**n_qubits")
        norm = float(np.vdot(amp, amp).real)
        if abs(norm - 1.0) > ATOL:
            raise ValueError(f"state is not normalized (norm^2={norm})")
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def from_vector(cls, vec, normalize: bool = False) -> "PureState":
        vec = np.asarray(vec, dtype=complex).ravel()
        if normalize:
            vec = vec / np.linalg.norm(vec)
        return cls(_n_from_dim(vec.shape[0]), vec)

    @classmethod
    def basis(cls, bits: str | Sequence[int]) -> "PureState":
        """Computational basis state, e.g. ``PureState.basis("010")``."""
        bits = [int(c) for c in bits]
        vec = np.zeros(1 << len(bits), dtype=complex)
        vec[bits_to_index(bits)] = 1.0
        return cls(len(bits), vec)

    @classmethod
    def zero(cls, n: int) -> "PureState":
        return cls.basis([0] * n)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(self.n_qubits, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        m = _freeze(self.matrix)
        dim = 1 << self.n_qubits
        if self.n_qubits > MAX_QUBITS:
            raise ValueError(f"at most {MAX_QUBITS} qubits supported")
        if m.shape != (dim, dim):
            raise ValueError("density matrix must be 2**n x 2**n")
        if not np.allclose(m, m.conj().T, atol=ATOL):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > ATOL:
            raise ValueError("density matrix trace differs from 1")
        if np.linalg.eigvalsh(m).min() < -ATOL:
            raise ValueError("density matrix has negative eigenvalues")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_matrix(cls, m) -> "DensityMatrix":
        m = np.asarray(m, dtype=complex)
        return cls(_n_from_dim(m.shape[0]), m)

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityMatrix":
        return cls(n, np.eye(1 << n) / (1 << n))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


@dataclass(frozen=True)
class ProbDist:
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float, copy=True).ravel()
        if np.any(p < -ATOL) or abs(p.sum() - 1.0) > ATOL:
            raise ValueError("probabilities must be non-negative and sum to 1")
        p = np.clip(p, 0.0, None)
        p.flags.writeable = False
        object.__setattr__(self, "probabilities", p)

    def __len__(self) -> int:
        return self.probabilities.shape[0]

    @classmethod
    def from_counts(cls, counts) -> "ProbDist":
        c = np.asarray(counts, dtype=float)
        if c.sum() <= 0:
            raise ValueError("counts are empty")
        return cls(c / c.sum())


def _raw(x):
    if isinstance(x, PureState):
        return x.amplitudes
    if isinstance(x, DensityMatrix):
        return x.matrix
    return np.asarray(x, dtype=complex)


def tensor(a, b):
    """Kronecker product of two states or operators.

    PureState with PureState gives a PureState, DensityMatrix with DensityMatrix
    a DensityMatrix; raw arrays give arrays.
    """
    ra, rb = _raw(a), _raw(b)
    for r in (ra, rb):
        for s in r.shape:
            _n_from_dim(s)
    out_dim = ra.shape[0] * rb.shape[0]
    if out_dim > 1 << MAX_QUBITS:
        raise ValueError(f"tensor product exceeds {MAX_QUBITS} qubits")
    out = np.kron(ra, rb)
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(a.n_qubits + b.n_qubits, out)
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(a.n_qubits + b.n_qubits, out)
    return out


def tensor_all(items: Iterable):
    items = list(items)
    out = items[0]
    for it in items[1:]:
        out = tensor(out, it)
    return out


def apply_unitary(state, u):
    u = np.asarray(u, dtype=complex)
    if isinstance(state, PureState):
        if u.shape != (state.amplitudes.shape[0],) * 2:
            raise ValueError("unitary dimension does not match state")
        return PureState(state.n_qubits, u @ state.amplitudes)
    if isinstance(state, DensityMatrix):
        if u.shape != state.matrix.shape:
            raise ValueError("unitary dimension does not match state")
        m = u @ state.matrix @ u.conj().T
        return DensityMatrix(state.n_qubits, 0.5 * (m + m.conj().T))
    raise TypeError("state must be a PureState or DensityMatrix")


def measure_probabilities(state) -> ProbDist:
    if isinstance(state, PureState):
        p = np.abs(state.amplitudes) ** 2
    elif isinstance(state, DensityMatrix):
        p = np.real(np.diag(state.matrix))
    else:
        raise TypeError("state must be a PureState or DensityMatrix")
    p = np.clip(p, 0.0, None)
    return ProbDist(p / p.sum())


def sample_outcomes(dist: ProbDist, shots: int, seed) -> np.ndarray:
    """Multinomial counts over the outcomes of ``dist``."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = dist.probabilities if isinstance(dist, ProbDist) else ProbDist(dist).probabilities
    rng = np.random.default_rng(seed)
    return rng.multinomial(int(shots), p / p.sum())


def _as_density(x) -> np.ndarray:
    if isinstance(x, PureState):
        return np.outer(x.amplitudes, x.amplitudes.conj())
    if isinstance(x, DensityMatrix):
        return x.matrix
    raise TypeError("fidelity arguments must be PureState or DensityMatrix")


def _pure_vector(x) -> np.ndarray | None:
    if isinstance(x, PureState):
        return x.amplitudes
    m = x.matrix
    w, v = np.linalg.eigh(m)
    if w[-1] > 1.0 - 1e-12:
        return v[:, -1]
    return None


def state_fidelity(a, b) -> float:
    """Squared Uhlmann fidelity; reduces to <psi|rho|psi> when one side is pure."""
    ma, mb = _as_density(a), _as_density(b)
    if ma.shape != mb.shape:
        raise ValueError("states have different dimensions")
    for pure, other in ((a, mb), (b, ma)):
        psi = _pure_vector(pure)
        if psi is not None:
            return float(np.clip(np.real(np.vdot(psi, other @ psi)), 0.0, 1.0))
    w, v = np.linalg.eigh(ma)
    sq = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    inner = np.linalg.eigvalsh(sq @ mb @ sq)
    return float(np.clip(np.sum(np.sqrt(np.clip(inner, 0, None))) ** 2, 0.0, 1.0))


def _kraus_list(m) -> list[np.ndarray]:
    if hasattr(m, "kraus_ops"):
        ops = [np.asarray(k, dtype=complex) for k in m.kraus_ops]
    elif isinstance(m, np.ndarray) and m.ndim == 2:
        ops = [np.asarray(m, dtype=complex)]
    else:
        ops = [np.asarray(k, dtype=complex) for k in m]
    d = ops[0].shape[0]
    comp = sum(k.conj().T @ k for k in ops)
    if not np.allclose(comp, np.eye(d), atol=1e-6):
        raise ValueError("map is not trace preserving (Kraus completeness violated)")
    return ops


def choi_state(m) -> np.ndarray:
    """Normalized Choi state (1/d) sum_k vec(E_k) vec(E_k)^dag, row-major vec."""
    ops = _kraus_list(m)
    d = ops[0].shape[0]
    out = np.zeros((d * d, d * d), dtype=complex)
    for k in ops:
        v = k.reshape(-1)
        out += np.outer(v, v.conj())
    return out / d


def process_fidelity(map_a, map_b) -> float:
    """Fidelity of the normalized Choi states of two channels or unitaries.

    Arguments may be a unitary matrix, a sequence of Kraus matrices, or any
    object with a ``kraus_ops`` attribute. For two unitaries this equals
    |Tr(U^dag V)|^2 / d^2.
    """
    ca, cb = choi_state(map_a), choi_state(map_b)
    if ca.shape != cb.shape:
        raise ValueError("maps act on different dimensions")
    return state_fidelity(DensityMatrix.from_matrix(ca), DensityMatrix.from_matrix(cb))


def partial_trace(rho, keep: Iterable[int]):
    """Reduced density matrix on the qubits in ``keep`` (0-based, order kept sorted)."""
    keep = sorted(set(int(k) for k in keep))
    m = _as_density(rho) if not isinstance(rho, np.ndarray) else rho
    n = _n_from_dim(m.shape[0])
    if not keep:
        raise ValueError("keep must be a non-empty qubit set")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError("qubit index out of range")
    drop = [q for q in range(n) if q not in keep]
    t = m.reshape([2] * (2 * n))
    for i, q in enumerate(sorted(drop, reverse=True)):
        cur = n - i
        t = np.trace(t, axis1=q, axis2=q + cur)
    k = len(keep)
    red = t.reshape(1 << k, 1 << k)
    return DensityMatrix(k, red)
