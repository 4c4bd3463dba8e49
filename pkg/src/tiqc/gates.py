"""Native operation set: addressed Z rotations, collective rotations, MS gates,
hiding, non-coherent channels, in-sequence measurement and feed-forward.

Ion indices are 0-based here; the text format in :mod:`tiqc.compiler` is
1-based. Coherent unitaries:

* ``ZRot(i, t)``        exp(-i t sigma_z / 2) on ion i
* ``Collective(p, t)``  exp(-i t S_p / 2), S_p = sum_j cos(p) X_j + sin(p) Y_j
* ``MS(p, t)``          exp(-i t S_p^2 / 4)

Collective sums run over non-hidden ions only; hidden ions see the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import kernels
from .core import DensityMatrix, PureState, bits_to_index

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


class SequenceError(ValueError):
    """Structurally invalid sequence (hide bookkeeping, measurement rules)."""


def _check_finite(name: str, x: float):
    if not math.isfinite(x):
        raise ValueError(f"{name} must be finite")


def _check_gamma(g: float):
    if not 0.0 <= g <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {g}")


@dataclass(frozen=True)
class NativeOp:
    """Base class of all native operations."""

    coherent = False
    note: str = field(default="", kw_only=True, compare=False)


@dataclass(frozen=True)
class ZRot(NativeOp):
    ion: int
    theta: float
    coherent = True

    def __post_init__(self):
        _check_finite("theta", self.theta)


@dataclass(frozen=True)
class Collective(NativeOp):
    phi: float
    theta: float
    coherent = True

    def __post_init__(self):
        _check_finite("theta", self.theta)
        _check_finite("phi", self.phi)


@dataclass(frozen=True)
class MS(NativeOp):
    phi: float
    theta: float
    coherent = True

    def __post_init__(self):
        _check_finite("theta", self.theta)
        _check_finite("phi", self.phi)


@dataclass(frozen=True)
class Hide(NativeOp):
    ion: int


@dataclass(frozen=True)
class Unhide(NativeOp):
    ion: int


@dataclass(frozen=True)
class PhaseDamp(NativeOp):
    ion: int
    gamma: float

    def __post_init__(self):
        _check_gamma(self.gamma)


@dataclass(frozen=True)
class AmpDamp(NativeOp):
    """Amplitude damping toward basis level ``target`` (0 = verbatim Kraus orientation)."""

    ion: int
    gamma: float
    target: int = 0

    def __post_init__(self):
        _check_gamma(self.gamma)
        if self.target not in (0, 1):
            raise ValueError("target must be 0 or 1")


@dataclass(frozen=True)
class Measure(NativeOp):
    ion: int
    cbit: int


@dataclass(frozen=True)
class ConditionalZRot(NativeOp):
    """ZRot applied when classical bit ``cbit`` is 1 (or 0 when ``negate``)."""

    ion: int
    theta: float
    cbit: int
    negate: bool = False

    def __post_init__(self):
        _check_finite("theta", self.theta)

    def fires(self, value: int) -> bool:
        return bool(value) != bool(self.negate)


@dataclass(frozen=True)
class Recool(NativeOp):
    duration: float = 800e-6


@dataclass(frozen=True)
class Idle(NativeOp):
    duration: float


# Short alias used throughout
R = Collective


@dataclass(frozen=True)
class PulseSequence:
    n_qubits: int
    ops: tuple = ()
    name: str = ""
    source: str = ""

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        for op in self.ops:
            if not isinstance(op, NativeOp):
                raise TypeError(f"not a NativeOp: {op!r}")
            ion = getattr(op, "ion", None)
            if ion is not None and not 0 <= ion < self.n_qubits:
                raise ValueError(f"ion index {ion} out of range for {self.n_qubits} qubits")

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self) -> Iterator[NativeOp]:
        return iter(self.ops)

    def with_ops(self, ops: Iterable[NativeOp]) -> "PulseSequence":
        return replace(self, ops=tuple(ops))

    @property
    def coherent_only(self) -> bool:
        return all(op.coherent for op in self.ops)

    def n_cbits(self) -> int:
        idx = [op.cbit for op in self.ops if isinstance(op, (Measure, ConditionalZRot))]
        return max(idx) + 1 if idx else 0

    def hidden_sets(self, strict_measure: bool = True) -> list[frozenset]:
        """Hidden set in effect at every op; validates the sequence."""
        hidden: set[int] = set()
        written: set[int] = set()
        out = []
        for k, op in enumerate(self.ops):
            out.append(frozenset(hidden))
            where = f"op {k} ({type(op).__name__})"
            if isinstance(op, Hide):
                if op.ion in hidden:
                    raise SequenceError(f"{where}: ion {op.ion + 1} already hidden")
                hidden.add(op.ion)
            elif isinstance(op, Unhide):
                if op.ion not in hidden:
                    raise SequenceError(f"{where}: ion {op.ion + 1} is not hidden")
                hidden.discard(op.ion)
            elif isinstance(op, Measure):
                if op.ion in hidden:
                    raise SequenceError(f"{where}: measuring hidden ion {op.ion + 1}")
                spect = set(range(self.n_qubits)) - hidden - {op.ion}
                if strict_measure and spect:
                    raise SequenceError(
                        f"{where}: spectator ions {sorted(i + 1 for i in spect)} not hidden"
                    )
                written.add(op.cbit)
            elif isinstance(op, (ZRot, ConditionalZRot)):
                if op.ion in hidden:
                    raise SequenceError(f"{where}: Z rotation on hidden ion {op.ion + 1}")
                if isinstance(op, ConditionalZRot) and op.cbit not in written:
                    raise SequenceError(f"{where}: classical bit {op.cbit} read before written")
            elif isinstance(op, (PhaseDamp, AmpDamp)) and op.ion in hidden:
                raise SequenceError(f"{where}: channel on hidden ion {op.ion + 1}")
        return out

    def validate(self, strict_measure: bool = True) -> "PulseSequence":
        self.hidden_sets(strict_measure)
        return self


@dataclass(frozen=True)
class CrosstalkMatrix:
    """Addressing matrix; row i gives the relative Z-rotation strength on
    every ion j when ion i is addressed."""

    epsilon: np.ndarray

    def __post_init__(self):
        e = np.array(self.epsilon, dtype=float, copy=True)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError("crosstalk matrix must be square")
        if not np.allclose(np.diag(e), 1.0):
            raise ValueError("crosstalk diagonal must be 1")
        off = e[~np.eye(e.shape[0], dtype=bool)]
        if np.any(off < 0) or np.any(off > 1):
            raise ValueError("off-diagonal crosstalk must lie in [0, 1]")
        e.flags.writeable = False
        object.__setattr__(self, "epsilon", e)

    @property
    def n(self) -> int:
        return self.epsilon.shape[0]

    @classmethod
    def identity(cls, n: int) -> "CrosstalkMatrix":
        return cls(np.eye(n))

    @classmethod
    def neighbor(cls, n: int, eps: float) -> "CrosstalkMatrix":
        e = np.eye(n)
        for i in range(n - 1):
            e[i, i + 1] = e[i + 1, i] = eps
        return cls(e)


# ---------------------------------------------------------------- kernels

def rot_1q(phi: float, theta: float) -> np.ndarray:
    """exp(-i theta (cos(phi) X + sin(phi) Y) / 2)."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [[c, -1j * s * np.exp(-1j * phi)], [-1j * s * np.exp(1j * phi), c]], dtype=complex
    )


def active_qubits(n: int, hidden: Iterable[int] = ()) -> list[int]:
    h = set(hidden)
    return [q for q in range(n) if q not in h]


def qubit_mask(qubits: Sequence[int], n: int) -> int:
    m = 0
    for q in qubits:
        m |= 1 << (n - 1 - q)
    return m


def zrot_angles(op: ZRot, n: int, hidden=(), crosstalk: CrosstalkMatrix | None = None) -> np.ndarray:
    """Per-qubit Z angles realised by an addressed rotation."""
    angles = np.zeros(n)
    if crosstalk is None:
        angles[op.ion] = op.theta
    else:
        if crosstalk.n != n:
            raise ValueError("crosstalk matrix size does not match register")
        for j in active_qubits(n, hidden):
            angles[j] = op.theta * crosstalk.epsilon[op.ion, j]
    return angles


def ms_phase_table(theta: float, n_active: int) -> np.ndarray:
    m = n_active - 2 * np.arange(n_active + 1)
    return np.exp(-1j * theta * m.astype(float) ** 2 / 4)


def apply_coherent_inplace(psi: np.ndarray, op: NativeOp, n: int, hidden=(), crosstalk=None):
    """Apply a coherent op to a contiguous complex state vector in place."""
    if isinstance(op, ZRot):
        if op.ion in hidden:
            raise SequenceError(f"Z rotation on hidden ion {op.ion + 1}")
        kernels.apply_z_phases(psi, zrot_angles(op, n, hidden, crosstalk), n)
    elif isinstance(op, Collective):
        u = rot_1q(op.phi, op.theta)
        for q in active_qubits(n, hidden):
            kernels.apply_1q(psi, u, q, n)
    elif isinstance(op, MS):
        act = active_qubits(n, hidden)
        if not act:
            return
        zphi = np.zeros(n)
        zphi[act] = op.phi
        kernels.apply_z_phases(psi, -zphi, n)
        for q in act:
            kernels.apply_1q(psi, HADAMARD, q, n)
        kernels.apply_popcount_phase(psi, ms_phase_table(op.theta, len(act)), qubit_mask(act, n))
        for q in act:
            kernels.apply_1q(psi, HADAMARD, q, n)
        kernels.apply_z_phases(psi, zphi, n)
    else:
        raise TypeError(f"{type(op).__name__} is not a coherent operation")


def op_unitary(op: NativeOp, n: int, hidden=(), crosstalk: CrosstalkMatrix | None = None) -> np.ndarray:
    """Dense 2^n x 2^n unitary of a coherent op."""
    if not op.coherent:
        raise TypeError(f"{type(op).__name__} is not a coherent operation")
    hidden = frozenset(hidden)
    if isinstance(op, ZRot):
        if op.ion in hidden:
            raise SequenceError(f"Z rotation on hidden ion {op.ion + 1}")
        z = 1.0 - 2.0 * ((np.arange(1 << n)[:, None] >> (n - 1 - np.arange(n))) & 1)
        return np.diag(np.exp(-0.5j * (z @ zrot_angles(op, n, hidden, crosstalk))))
    dim = 1 << n
    u = np.zeros((dim, dim), dtype=complex)
    col = np.empty(dim, dtype=complex)
    for k in range(dim):
        col[:] = 0
        col[k] = 1
        apply_coherent_inplace(col, op, n, hidden, crosstalk)
        u[:, k] = col
    return u


def apply_op(state, op: NativeOp, hidden=(), crosstalk: CrosstalkMatrix | None = None):
    """Apply a coherent op to a PureState or DensityMatrix."""
    if isinstance(state, PureState):
        psi = np.array(state.amplitudes, dtype=complex)
        apply_coherent_inplace(psi, op, state.n_qubits, frozenset(hidden), crosstalk)
        return PureState(state.n_qubits, psi)
    if isinstance(state, DensityMatrix):
        u = op_unitary(op, state.n_qubits, hidden, crosstalk)
        m = u @ state.matrix @ u.conj().T
        return DensityMatrix(state.n_qubits, 0.5 * (m + m.conj().T))
    raise TypeError("state must be a PureState or DensityMatrix")


# -------------------------------------------------------------- rewrites

def rewrite_negative_ms(seq: PulseSequence) -> PulseSequence:
    """Replace MS(p, -t) by MS(p, pi - t), plus R_p(pi) on an even active register.

    The new angle is taken modulo 2 pi (MS(t + 2 pi) equals MS(t) up to a global
    phase), so it is non-negative for any t.
    """
    hidden_at = seq.hidden_sets(strict_measure=False)
    out = []
    for op, hidden in zip(seq.ops, hidden_at):
        if isinstance(op, MS) and op.theta < 0:
            out.append(MS(op.phi, (math.pi - abs(op.theta)) % (2 * math.pi), note=op.note))
            if (seq.n_qubits - len(hidden)) % 2 == 0:
                out.append(Collective(op.phi, math.pi))
        else:
            out.append(op)
    return seq.with_ops(out)


def ac_stark_shift(rabi_freq: float, detuning: float) -> float:
    """Light shift -Omega^2 / (2 Delta) in rad/s."""
    if detuning == 0:
        raise ValueError("detuning must be non-zero")
    return -(rabi_freq**2) / (2.0 * detuning)


SINGLE_OP_FIDELITY = 0.995
MS_FIDELITY = {2: 0.98, 3: 0.97, 4: 0.95, 5: 0.93, 6: 0.90}


def crude_fidelity_estimate(seq: PulseSequence, n: int | None = None) -> float:
    """Product of per-op fidelities.

    Coherent single-body ops count 0.995; each MS counts according to the
    number of ions it acts on (register size minus hidden ions). Channels,
    measurement, hiding and waits count as 1.
    """
    n = seq.n_qubits if n is None else n
    f = 1.0
    hidden_at = seq.hidden_sets(strict_measure=False) if seq.ops else []
    for op, hidden in zip(seq.ops, hidden_at):
        if isinstance(op, MS):
            k = n - len(hidden)
            if k not in MS_FIDELITY:
                raise ValueError(f"no MS fidelity figure for {k} ions")
            f *= MS_FIDELITY[k]
        elif isinstance(op, (ZRot, Collective, ConditionalZRot)):
            f *= SINGLE_OP_FIDELITY
    return f


def ghz_reference(n: int, phi: float = 0.0) -> PureState:
    """(|0...0> - i exp(i n phi) |1...1>) / sqrt(2)."""
    v = np.zeros(1 << n, dtype=complex)
    v[0] = 1 / math.sqrt(2)
    v[bits_to_index([1] * n)] = -1j * np.exp(1j * n * phi) / math.sqrt(2)
    return PureState(n, v)
