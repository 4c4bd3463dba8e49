"""Kraus channels, in-register measurement, reset, and an exact
density-matrix executor for full native sequences (branching on measurements).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ATOL, DensityMatrix, ProbDist, PureState
from .gates import (
    AmpDamp,
    ConditionalZRot,
    Hide,
    Idle,
    Measure,
    PhaseDamp,
    PulseSequence,
    Recool,
    SequenceError,
    Unhide,
    ZRot,
    op_unitary,
)


@dataclass(frozen=True)
class KrausChannel:
    kraus_ops: tuple
    target: int | None = None

    def __post_init__(self):
        ops = tuple(np.array(k, dtype=complex) for k in self.kraus_ops)
        if not ops:
            raise ValueError("channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        comp = sum(k.conj().T @ k for k in ops)
        if not np.allclose(comp, np.eye(d), atol=ATOL):
            raise ValueError("Kraus operators are not complete")
        for k in ops:
            k.flags.writeable = False
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].shape[0]

    def compose(self, other: "KrausChannel") -> "KrausChannel":
        """Channel applying ``self`` first, then ``other``."""
        return KrausChannel(tuple(b @ a for a in self.kraus_ops for b in other.kraus_ops), self.target)


def _gamma_ok(gamma: float):
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")


def phase_damp_channel(gamma: float) -> KrausChannel:
    _gamma_ok(gamma)
    e0 = np.diag([1.0, math.sqrt(1 - gamma)])
    e1 = np.diag([0.0, math.sqrt(gamma)])
    return KrausChannel((e0, e1))


def amp_damp_channel(gamma: float, target: int = 0) -> KrausChannel:
    """Amplitude damping into basis level ``target``.

    ``target=0`` is the verbatim operator pair E0 = diag(1, sqrt(1-g)),
    E1 = [[0, sqrt(g)], [0, 0]]; ``target=1`` is the mirrored pair that pumps
    into |1> = S, i.e. physical reinitialization.
    """
    _gamma_ok(gamma)
    s, c = math.sqrt(gamma), math.sqrt(1 - gamma)
    if target == 0:
        e0 = np.diag([1.0, c])
        e1 = np.array([[0.0, s], [0.0, 0.0]])
    elif target == 1:
        e0 = np.diag([c, 1.0])
        e1 = np.array([[0.0, 0.0], [s, 0.0]])
    else:
        raise ValueError("target must be 0 or 1")
    return KrausChannel((e0, e1))


def embed(op: np.ndarray, ion: int, n: int) -> np.ndarray:
    """Single-qubit operator acting on ``ion`` of an ``n`` qubit register."""
    if not 0 <= ion < n:
        raise ValueError(f"ion {ion} out of range")
    return np.kron(np.kron(np.eye(1 << ion), op), np.eye(1 << (n - ion - 1)))


def _apply_kraus_raw(m: np.ndarray, ops, ion: int, n: int) -> np.ndarray:
    out = np.zeros_like(m)
    for k in ops:
        big = embed(k, ion, n)
        out += big @ m @ big.conj().T
    return out


def apply_channel(rho, ch: KrausChannel, ion: int) -> DensityMatrix:
    """E(rho) = sum_k E_k rho E_k^dag with E_k acting on ``ion``."""
    if isinstance(rho, PureState):
        rho = rho.density()
    if ch.dim != 2:
        raise ValueError("only single-qubit channels can be embedded")
    m = _apply_kraus_raw(rho.matrix, ch.kraus_ops, ion, rho.n_qubits)
    return DensityMatrix(rho.n_qubits, 0.5 * (m + m.conj().T))


def _projector(bit: int, ion: int, n: int) -> np.ndarray:
    p = np.zeros((2, 2))
    p[bit, bit] = 1.0
    return embed(p, ion, n)


def project_measure(state, ion: int, seed=None, branch: bool = False, hidden=()):
    """Projective measurement of one ion in the computational basis.

    Sampling mode returns ``(bit, post_state, probability)`` drawn with ``seed``
    (an int, SeedSequence or Generator). Branch mode returns the list of all
    outcomes with non-zero probability in that same tuple form.
    """
    if ion in set(hidden):
        raise SequenceError(f"cannot measure hidden ion {ion + 1}")
    n = state.n_qubits
    results = []
    for bit in (0, 1):
        proj = _projector(bit, ion, n)
        if isinstance(state, PureState):
            v = proj @ state.amplitudes
            p = float(np.vdot(v, v).real)
            post = PureState(n, v / math.sqrt(p)) if p > 1e-15 else None
        elif isinstance(state, DensityMatrix):
            m = proj @ state.matrix @ proj
            p = float(np.trace(m).real)
            post = DensityMatrix(n, m / p) if p > 1e-15 else None
        else:
            raise TypeError("state must be a PureState or DensityMatrix")
        results.append((bit, post, p))
    if branch:
        return [r for r in results if r[2] > 1e-15]
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    bit = int(rng.random() >= results[0][2])
    return results[bit]


def reset_ion(state, ion: int, target: int = 1) -> DensityMatrix:
    """Deterministic reinitialization of one ion (amplitude damping, gamma=1)."""
    return apply_channel(state, amp_damp_channel(1.0, target), ion)


# ---------------------------------------------------------------- executor

@dataclass
class Branch:
    weight: float
    matrix: np.ndarray  # normalized density matrix
    cbits: dict = field(default_factory=dict)

    def bits(self, n_cbits: int) -> tuple:
        return tuple(int(self.cbits.get(i, 0)) for i in range(n_cbits))


@dataclass(frozen=True)
class ExactResult:
    density: DensityMatrix
    branches: tuple
    n_cbits: int

    def cbit_distribution(self) -> dict:
        """Probability of every classical record."""
        out: dict = {}
        for b in self.branches:
            key = b.bits(self.n_cbits)
            out[key] = out.get(key, 0.0) + b.weight
        return out

    def cbit_probdist(self, order=None) -> ProbDist:
        """Distribution over integers formed from the classical bits.

        ``order`` lists cbit indices from most to least significant
        (default: cbit 0 most significant).
        """
        order = list(range(self.n_cbits)) if order is None else list(order)
        p = np.zeros(1 << len(order))
        for bits, w in self.cbit_distribution().items():
            idx = 0
            for c in order:
                idx = (idx << 1) | bits[c]
            p[idx] += w
        return ProbDist(p / p.sum())


def execute_density(seq: PulseSequence, initial=None, strict_measure: bool = True,
                    merge_tol: float = 1e-14) -> ExactResult:
    """Exact noiseless execution of any native sequence on density matrices.

    Measurements split the ensemble into classical branches so feed-forward
    is evaluated exactly; the returned density is the branch average.
    """
    n = seq.n_qubits
    hidden_at = seq.hidden_sets(strict_measure)
    if initial is None:
        initial = PureState.zero(n)
    m0 = initial.density().matrix if isinstance(initial, PureState) else initial.matrix
    branches = [Branch(1.0, np.array(m0, dtype=complex), {})]
    cache: dict = {}
    for op, hidden in zip(seq.ops, hidden_at):
        if op.coherent:
            key = (op, hidden)
            if key not in cache:
                cache[key] = op_unitary(op, n, hidden)
            u = cache[key]
            for b in branches:
                b.matrix = u @ b.matrix @ u.conj().T
        elif isinstance(op, (Hide, Unhide, Recool, Idle)):
            continue
        elif isinstance(op, PhaseDamp):
            ch = phase_damp_channel(op.gamma)
            for b in branches:
                b.matrix = _apply_kraus_raw(b.matrix, ch.kraus_ops, op.ion, n)
        elif isinstance(op, AmpDamp):
            ch = amp_damp_channel(op.gamma, op.target)
            for b in branches:
                b.matrix = _apply_kraus_raw(b.matrix, ch.kraus_ops, op.ion, n)
        elif isinstance(op, Measure):
            full = phase_damp_channel(1.0).kraus_ops
            spect = [q for q in range(n) if q not in hidden and q != op.ion]
            new = []
            for b in branches:
                m = b.matrix
                for q in spect:
                    m = _apply_kraus_raw(m, full, q, n)
                for bit in (0, 1):
                    proj = _projector(bit, op.ion, n)
                    mb = proj @ m @ proj
                    p = float(np.trace(mb).real)
                    if p * b.weight > merge_tol:
                        new.append(Branch(b.weight * p, mb / p, {**b.cbits, op.cbit: bit}))
            branches = new
        elif isinstance(op, ConditionalZRot):
            u = op_unitary(ZRot(op.ion, op.theta), n, hidden)
            for b in branches:
                if op.fires(b.cbits.get(op.cbit, 0)):
                    b.matrix = u @ b.matrix @ u.conj().T
        else:  # pragma: no cover - exhaustive over NativeOp variants
            raise TypeError(f"unsupported op {op!r}")
    total = sum(b.weight for b in branches)
    rho = sum(b.weight * b.matrix for b in branches) / total
    rho = 0.5 * (rho + rho.conj().T)
    return ExactResult(DensityMatrix(n, rho), tuple(branches), seq.n_cbits())
