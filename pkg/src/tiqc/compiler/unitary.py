"""Whole-sequence unitaries, MS concatenation and equivalence-aware verification."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..gates import CrosstalkMatrix, Hide, Idle, PulseSequence, Unhide, op_unitary

EQUIVALENCES = frozenset({"phase", "permutation", "output_phases", "input_phases"})


def sequence_unitary(seq: PulseSequence, n: int | None = None,
                     crosstalk: CrosstalkMatrix | None = None) -> np.ndarray:
    """Product of op unitaries in temporal order (first op rightmost).

    Hide/Unhide only update the hidden set and Idle is the identity; any
    other non-coherent op is rejected.
    """
    n = seq.n_qubits if n is None else n
    u = np.eye(1 << n, dtype=complex)
    for op, hidden in zip(seq.ops, seq.hidden_sets(strict_measure=False)):
        if isinstance(op, (Hide, Unhide, Idle)):
            continue
        if not op.coherent:
            raise TypeError(f"{type(op).__name__} has no unitary representation")
        u = op_unitary(op, n, hidden, crosstalk) @ u
    return u


def ms_concatenation(theta: float, base_angle: float, tol: float = 1e-9) -> int:
    """Number of repetitions k of an MS(base_angle) with k * base_angle = theta."""
    if base_angle <= 0 or theta <= 0:
        raise ValueError("angles must be positive")
    k = theta / base_angle
    kr = round(k)
    if kr < 1 or abs(k - kr) > tol * max(1.0, k):
        raise ValueError(f"{theta} is not a positive multiple of {base_angle}")
    return int(kr)


def permutation_matrix(perm, n: int) -> np.ndarray:
    """Matrix P with (P U) carrying qubit ``perm[q]`` of U's output into slot q."""
    dim = 1 << n
    p = np.zeros((dim, dim))
    for src in range(dim):
        bits = [(src >> (n - 1 - q)) & 1 for q in range(n)]
        dst = 0
        for q in range(n):
            dst = (dst << 1) | bits[perm[q]]
        p[dst, src] = 1.0
    return p


@dataclass
class VerifyReport:
    fidelity: float
    passed: bool
    tolerance: float
    equivalences: tuple
    permutation: tuple | None = None
    output_phases: np.ndarray | None = field(default=None, repr=False)
    input_phases: np.ndarray | None = field(default=None, repr=False)

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity

    @property
    def process_fidelity(self) -> float:
        return self.fidelity**2

    def to_text(self) -> str:
        lines = [
            f"fidelity        {self.fidelity:.12f}",
            f"process_fid     {self.process_fidelity:.12f}",
            f"passed          {self.passed}",
            f"tolerance       {self.tolerance:g}",
            f"equivalences    {','.join(self.equivalences)}",
        ]
        if self.permutation is not None:
            lines.append(f"permutation     {' '.join(str(p + 1) for p in self.permutation)}")
        for name, ph in (("output_phases", self.output_phases), ("input_phases", self.input_phases)):
            if ph is not None:
                lines.append(f"{name:<16}{' '.join(f'{x:.6f}' for x in np.angle(ph))}")
        return "\n".join(lines) + "\n"


def _best_phases(m: np.ndarray, target: np.ndarray, out: bool, inp: bool, restarts: int = 8):
    """max over diagonal unitaries of |Tr(T^dag D_o M D_i)| / d."""
    d = m.shape[0]
    tdag = target.conj().T
    if not out and not inp:
        return abs(np.trace(tdag @ m)) / d, None, None
    if out and not inp:
        diag = np.diag(m @ tdag)
        return float(np.sum(np.abs(diag))) / d, np.exp(-1j * np.angle(diag)), None
    if inp and not out:
        diag = np.diag(tdag @ m)
        return float(np.sum(np.abs(diag))) / d, None, np.exp(-1j * np.angle(diag))
    # Alternating maximization; Tr(T^dag Do M Di) = sum_ij conj(T_ij) do_i M_ij di_j
    a = target.conj() * m  # elementwise conj(T_ij) M_ij
    rng = np.random.default_rng(0)
    best = (-1.0, None, None)
    starts = [np.ones(d, dtype=complex)] + [np.exp(2j * np.pi * rng.random(d)) for _ in range(restarts)]
    for di in starts:
        prev = -1.0
        for _ in range(500):
            v = a @ di
            do = np.exp(-1j * np.angle(v))
            w = do @ a
            di = np.exp(-1j * np.angle(w))
            val = abs(do @ a @ di) / d
            if val - prev < 1e-15:
                break
            prev = val
        if val > best[0] + 1e-13:
            best = (val, do, di)
    return float(best[0]), best[1], best[2]


def verify_sequence(seq, target: np.ndarray, tolerance: float = 1e-9,
                    equivalences=("phase",)) -> VerifyReport:
    """Compare a sequence (or unitary) with ``target`` modulo ``equivalences``.

    Fidelity is |Tr(T^dag D_o P U D_i)| / d maximized over the allowed
    elements: global phase (always), qubit relabelling ``P`` of the output,
    and diagonal phase matrices on the output and/or input side.
    """
    eq = set(equivalences) | {"phase"}
    unknown = eq - EQUIVALENCES
    if unknown:
        raise ValueError(f"unknown equivalences {sorted(unknown)}")
    u = sequence_unitary(seq) if isinstance(seq, PulseSequence) else np.asarray(seq, dtype=complex)
    target = np.asarray(target, dtype=complex)
    if u.shape != target.shape:
        raise ValueError("sequence and target dimensions differ")
    n = int(math.log2(u.shape[0]))
    perms = list(itertools.permutations(range(n))) if "permutation" in eq else [tuple(range(n))]
    best = None
    for perm in perms:
        m = permutation_matrix(perm, n) @ u
        f, do, di = _best_phases(m, target, "output_phases" in eq, "input_phases" in eq)
        if best is None or f > best[0] + 1e-12:
            best = (f, perm, do, di)
    f, perm, do, di = best
    f = min(f, 1.0)
    return VerifyReport(
        fidelity=f,
        passed=bool(1.0 - f <= tolerance),
        tolerance=tolerance,
        equivalences=tuple(sorted(eq)),
        permutation=perm if "permutation" in eq else None,
        output_phases=do,
        input_phases=di,
    )
