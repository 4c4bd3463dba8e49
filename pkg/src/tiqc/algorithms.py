"""Benchmark algorithms: coherent QFT, Kitaev QFT and Kitaev order finding.

Register conventions: basis index = sum b_q 2^(n-1-q), so ion 1 is the most
significant bit and a ket |x2 x1 x0> maps to index x directly.  Classical
results of the Kitaev circuits are read with cbit 0 as the least
significant bit (the first measurement yields the lowest output bit).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kvconfig
from .channels import execute_density
from .compiler.corpus import CORPUS, load
from .core import ProbDist, PureState, partial_trace, sample_outcomes
from .gates import (
    MS,
    AmpDamp,
    Collective,
    ConditionalZRot,
    Hide,
    Measure,
    PulseSequence,
    Recool,
    Unhide,
    ZRot,
)
from .noise import NoiseParams, simulate
from .targets import PERMUTATIONS, permutation_order, permutation_power, qft_unitary, register_permutation_unitary

__all__ = [
    "BenchmarkConfig",
    "BenchmarkReport",
    "InputSpec",
    "PermutationSpec",
    "PERMUTATION_SPECS",
    "COHERENT_QFT_INPUTS",
    "KITAEV_QFT_INPUTS",
    "ORDER_FINDING_RUNS",
    "benchmark_suite",
    "distinguishability",
    "kitaev_qft_sequence",
    "order_finding_ideal",
    "order_finding_sequence",
    "qft_ideal",
    "run_coherent_qft",
    "run_kitaev_qft",
    "run_order_finding",
    "sso",
]


# ------------------------------------------------------------ figures of merit

def _probs(p) -> np.ndarray:
    return p.probabilities if isinstance(p, ProbDist) else ProbDist(p).probabilities


def sso(p, q) -> float:
    """Squared statistical overlap (sum_i sqrt(p_i q_i))^2."""
    a, b = _probs(p), _probs(q)
    if a.shape != b.shape:
        raise ValueError("distributions differ in length")
    return float(min(1.0, np.sum(np.sqrt(a * b)) ** 2))


def distinguishability(p, q) -> float:
    """1 - 1/2 sum_i |p_i - q_i|."""
    a, b = _probs(p), _probs(q)
    if a.shape != b.shape:
        raise ValueError("distributions differ in length")
    return float(max(0.0, 1.0 - 0.5 * np.sum(np.abs(a - b))))


def qft_ideal(n: int) -> np.ndarray:
    return qft_unitary(n)


def _ket_superposition(kets, n: int = 3) -> PureState:
    vec = np.zeros(1 << n, dtype=complex)
    for k in kets:
        vec[int(k, 2)] = 1.0
    return PureState.from_vector(vec, normalize=True)


# ------------------------------------------------------------ reference data

@dataclass(frozen=True)
class InputSpec:
    label: str
    kets: tuple  # basis kets |x2 x1 x0> in equal superposition
    period: int  # label kept as given, not reinterpreted
    reference_sso: float | None = None  # experimental value, metadata only
    reference_dist: float | None = None

    def state(self) -> PureState:
        return _ket_superposition(self.kets, len(self.kets[0]))


COHERENT_QFT_INPUTS = (
    InputSpec("uniform", ("111", "110", "101", "100", "011", "010", "001", "000"), 1, 0.771, 0.771),
    InputSpec("period2", ("110", "100", "010", "000"), 2, 0.780, 0.733),
    InputSpec("period3", ("110", "100", "011", "000"), 3, 0.904, 0.864),
    InputSpec("period4", ("011", "000"), 4, 0.948, 0.874),
    InputSpec("zero", ("000",), 8, 0.973, 0.881),
)

KITAEV_QFT_INPUTS = (
    InputSpec("period2", ("000", "100", "010", "110"), 2, 0.995, 0.945),
    InputSpec("period4", ("100", "000"), 4, 0.996, 0.964),
    InputSpec("zero", ("000",), 8, 0.997, 0.956),
)


@dataclass(frozen=True)
class PermutationSpec:
    name: str
    mapping: tuple
    sequences: dict = field(default_factory=dict)  # power -> corpus entry name

    def __post_init__(self):
        if sorted(self.mapping) != list(range(4)):
            raise ValueError("mapping must be a bijection of {0, 1, 2, 3}")
        if self.order > 4:
            raise ValueError("permutation order must be at most 4")

    @property
    def order(self) -> int:
        return permutation_order(self.mapping)

    def unitary(self) -> np.ndarray:
        return register_permutation_unitary(self.mapping)

    def controlled_sequence(self, power: int) -> PulseSequence | None:
        """Corpus sequence for controlled pi^power, or None for the identity."""
        p = power % self.order
        if p == 0:
            return None
        if p in self.sequences:
            return load(self.sequences[p])
        # fall back to repeating the single-power sequence
        base = load(self.sequences[1])
        return base.with_ops(base.ops * p)


PERMUTATION_SPECS = {
    "pi1": PermutationSpec("pi1", PERMUTATIONS["pi1"], {1: "cperm1"}),
    "pi2": PermutationSpec("pi2", PERMUTATIONS["pi2"], {1: "cperm2"}),
    "pi3": PermutationSpec("pi3", PERMUTATIONS["pi3"], {1: "cperm3", 2: "cperm3sq"}),
    "pi4": PermutationSpec("pi4", PERMUTATIONS["pi4"], {1: "cperm4", 2: "cperm4sq"}),
}

# (permutation, input y, experimental SSO, experimental distinguishability)
ORDER_FINDING_RUNS = (
    ("pi1", 0, 0.753, 0.753),
    ("pi2", 0, 0.864, 0.865),
    ("pi3", 1, 0.859, 0.703),
    ("pi4", 0, 0.916, 0.907),
)


# ------------------------------------------------------------ reports

@dataclass
class BenchmarkReport:
    algorithm: str
    label: str
    ideal: ProbDist
    measured: ProbDist
    shots: int | None
    seed: int | None
    noisy: bool = False
    reference_sso: float | None = None
    reference_dist: float | None = None
    counts: np.ndarray | None = field(default=None, repr=False)

    @property
    def sso(self) -> float:
        return sso(self.ideal, self.measured)

    @property
    def distinguishability(self) -> float:
        return distinguishability(self.ideal, self.measured)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "label": self.label,
            "noisy": self.noisy,
            "shots": self.shots,
            "seed": self.seed,
            "sso": self.sso,
            "distinguishability": self.distinguishability,
            "ideal": self.ideal.probabilities.tolist(),
            "measured": self.measured.probabilities.tolist(),
            "counts": None if self.counts is None else [int(c) for c in self.counts],
            "reference_sso": self.reference_sso,
            "reference_distinguishability": self.reference_dist,
        }

    def to_text(self) -> str:
        ref = "" if self.reference_sso is None else f"  (experiment {100 * self.reference_sso:.1f})"
        return (f"{self.algorithm:<14}{self.label:<10} SSO {100 * self.sso:6.2f}  "
                f"D {100 * self.distinguishability:6.2f}{ref}")


def _sampled(dist: np.ndarray, shots: int | None, seed: int | None):
    dist = np.clip(dist, 0.0, None)
    dist = dist / dist.sum()
    if shots is None:
        return ProbDist(dist), None
    counts = sample_outcomes(ProbDist(dist), shots, seed)
    return ProbDist.from_counts(counts), counts


def _cbit_counts(bits, n_cbits: int) -> np.ndarray:
    """Counts over integers with cbit 0 as least significant bit."""
    counts = np.zeros(1 << n_cbits, dtype=np.int64)
    for b in bits:
        counts[sum(v << i for i, v in enumerate(b))] += 1
    return counts


# ------------------------------------------------------------ coherent QFT

def _logical_probabilities(probs: np.ndarray, order, n: int) -> np.ndarray:
    """Relabel physical outcomes: logical qubit q is physical qubit order[q]."""
    out = np.zeros_like(probs)
    for idx, pr in enumerate(probs):
        bits = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
        lidx = 0
        for q in range(n):
            lidx = (lidx << 1) | bits[order[q]]
        out[lidx] += pr
    return out


def run_coherent_qft(state: PureState | InputSpec, noise: NoiseParams | None = None, shots: int | None = None,
                     seed: int = 0, trajectories: int = 100, workers: int = 1) -> BenchmarkReport:
    """Run the shipped three-qubit QFT sequence on ``state`` and compare with |F psi|^2."""
    spec = state if isinstance(state, InputSpec) else None
    psi = spec.state() if spec else state
    if psi.n_qubits != 3:
        raise ValueError("the coherent QFT sequence acts on 3 qubits")
    seq = load("qft3")
    ideal = np.abs(qft_ideal(3) @ psi.amplitudes) ** 2
    if noise is None:
        rho = execute_density(seq, psi).density.matrix
    else:
        rho = simulate(seq, noise, trajectories, seed, workers, initial_state=psi).density.matrix
    phys = np.real(np.diag(rho))
    order = CORPUS["qft3"].interpretation.output_order or (0, 1, 2)
    measured, counts = _sampled(_logical_probabilities(phys, order, 3), shots, seed)
    return BenchmarkReport("coherent_qft", spec.label if spec else "custom", ProbDist(ideal / ideal.sum()),
                           measured, shots, seed if shots is not None else None, noise is not None,
                           spec.reference_sso if spec else None, spec.reference_dist if spec else None, counts)


# ------------------------------------------------------------ Kitaev QFT

def product_factors(psi: PureState, tol: float = 1e-9) -> list[np.ndarray]:
    """Single-qubit factors of a product state; raises ValueError if entangled."""
    n = psi.n_qubits
    factors = []
    for q in range(n):
        red = partial_trace(psi.density(), [q])
        m = red.matrix if hasattr(red, "matrix") else np.asarray(red)
        w, v = np.linalg.eigh(m)
        if w[-1] < 1 - tol:
            raise ValueError("input is entangled; the Kitaev QFT needs a product state")
        factors.append(v[:, -1])
    prod = factors[0]
    for f in factors[1:]:
        prod = np.kron(prod, f)
    if abs(np.vdot(prod, psi.amplitudes)) < 1 - tol:
        raise ValueError("input is entangled; the Kitaev QFT needs a product state")
    return factors


def _prep_angles(a: complex, b: complex) -> tuple[float, float]:
    """(phi, theta) with R_phi(theta)|0> = a|0> + b|1> up to global phase."""
    theta = 2 * math.acos(min(1.0, abs(a)))
    if abs(a) < 1e-15 or abs(b) < 1e-15:
        return math.pi / 2, float(theta)
    return float(np.angle(b) - np.angle(a) + math.pi / 2), float(theta)


def _hadamard_ops(ion: int) -> list:
    # equal to H up to a global phase
    return [ZRot(ion, math.pi), Collective(math.pi / 2, math.pi / 2)]


def kitaev_qft_sequence(state: PureState, feedback: bool = True) -> PulseSequence:
    """Single-ion semiclassical QFT of a product input.

    Input qubits are processed most significant first; round r measures
    output bit r and applies Z(pi / 2^(r-s)) conditioned on earlier bits s.
    """
    factors = product_factors(state)
    ops: list = []
    for r, f in enumerate(factors):
        phi, theta = _prep_angles(f[0], f[1])
        if theta > 0:
            ops.append(Collective(phi, theta, note=f"prepare input qubit {r + 1}"))
        if feedback:
            for s in range(r):
                ops.append(ConditionalZRot(0, math.pi / 2 ** (r - s), s))
        ops += _hadamard_ops(0)
        ops.append(Measure(0, r))
        if r < len(factors) - 1:
            ops.append(AmpDamp(0, 1.0, 0, note="reset"))
    return PulseSequence(1, ops, name="kitaev_qft")


def run_kitaev_qft(state: PureState | InputSpec, noise: NoiseParams | None = None, shots: int = 10000,
                   seed: int = 0, workers: int = 1, feedback: bool = True) -> BenchmarkReport:
    spec = state if isinstance(state, InputSpec) else None
    psi = spec.state() if spec else state
    seq = kitaev_qft_sequence(psi, feedback)
    n = psi.n_qubits
    ideal = np.abs(qft_ideal(n) @ psi.amplitudes) ** 2
    if noise is None:
        exact = execute_density(seq).cbit_probdist(order=list(range(n))[::-1]).probabilities
        measured, counts = _sampled(exact, shots, seed)
    else:
        res = simulate(seq, noise, shots, seed, workers)
        counts = _cbit_counts(res.classical_bits, n)
        measured = ProbDist.from_counts(counts)
    return BenchmarkReport("kitaev_qft", spec.label if spec else "custom", ProbDist(ideal / ideal.sum()),
                           measured, shots, seed, noise is not None,
                           spec.reference_sso if spec else None, spec.reference_dist if spec else None, counts)


# ------------------------------------------------------------ order finding

N_PHASE_BITS = 3
REGISTER = (1, 2)  # ions 2 and 3 (low and high bit of y)


def order_finding_ideal(perm: PermutationSpec, y: int, bits: int = N_PHASE_BITS) -> np.ndarray:
    """P(m) = || 2^-t sum_j exp(-2 pi i j m / 2^t) U^j |y> ||^2."""
    u = perm.unitary()
    dim = 1 << bits
    vec = np.zeros(4, dtype=complex)
    vec[y] = 1.0
    powers = [vec]
    for _ in range(dim - 1):
        powers.append(u @ powers[-1])
    powers = np.array(powers)  # (2^t, 4)
    j = np.arange(dim)
    amp = np.exp(-2j * np.pi * np.outer(np.arange(dim), j) / dim) @ powers / dim
    p = np.sum(np.abs(amp) ** 2, axis=1)
    return p / p.sum()


def _prepare_register(y: int) -> list:
    flips = [q for q, bit in ((REGISTER[0], y & 1), (REGISTER[1], (y >> 1) & 1)) if bit]
    if not flips:
        return []
    keep = [q for q in range(3) if q not in flips]
    return ([Hide(q) for q in keep] + [Collective(0.0, math.pi, note=f"prepare y={y}")]
            + [Unhide(q) for q in reversed(keep)])


def order_finding_sequence(perm: PermutationSpec, y: int, recool: float = 800e-6) -> PulseSequence:
    """Three-ion Kitaev order finding: ion 1 is the phase qubit, ions 2 and 3 hold y.

    Round r applies controlled pi^(2^(t-1-r)) and measures cbit r (bit r of
    the phase estimate, least significant first).
    """
    if not 0 <= y < 4:
        raise ValueError("y must lie in 0..3")
    ops = _prepare_register(y)
    hide = [Hide(q) for q in REGISTER]
    unhide = [Unhide(q) for q in reversed(REGISTER)]
    for r in range(N_PHASE_BITS):
        ops += hide + [Collective(math.pi / 2, math.pi / 2)] + unhide
        ctl = perm.controlled_sequence(2 ** (N_PHASE_BITS - 1 - r))
        if ctl is not None:
            ops += [op for op in ctl.ops]
        ops += hide
        for s in range(r):
            ops.append(ConditionalZRot(0, -math.pi / 2 ** (r - s), s))
        ops += _hadamard_ops(0)
        ops += [Measure(0, r), AmpDamp(0, 1.0, 0, note="reset")]
        ops += unhide
        if r < N_PHASE_BITS - 1:
            ops.append(Recool(recool))
    return PulseSequence(3, ops, name=f"order_finding_{perm.name}_y{y}")


def run_order_finding(perm: PermutationSpec | str, y: int = 0, noise: NoiseParams | None = None,
                      shots: int = 10000, seed: int = 0, workers: int = 1) -> BenchmarkReport:
    perm = PERMUTATION_SPECS[perm] if isinstance(perm, str) else perm
    seq = order_finding_sequence(perm, y)
    ideal = order_finding_ideal(perm, y)
    if noise is None:
        exact = execute_density(seq).cbit_probdist(order=[2, 1, 0]).probabilities
        measured, counts = _sampled(exact, shots, seed)
    else:
        res = simulate(seq, noise, shots, seed, workers)
        counts = _cbit_counts(res.classical_bits, N_PHASE_BITS)
        measured = ProbDist.from_counts(counts)
    ref = next((r for r in ORDER_FINDING_RUNS if r[0] == perm.name and r[1] == y), None)
    return BenchmarkReport("order_finding", f"{perm.name}(|{y}>)", ProbDist(ideal), measured, shots, seed,
                           noise is not None, ref[2] if ref else None, ref[3] if ref else None, counts)


# ------------------------------------------------------------ suite

@dataclass(frozen=True)
class BenchmarkConfig:
    coherent_qft: tuple = ()  # InputSpec labels from COHERENT_QFT_INPUTS, or "all"
    kitaev_qft: tuple = ()  # labels from KITAEV_QFT_INPUTS, or "all"
    order_finding: tuple = ()  # "pi2:0" style entries, or "all"
    shots: int = 10000
    seed: int = 0
    trajectories: int = 100
    workers: int = 1
    noise: NoiseParams | None = None

    @classmethod
    def from_kv(cls, d: dict, noise: NoiseParams | None = None) -> "BenchmarkConfig":
        base = cls()
        known = {"coherent_qft", "kitaev_qft", "order_finding", "shots", "seed", "trajectories", "workers"}
        unknown = set(d) - known - {"noise"}
        if unknown:
            raise ValueError(f"unknown benchmark keys {sorted(unknown)}")
        kw = {k: kvconfig.coerce(v, getattr(base, k)) for k, v in d.items() if k in known}
        return cls(**kw, noise=noise)


def _select(labels, table):
    if not labels:
        return []
    if "all" in labels:
        return list(table)
    by = {s.label: s for s in table}
    missing = [x for x in labels if x not in by]
    if missing:
        raise ValueError(f"unknown inputs {missing}")
    return [by[x] for x in labels]


def benchmark_suite(cfg: BenchmarkConfig | dict | None = None) -> list[BenchmarkReport]:
    """Run every configured algorithm/input combination."""
    if cfg is None or isinstance(cfg, dict):
        cfg = BenchmarkConfig.from_kv(cfg or {})
    reports = []
    for spec in _select(cfg.coherent_qft, COHERENT_QFT_INPUTS):
        reports.append(run_coherent_qft(spec, cfg.noise, None if cfg.noise is None else cfg.shots,
                                        cfg.seed, cfg.trajectories, cfg.workers))
    for spec in _select(cfg.kitaev_qft, KITAEV_QFT_INPUTS):
        reports.append(run_kitaev_qft(spec, cfg.noise, cfg.shots, cfg.seed, cfg.workers))
    runs = ([f"{p}:{y}" for p, y, *_ in ORDER_FINDING_RUNS] if "all" in cfg.order_finding else list(cfg.order_finding))
    for item in runs:
        name, _, y = item.partition(":")
        if name not in PERMUTATION_SPECS:
            raise ValueError(f"unknown permutation {name!r}")
        reports.append(run_order_finding(name, int(y or 0), cfg.noise, cfg.shots, cfg.seed, cfg.workers))
    return reports


def write_reports(reports, out_dir, fmt: str = "json") -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, r in enumerate(reports):
        stem = f"{i:02d}_{r.algorithm}_{r.label}".replace("|", "").replace(">", "").replace("(", "_").replace(")", "")
        if fmt == "json":
            path = out / f"{stem}.json"
            path.write_text(json.dumps(r.to_dict(), indent=1))
        elif fmt == "csv":
            path = out / f"{stem}.csv"
            lines = ["outcome,ideal,measured"]
            lines += [f"{k},{float(a)!r},{float(b)!r}" for k, (a, b) in
                      enumerate(zip(r.ideal.probabilities, r.measured.probabilities))]
            path.write_text("\n".join(lines) + "\n")
        else:
            raise ValueError(f"unknown format {fmt!r}")
        paths.append(path)
    summary = out / "summary.txt"
    summary.write_text("".join(r.to_text() + "\n" for r in reports))
    return paths
