"""Monte-Carlo trajectory engine.

Every trajectory is a pure state evolved through the sequence with noise
realizations drawn from ``SeedSequence([seed, index])``:

* dephasing   - collective phase from an Ornstein-Uhlenbeck detuning,
                integrated exactly over each time interval
* intensity   - one Gaussian relative error per trajectory scaling all angles
* spectator   - a second Gaussian term on collective ops (R, MS), redrawn at Recool
* crosstalk   - addressed rotations also rotate the other ions by eps_ij
* decay       - D -> S quantum jumps with lifetime tau1
* prep        - each ion starts flipped with probability 1 - pump_fidelity
* detection   - in-sequence measurement results misread from photon counts

Noise acting during an op is split into two halves around the op itself.
The density matrix is the average of trajectory projectors, accumulated in
trajectory index order so results do not depend on the worker count.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import kernels, kvconfig
from .channels import amp_damp_channel, execute_density, phase_damp_channel
from .characterization.detection import detection_error, detection_sample
from .core import DensityMatrix, PureState, state_fidelity
from .gates import (
    MS,
    AmpDamp,
    Collective,
    ConditionalZRot,
    CrosstalkMatrix,
    Hide,
    Idle,
    Measure,
    NativeOp,
    PhaseDamp,
    PulseSequence,
    Recool,
    Unhide,
    ZRot,
    apply_coherent_inplace,
)

SOURCES = ("dephasing", "intensity", "crosstalk", "spectator", "decay", "prep", "detection")
BUDGET_SOURCES = ("crosstalk", "dephasing", "intensity", "spectator")

DEFAULT_DURATIONS = {
    "ZRot": 105e-6,
    "Collective": 105e-6,
    "MS": 105e-6,
    "ConditionalZRot": 105e-6,
    "Hide": 105e-6,
    "Unhide": 105e-6,
    "PhaseDamp": 105e-6,
    "AmpDamp": 105e-6,
    "Measure": 150e-6,
}

# Overlaps reported for the reference error budgets (comparison only).
BUDGET_REFERENCE = {
    "ghz_budget": {"all": 0.77, "crosstalk": 0.95, "dephasing": 0.84, "intensity": 0.99, "spectator": 0.94},
    "qft3": {"all": 0.93, "crosstalk": 0.95, "dephasing": 0.98, "intensity": 0.99, "spectator": 0.99},
}


@dataclass(frozen=True)
class NoiseParams:
    """Error-model parameters, SI units. ``tau1 = inf`` disables decay physics."""

    tau_coh: float = 15e-3
    tau_corr: float = 333e-6
    intensity_rel_fluct: float = 0.02
    spectator_rel_fluct: float = 0.02
    crosstalk: CrosstalkMatrix | None = None
    crosstalk_neighbor: float = 0.03
    tau1: float = 1.13
    pump_fidelity: float = 0.991
    detect_bright_rate: float = 50e3
    detect_dark_rate: float = 1e3
    detect_time: float = 5e-3
    op_durations: dict = field(default_factory=lambda: dict(DEFAULT_DURATIONS))
    sources: frozenset = frozenset(SOURCES)

    def __post_init__(self):
        object.__setattr__(self, "sources", frozenset(self.sources))
        object.__setattr__(self, "op_durations", {**DEFAULT_DURATIONS, **dict(self.op_durations)})
        bad = self.sources - set(SOURCES)
        if bad:
            raise ValueError(f"unknown noise sources {sorted(bad)}")
        for name in ("tau_coh", "tau_corr", "tau1", "detect_time"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("intensity_rel_fluct", "spectator_rel_fluct", "detect_bright_rate", "detect_dark_rate"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 <= self.pump_fidelity <= 1.0:
            raise ValueError("pump_fidelity must lie in [0, 1]")
        if not 0.0 <= self.crosstalk_neighbor <= 1.0:
            raise ValueError("crosstalk_neighbor must lie in [0, 1]")
        for k, v in self.op_durations.items():
            if v < 0:
                raise ValueError(f"duration of {k} must be >= 0")

    __hash__ = None  # op_durations is a dict

    @classmethod
    def noiseless(cls, **kw) -> "NoiseParams":
        return cls(sources=frozenset(), **kw)

    def with_sources(self, sources) -> "NoiseParams":
        return replace(self, sources=frozenset(sources))

    def enabled(self, source: str) -> bool:
        return source in self.sources

    def crosstalk_for(self, n: int) -> CrosstalkMatrix:
        if self.crosstalk is not None:
            if self.crosstalk.n != n:
                raise ValueError("crosstalk matrix size does not match register")
            return self.crosstalk
        return CrosstalkMatrix.neighbor(n, self.crosstalk_neighbor)

    def duration(self, op: NativeOp) -> float:
        if isinstance(op, (Recool, Idle)):
            return op.duration
        return float(self.op_durations.get(type(op).__name__, 0.0))

    # ---- key-value IO
    def to_kv(self) -> str:
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "op_durations":
                for k in sorted(v):
                    d[f"duration.{k}"] = float(v[k])
            elif f.name == "crosstalk":
                if v is not None:
                    d["crosstalk"] = "; ".join(" ".join(repr(float(x)) for x in row) for row in v.epsilon)
            elif f.name == "sources":
                d["sources"] = ", ".join(s for s in SOURCES if s in v) or "none"
            else:
                d[f.name] = float(v)
        return kvconfig.dumps(d)

    @classmethod
    def from_kv(cls, text: str) -> "NoiseParams":
        raw = kvconfig.loads(text)
        kw: dict = {}
        durations = {}
        scalar = {f.name for f in fields(cls)} - {"op_durations", "crosstalk", "sources"}
        for k, v in raw.items():
            if k.startswith("duration."):
                durations[k.split(".", 1)[1]] = float(v)
            elif k == "crosstalk":
                rows = [[float(x) for x in r.split()] for r in v.split(";") if r.strip()]
                kw["crosstalk"] = CrosstalkMatrix(np.array(rows))
            elif k == "sources":
                kw["sources"] = frozenset() if v.strip() == "none" else frozenset(kvconfig.parse_list(v))
            elif k in scalar:
                kw[k] = float(v)
            else:
                raise ValueError(f"unknown noise parameter {k!r}")
        if durations:
            kw["op_durations"] = durations
        return cls(**kw)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_kv())

    @classmethod
    def load(cls, path) -> "NoiseParams":
        with open(path) as fh:
            return cls.from_kv(fh.read())


# ------------------------------------------------------------ dephasing

def ou_sigma(tau_coh: float, tau_corr: float) -> float:
    """Stationary detuning std (rad/s) giving Ramsey contrast 1/e at tau_coh.

    For a stationary OU detuning with std s and correlation time tc the
    accumulated phase over T has variance 2 s^2 tc^2 (T/tc - 1 + exp(-T/tc));
    the Gaussian contrast exp(-Var/2) equals 1/e when Var = 2.
    """
    x = tau_coh / tau_corr
    return 1.0 / (tau_corr * math.sqrt(x - 1.0 + math.exp(-x)))


def _phase_var_coeff(x: float) -> float:
    """2x - 3 + 4 e^-x - e^-2x, series-stable for small x."""
    if x < 1e-2:
        return (2 / 3) * x**3 - 0.5 * x**4 + (7 / 30) * x**5
    return 2 * x - 3 + 4 * math.exp(-x) - math.exp(-2 * x)


class OUDephasing:
    """Ornstein-Uhlenbeck detuning (rad/s) with exact interval sampling."""

    def __init__(self, sigma: float, tau_corr: float, rng: np.random.Generator, delta0: float | None = None):
        self.sigma = sigma
        self.tau = tau_corr
        self.rng = rng
        self.delta = rng.normal(0.0, sigma) if delta0 is None else delta0

    def advance(self, dt: float) -> float:
        """Advance by ``dt`` and return the accumulated phase."""
        if dt <= 0:
            return 0.0
        s2, tau = self.sigma**2, self.tau
        x = dt / tau
        a = math.exp(-x)
        var_d = s2 * -math.expm1(-2 * x)
        var_p = s2 * tau * tau * _phase_var_coeff(x)
        cov = s2 * tau * (-math.expm1(-x)) ** 2
        mean_p = tau * (-math.expm1(-x)) * self.delta
        z1, z2 = self.rng.standard_normal(2)
        l11 = math.sqrt(max(var_p, 0.0))
        l21 = cov / l11 if l11 > 0 else 0.0
        l22 = math.sqrt(max(var_d - l21 * l21, 0.0))
        phase = mean_p + l11 * z1
        self.delta = a * self.delta + l21 * z1 + l22 * z2
        return phase


def sample_dephasing_phase(p: NoiseParams, duration: float, rng: np.random.Generator) -> float:
    """Phase accumulated over ``duration`` from a stationary OU detuning."""
    if duration <= 0:
        return 0.0
    return OUDephasing(ou_sigma(p.tau_coh, p.tau_corr), p.tau_corr, rng).advance(duration)


# ---------------------------------------------------------------- decay

def _decay_inplace(psi: np.ndarray, n: int, gamma: float, rng: np.random.Generator, jumps=None, tag=None):
    """Quantum-jump unraveling of amplitude damping D=|0> -> S=|1> on every ion."""
    if gamma <= 0:
        rng.random(n)
        return
    keep = math.sqrt(1.0 - gamma)
    v = psi.reshape(-1)
    draws = rng.random(n)
    for q in range(n):
        w = v.reshape(1 << q, 2, -1)
        p0 = kernels.excited_population(v, q, n)
        if draws[q] < gamma * p0:
            w[:, 1, :] = w[:, 0, :]
            w[:, 0, :] = 0.0
            if jumps is not None:
                jumps.append((tag, "decay", q))
        else:
            w[:, 0, :] *= keep
        v /= np.linalg.norm(v)


def sample_decay(state: PureState, p: NoiseParams, duration: float, rng: np.random.Generator) -> PureState:
    """Apply spontaneous decay over ``duration`` to one trajectory state."""
    psi = np.array(state.amplitudes, dtype=complex)
    gamma = -math.expm1(-duration / p.tau1) if math.isfinite(p.tau1) else 0.0
    _decay_inplace(psi, state.n_qubits, gamma, rng)
    return PureState(state.n_qubits, psi)


def _kraus_jump(psi: np.ndarray, n: int, ion: int, ops, rng) -> int:
    """Pick Kraus operator k with probability ||E_k psi||^2 and apply it."""
    w = psi.reshape(1 << ion, 2, -1)
    u = rng.random()
    acc = 0.0
    outs = []
    for k, e in enumerate(ops):
        out = np.einsum("ab,ibj->iaj", e, w)
        pk = float(np.vdot(out, out).real)
        outs.append((out, pk))
        acc += pk
        if u < acc:
            psi[:] = (out / math.sqrt(pk)).reshape(-1)
            return k
    out, pk = max(outs, key=lambda t: t[1])
    psi[:] = (out / math.sqrt(pk)).reshape(-1)
    return len(ops) - 1


# ----------------------------------------------------------- trajectories

@dataclass
class Trajectory:
    state: PureState
    cbits: tuple
    jumps: list


class _Engine:
    def __init__(self, seq: PulseSequence, p: NoiseParams, strict_measure: bool):
        self.seq = seq
        self.p = p
        self.n = seq.n_qubits
        self.hidden_at = seq.hidden_sets(strict_measure)
        self.n_cbits = seq.n_cbits()
        self.xtalk = p.crosstalk_for(self.n) if p.enabled("crosstalk") else None
        self.sigma = ou_sigma(p.tau_coh, p.tau_corr)
        self.gamma_of = (lambda d: -math.expm1(-d / p.tau1)) if math.isfinite(p.tau1) else (lambda d: 0.0)
        self.det = None
        if p.enabled("detection"):
            self.det = detection_error(p, p.op_durations["Measure"])
        self.pd_full = phase_damp_channel(1.0).kraus_ops

    def run(self, index: int, seed: int, initial: PureState | None) -> Trajectory:
        p, n = self.p, self.n
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))
        psi = (np.array(initial.amplitudes, dtype=complex) if initial is not None
               else np.eye(1, 1 << n, 0, dtype=complex).ravel())
        jumps: list = []
        if p.enabled("prep"):
            flips = rng.random(n) > p.pump_fidelity
            for q in np.flatnonzero(flips):
                kernels.apply_1q(psi, np.array([[0, 1], [1, 0]], dtype=complex), int(q), n)
                jumps.append((-1, "prep", int(q)))
        eps_i = rng.normal(0.0, p.intensity_rel_fluct) if p.enabled("intensity") else 0.0
        eps_s = rng.normal(0.0, p.spectator_rel_fluct) if p.enabled("spectator") else 0.0
        ou = OUDephasing(self.sigma, p.tau_corr, rng) if p.enabled("dephasing") else None
        cbits: dict = {}

        def idle(dt, qubits, tag):
            if dt <= 0:
                return
            if ou is not None:
                phase = ou.advance(dt)
                if qubits:
                    ang = np.zeros(n)
                    ang[list(qubits)] = phase
                    kernels.apply_z_phases(psi, ang, n)
            if p.enabled("decay"):
                _decay_inplace(psi, n, self.gamma_of(dt), rng, jumps, tag)

        for k, (op, hidden) in enumerate(zip(self.seq.ops, self.hidden_at)):
            d = p.duration(op)
            if isinstance(op, Measure):
                exposed = [q for q in range(n) if q != op.ion]
            else:
                exposed = [q for q in range(n) if q not in hidden]
            idle(d / 2, exposed, k)
            if isinstance(op, ZRot):
                apply_coherent_inplace(psi, replace(op, theta=op.theta * (1 + eps_i)), n, hidden, self.xtalk)
            elif isinstance(op, (Collective, MS)):
                apply_coherent_inplace(psi, replace(op, theta=op.theta * (1 + eps_i + eps_s)), n, hidden)
            elif isinstance(op, ConditionalZRot):
                if op.fires(cbits.get(op.cbit, 0)):
                    apply_coherent_inplace(psi, ZRot(op.ion, op.theta * (1 + eps_i)), n, hidden, self.xtalk)
            elif isinstance(op, PhaseDamp):
                if _kraus_jump(psi, n, op.ion, phase_damp_channel(op.gamma).kraus_ops, rng):
                    jumps.append((k, "phase_damp", op.ion))
            elif isinstance(op, AmpDamp):
                if _kraus_jump(psi, n, op.ion, amp_damp_channel(op.gamma, op.target).kraus_ops, rng):
                    jumps.append((k, "amp_damp", op.ion))
            elif isinstance(op, Measure):
                for q in range(n):
                    if q != op.ion and q not in hidden:
                        _kraus_jump(psi, n, q, self.pd_full, rng)
                p0 = kernels.excited_population(psi, op.ion, n)
                bit = int(rng.random() >= p0)
                w = psi.reshape(1 << op.ion, 2, -1)
                w[:, 1 - bit, :] = 0.0
                psi /= np.linalg.norm(psi)
                read = bit
                if self.det is not None:
                    counts = detection_sample(bool(bit), p, rng, p.op_durations["Measure"])
                    read = int(counts > self.det.threshold)
                    if read != bit:
                        jumps.append((k, "misread", op.ion))
                cbits[op.cbit] = read
            elif isinstance(op, Recool):
                if p.enabled("spectator"):
                    eps_s = rng.normal(0.0, p.spectator_rel_fluct)
            elif isinstance(op, (Hide, Unhide, Idle)):
                pass
            else:  # pragma: no cover
                raise TypeError(f"unsupported op {op!r}")
            idle(d - d / 2, exposed, k)
        psi /= np.linalg.norm(psi)
        bits = tuple(int(cbits.get(i, 0)) for i in range(self.n_cbits))
        return Trajectory(PureState(n, psi), bits, jumps)


def run_trajectory(seq: PulseSequence, p: NoiseParams, traj_index: int, seed: int,
                   initial_state: PureState | None = None, strict_measure: bool = True) -> Trajectory:
    """One noisy pure-state trajectory, deterministic in (seed, traj_index)."""
    if seq.n_qubits > 10:
        raise ValueError("trajectory simulation is limited to 10 qubits")
    return _Engine(seq, p, strict_measure).run(traj_index, seed, initial_state)


@dataclass
class SimResult:
    density: DensityMatrix
    classical_bits: list
    n_traj: int
    seed: int
    name: str = ""
    states: np.ndarray | None = field(default=None, repr=False)

    def cbit_counts(self) -> dict:
        out: dict = {}
        for b in self.classical_bits:
            out[b] = out.get(b, 0) + 1
        return out

    def to_dict(self) -> dict:
        m = self.density.matrix
        return {
            "name": self.name,
            "n_qubits": self.density.n_qubits,
            "n_traj": self.n_traj,
            "seed": self.seed,
            "density": [[float(z.real), float(z.imag)] for z in m.ravel()],
            "classical_bits": [list(b) for b in self.classical_bits],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# name={self.name} n_qubits={self.density.n_qubits} n_traj={self.n_traj} seed={self.seed}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "col", "real", "imag"])
        m = self.density.matrix
        for i in range(m.shape[0]):
            for j in range(m.shape[1]):
                w.writerow([i, j, repr(float(m[i, j].real)), repr(float(m[i, j].imag))])
        return buf.getvalue()

    @classmethod
    def from_dict(cls, d: dict) -> "SimResult":
        arr = np.array(d["density"], dtype=float)
        dim = 1 << d["n_qubits"]
        m = (arr[:, 0] + 1j * arr[:, 1]).reshape(dim, dim)
        return cls(DensityMatrix(d["n_qubits"], m), [tuple(b) for b in d["classical_bits"]],
                   d["n_traj"], d["seed"], d.get("name", ""))


def _run_chunk(args):
    seq, p, seed, indices, initial, strict = args
    eng = _Engine(seq, p, strict)
    out = [eng.run(i, seed, initial) for i in indices]
    return np.array([t.state.amplitudes for t in out]), [t.cbits for t in out]


def simulate(seq: PulseSequence, p: NoiseParams, n_traj: int, seed: int = 0, workers: int = 1,
             initial_state: PureState | None = None, strict_measure: bool = True,
             keep_states: bool = False) -> SimResult:
    """Average ``n_traj`` trajectories into a density matrix.

    Trajectory ``i`` depends only on ``(seed, i)``; chunks computed by worker
    processes are reassembled in index order before averaging.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    seq.hidden_sets(strict_measure)
    workers = max(1, min(int(workers), n_traj))
    chunks = np.array_split(np.arange(n_traj), workers)
    jobs = [(seq, p, seed, c.tolist(), initial_state, strict_measure) for c in chunks]
    if workers == 1:
        parts = [_run_chunk(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_run_chunk, jobs))
    states = np.concatenate([s for s, _ in parts], axis=0)
    bits = [b for _, bb in parts for b in bb]
    rho = states.T @ states.conj() / n_traj
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    return SimResult(DensityMatrix(seq.n_qubits, rho), bits, n_traj, seed, seq.name,
                     states if keep_states else None)


# ---------------------------------------------------------- error budget

@dataclass
class BudgetTable:
    name: str
    fidelities: dict
    n_traj: int
    seed: int
    reference: dict | None = None

    def minimum_source(self) -> str:
        single = {k: v for k, v in self.fidelities.items() if k != "all"}
        return min(single, key=single.get)

    def to_text(self) -> str:
        lines = [f"# error budget {self.name} n_traj={self.n_traj} seed={self.seed}",
                 f"{'source':<12}{'fidelity':>10}{'reference':>11}"]
        for k, v in self.fidelities.items():
            ref = self.reference.get(k) if self.reference else None
            lines.append(f"{k:<12}{v:>10.4f}{'' if ref is None else f'{ref:>11.2f}'}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {"name": self.name, "n_traj": self.n_traj, "seed": self.seed,
                "fidelities": self.fidelities, "reference": self.reference}


def error_budget(seq: PulseSequence, p: NoiseParams, sources=BUDGET_SOURCES, n_traj: int = 15,
                 seed: int = 0, workers: int = 1, initial_state: PureState | None = None) -> BudgetTable:
    """Fidelity with the noiseless output for each single source and all together."""
    sources = list(sources)
    if not sources:
        raise ValueError("source list is empty")
    ideal = execute_density(seq, initial_state).density
    fids = {}
    for src in ["all"] + sources:
        active = sources if src == "all" else [src]
        res = simulate(seq, p.with_sources(active), n_traj, seed, workers, initial_state)
        fids[src] = state_fidelity(ideal, res.density)
    return BudgetTable(seq.name, fids, n_traj, seed, BUDGET_REFERENCE.get(seq.name))
