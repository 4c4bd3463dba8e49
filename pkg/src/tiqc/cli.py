"""Command-line entry point: ``tiqc {simulate,synthesize,characterize,benchmark,budget}``.

Exit codes: 0 success, 2 invalid input, 3 optimizer or integrator did not converge.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import kvconfig
from .compiler.corpus import CORPUS, load
from .compiler.synth import OptimizerConfig, synthesize
from .compiler.textfmt import SequenceSyntaxError, emit_sequence, parse_sequence
from .core import PureState
from .gates import SequenceError, ghz_reference
from .noise import BUDGET_SOURCES, NoiseParams, error_budget, simulate
from .targets import PERMUTATIONS, controlled_permutation, qft_unitary

EXIT_OK, EXIT_INVALID, EXIT_NOT_CONVERGED = 0, 2, 3

log = logging.getLogger("tiqc")


class NotConverged(RuntimeError):
    pass


def _read_sequence(arg: str):
    """A sequence file path, or ``corpus:NAME`` for a shipped sequence."""
    if arg.startswith("corpus:"):
        name = arg.split(":", 1)[1]
        if name not in CORPUS:
            raise ValueError(f"unknown corpus entry {name!r}; choose from {', '.join(CORPUS)}")
        return load(name)
    path = Path(arg)
    return parse_sequence(path.read_text(), name=path.stem)


def _read_noise(arg: str | None) -> NoiseParams:
    if arg is None or arg == "default":
        return NoiseParams()
    if arg == "none":
        return NoiseParams.noiseless()
    return NoiseParams.load(arg)


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _table_csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ------------------------------------------------------------ subcommands

def cmd_simulate(a) -> int:
    seq = _read_sequence(a.sequence)
    p = _read_noise(a.noise)
    init = PureState.basis(a.initial) if a.initial else None
    if init is not None and init.n_qubits != seq.n_qubits:
        raise ValueError("initial state size does not match the sequence")
    res = simulate(seq, p, a.trajectories, a.seed, a.workers, init, strict_measure=not a.permissive)
    _emit(res.to_json() + "\n" if a.format == "json" else res.to_csv(), a.out)
    return EXIT_OK


def _parse_target(spec: str):
    """Return (target, n, column) for a target spec string.

    cnot | identity:N | qft:N | ghz:N | PERM[:POWER] (pi1..pi4) | FILE.npy
    """
    kind, _, arg = spec.partition(":")
    if kind == "cnot":
        u = np.eye(4, dtype=complex)
        u[[2, 3]] = u[[3, 2]]
        return u, 2, False
    if kind == "identity":
        n = int(arg or 1)
        return np.eye(1 << n, dtype=complex), n, False
    if kind == "qft":
        n = int(arg or 3)
        return qft_unitary(n), n, False
    if kind == "ghz":
        n = int(arg or 2)
        return ghz_reference(n).amplitudes, n, True
    if kind in PERMUTATIONS:
        return controlled_permutation(PERMUTATIONS[kind], int(arg or 1)).astype(complex), 3, False
    if spec.endswith(".npy"):
        m = np.load(spec)
        if m.ndim == 1:
            return m, int(np.log2(m.size)), True
        return m, int(np.log2(m.shape[0])), False
    raise ValueError(f"unknown target {spec!r}")


def cmd_synthesize(a) -> int:
    target, n, column = _parse_target(a.target)
    cfg = OptimizerConfig.from_kv(Path(a.config).read_text()) if a.config else OptimizerConfig()
    if a.seed is not None:
        cfg.seed = a.seed
    res = synthesize(target, n, cfg, column=column, name=a.name)
    _emit(emit_sequence(res.sequence), a.out)
    sys.stderr.write(f"infidelity {res.infidelity:.3e} restart {res.restart} rounds {res.rounds} "
                     f"ops {len(res.sequence)}\n")
    if not res.converged:
        raise NotConverged(f"synthesis stopped at infidelity {res.infidelity:.3e}")
    return EXIT_OK


def _load_columns(path: str, ncols: int) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", comments="#", skiprows=1, ndmin=2)
    if data.shape[1] < ncols:
        raise ValueError(f"{path}: expected at least {ncols} columns")
    return data


def cmd_characterize(a) -> int:
    from . import characterization as ch

    if a.kind == "ramsey":
        data = ch.RamseyDataset.load(a.data)
        init = ch.NoiseSpectrumModel.load(a.init) if a.init else None
        fit = ch.fit_spectrum(data, init)
        if not fit.converged:
            raise NotConverged(f"spectrum fit did not converge: {fit.message}")
        if a.format == "json":
            text = json.dumps({**{k: float(v) for k, v in kvconfig.loads(fit.model.to_kv()).items()},
                               "chi2": fit.chi2}, indent=1) + "\n"
        else:
            text = fit.model.to_kv() + f"# chi2 = {float(fit.chi2)!r}\n"
        _emit(text, a.out)
    elif a.kind == "nbar":
        if a.eta_omega0 is None:
            raise ValueError("--eta-omega0 is required for nbar fits")
        d = _load_columns(a.data, 2)
        fit = ch.fit_nbar(d[:, 0], d[:, 1], a.eta_omega0)
        res = {"nbar": fit.nbar, "residual_rms": fit.residual_rms}
        _emit(json.dumps(res) + "\n" if a.format == "json" else _table_csv([res.values()], res.keys()), a.out)
    elif a.kind == "intensity":
        # columns: N, p (one row per run)
        if a.shots is None:
            raise ValueError("--shots (repetitions per run) is required for intensity analysis")
        d = _load_columns(a.data, 2)
        ns = sorted(set(d[:, 0].astype(int)))
        runs = [d[d[:, 0].astype(int) == n, 1] for n in ns]
        fit = ch.intensity_fluctuation_analysis(runs, ns, a.shots)
        res = {"slope": fit.slope, "slope_err": fit.slope_err, "rel_fluct": fit.rel_fluct,
               "rel_fluct_err": fit.rel_fluct_err}
        _emit(json.dumps(res) + "\n" if a.format == "json" else _table_csv([res.values()], res.keys()), a.out)
    elif a.kind == "detection":
        p = _read_noise(a.data)
        d = ch.detection_error(p)
        res = {"threshold": d.threshold, "error": d.error, "overlap": d.overlap, "decay_part": d.decay_part}
        _emit(json.dumps(res) + "\n" if a.format == "json" else _table_csv([res.values()], res.keys()), a.out)
    return EXIT_OK


def cmd_benchmark(a) -> int:
    from .algorithms import BenchmarkConfig, benchmark_suite, write_reports

    raw = kvconfig.loads(Path(a.config).read_text()) if a.config else {}
    noise_arg = raw.pop("noise", None)
    if a.noise is not None:
        noise_arg = a.noise
    noise = None if noise_arg in (None, "none") else _read_noise(noise_arg)
    cfg = BenchmarkConfig.from_kv(raw, noise)
    over = {k: v for k, v in (("seed", a.seed), ("shots", a.shots), ("trajectories", a.trajectories),
                              ("workers", a.workers)) if v is not None}
    if over:
        cfg = BenchmarkConfig(**{**cfg.__dict__, **over})
    reports = benchmark_suite(cfg)
    if a.out:
        write_reports(reports, a.out, a.format)
    for r in reports:
        print(r.to_text())
    return EXIT_OK


def cmd_budget(a) -> int:
    seq = _read_sequence(a.sequence)
    p = _read_noise(a.noise)
    sources = kvconfig.parse_list(a.sources) if a.sources else BUDGET_SOURCES
    init = PureState.basis(a.initial) if a.initial else None
    table = error_budget(seq, p, sources, a.trajectories, a.seed, a.workers, init)
    if a.format == "json":
        text = json.dumps(table.to_dict(), indent=1) + "\n"
    else:
        text = _table_csv([(k, repr(float(v))) for k, v in table.fidelities.items()], ["source", "fidelity"])
    _emit(text, a.out)
    if a.out:
        sys.stdout.write(table.to_text())
    return EXIT_OK


# ------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tiqc", description="Trapped-ion quantum computer toolbox")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, trajectories=0, shots=False, seed=0, workers=1):
        p.add_argument("--seed", type=int, default=seed)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        if trajectories != 0:
            p.add_argument("--trajectories", type=int, default=trajectories)
        if shots:
            p.add_argument("--shots", type=int, default=None)
        p.add_argument("--workers", type=int, default=workers)

    p = sub.add_parser("simulate", help="Monte-Carlo simulation of a sequence file")
    p.add_argument("sequence", help="sequence file or corpus:NAME")
    p.add_argument("--noise", default=None, help="noise config file, 'default' or 'none'")
    p.add_argument("--initial", default=None, help="initial basis state, e.g. 010")
    p.add_argument("--permissive", action="store_true", help="allow measurement with unhidden spectators")
    common(p, trajectories=100)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("synthesize", help="search a native sequence for a target")
    p.add_argument("target", help="cnot | identity:N | qft:N | ghz:N | pi1..pi4[:POWER] | FILE.npy")
    p.add_argument("--config", default=None, help="optimizer key-value config")
    p.add_argument("--name", default="synthesized")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("characterize", help="fit noise-model parameters to data")
    p.add_argument("kind", choices=("ramsey", "nbar", "intensity", "detection"))
    p.add_argument("data", help="dataset CSV (or a noise config for 'detection')")
    p.add_argument("--init", default=None, help="initial spectrum model (ramsey)")
    p.add_argument("--eta-omega0", type=float, default=None, help="sideband Rabi frequency, rad/s (nbar)")
    common(p, shots=True)
    p.set_defaults(func=cmd_characterize)

    p = sub.add_parser("benchmark", help="run the algorithm benchmark suite")
    p.add_argument("config", nargs="?", default=None, help="suite key-value config")
    p.add_argument("--noise", default=None)
    common(p, trajectories=None, shots=True, seed=None, workers=None)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("budget", help="per-source error budget of a sequence")
    p.add_argument("sequence", help="sequence file or corpus:NAME")
    p.add_argument("--noise", default=None)
    p.add_argument("--sources", default=None, help="comma separated noise sources")
    p.add_argument("--initial", default=None)
    common(p, trajectories=15)
    p.set_defaults(func=cmd_budget)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return a.func(a)
    except NotConverged as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_NOT_CONVERGED
    except Exception as e:
        from .characterization.spectrum import IntegrationError

        if isinstance(e, IntegrationError):
            sys.stderr.write(f"error: {e}\n")
            return EXIT_NOT_CONVERGED
        if isinstance(e, (SequenceSyntaxError, SequenceError, ValueError, KeyError, OSError, TypeError)):
            sys.stderr.write(f"error: {e}\n")
            return EXIT_INVALID
        raise


if __name__ == "__main__":
    sys.exit(main())
