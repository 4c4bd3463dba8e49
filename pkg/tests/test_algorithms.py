import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles as orc
from tiqc.algorithms import (
    COHERENT_QFT_INPUTS,
    KITAEV_QFT_INPUTS,
    ORDER_FINDING_RUNS,
    PERMUTATION_SPECS,
    BenchmarkConfig,
    PermutationSpec,
    benchmark_suite,
    distinguishability,
    kitaev_qft_sequence,
    order_finding_ideal,
    order_finding_sequence,
    product_factors,
    run_coherent_qft,
    run_kitaev_qft,
    run_order_finding,
    sso,
    write_reports,
)
from tiqc.channels import execute_density
from tiqc.core import PureState
from tiqc.noise import NoiseParams
from tiqc.targets import PERMUTATIONS, controlled_permutation, permutation_order, qft_unitary

dists = st.integers(1, 16).flatmap(
    lambda n: st.lists(st.floats(0, 1), min_size=n, max_size=n).filter(lambda v: sum(v) > 1e-3))


def _norm(v):
    v = np.asarray(v, dtype=float)
    return v / v.sum()


# ------------------------------------------------------------ figures of merit


@given(dists, st.data())
def test_sso_and_distinguishability_bounds(p, data):
    q = data.draw(st.lists(st.floats(0, 1), min_size=len(p), max_size=len(p)).filter(lambda v: sum(v) > 1e-3))
    p, q = _norm(p), _norm(q)
    s, d = sso(p, q), distinguishability(p, q)
    assert 0 <= s <= 1 and 0 <= d <= 1
    assert sso(p, q) == pytest.approx(sso(q, p))
    assert sso(p, p) == pytest.approx(1.0)
    assert distinguishability(p, p) == pytest.approx(1.0)
    # Fuchs - van de Graaf: 1 - D_tv >= 1 - sqrt(1 - F)
    assert d >= 1 - math.sqrt(max(0.0, 1 - s)) - 1e-9


def test_sso_values():
    assert sso([1, 0], [0, 1]) == 0.0
    assert sso([0.5, 0.5], [1, 0]) == pytest.approx(0.5)
    assert distinguishability([0.5, 0.5], [1, 0]) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        sso([1, 0], [1, 0, 0])


# ------------------------------------------------------------ targets


def test_permutation_orders():
    assert {k: permutation_order(v) for k, v in PERMUTATIONS.items()} == {"pi1": 2, "pi2": 2, "pi3": 3, "pi4": 4}
    assert permutation_order(PERMUTATIONS["pi3"], 0) == 1
    with pytest.raises(ValueError):
        PermutationSpec("bad", (0, 0, 1, 2))


@pytest.mark.parametrize("name", sorted(PERMUTATIONS))
def test_controlled_permutation_is_permutation_matrix(name):
    u = controlled_permutation(PERMUTATIONS[name])
    assert np.allclose(u @ u.T, np.eye(8))
    assert np.allclose(u[:4, :4], np.eye(4))  # control ion 1 = 0 leaves the register alone


# ------------------------------------------------------------ order finding oracle


@pytest.mark.parametrize("name", sorted(PERMUTATIONS))
@pytest.mark.parametrize("y", range(4))
def test_order_finding_ideal_matches_textbook_circuit(name, y):
    spec = PERMUTATION_SPECS[name]
    assert np.allclose(order_finding_ideal(spec, y), orc.textbook_phase_estimation(spec.mapping, y), atol=1e-12)


def test_order_finding_ideal_support():
    p = order_finding_ideal(PERMUTATION_SPECS["pi2"], 0)
    assert p == pytest.approx([0.5, 0, 0, 0, 0.5, 0, 0, 0])
    p = order_finding_ideal(PERMUTATION_SPECS["pi4"], 0)
    assert p == pytest.approx([0.25, 0, 0.25, 0, 0.25, 0, 0.25, 0])


def test_order_finding_sequence_structure():
    seq = order_finding_sequence(PERMUTATION_SPECS["pi2"], 0)
    seq.validate()
    assert seq.n_cbits() == 3
    # powers 4 and 2 of an order-2 permutation are the identity; only the last round runs it
    assert sum(1 for op in seq if op.note == "reset") == 3
    with pytest.raises(ValueError):
        order_finding_sequence(PERMUTATION_SPECS["pi2"], 5)


def test_order_finding_pi2_exact():
    r = run_order_finding("pi2", 0, shots=None)
    assert r.sso == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("y", [1, 2, 3])
def test_order_finding_register_preparation(y):
    # with a power-free run (identity permutation) the register just holds y
    seq = order_finding_sequence(PermutationSpec("id", (0, 1, 2, 3), {1: "cperm2"}), y)
    rho = execute_density(seq).density.matrix
    lo, hi = y & 1, y >> 1
    pops = np.real(np.diag(rho)).reshape(2, 2, 2)  # (ion1, ion2=lo, ion3=hi)
    assert pops[:, lo, hi].sum() == pytest.approx(1.0, abs=1e-12)


# ------------------------------------------------------------ Kitaev QFT


@pytest.mark.parametrize("spec", KITAEV_QFT_INPUTS, ids=lambda s: s.label)
def test_kitaev_exact_distribution_equals_dft(spec):
    psi = spec.state()
    seq = kitaev_qft_sequence(psi)
    exact = execute_density(seq).cbit_probdist(order=[2, 1, 0]).probabilities
    expect = np.abs(orc.dft(3) @ psi.amplitudes) ** 2
    assert np.allclose(exact, expect, atol=1e-12)


@given(st.lists(st.tuples(st.floats(0, math.pi), st.floats(0, 2 * math.pi)), min_size=1, max_size=4))
def test_kitaev_random_product_states(qubits):
    vec = np.ones(1, dtype=complex)
    for th, ph in qubits:
        vec = np.kron(vec, [math.cos(th / 2), np.exp(1j * ph) * math.sin(th / 2)])
    psi = PureState.from_vector(vec)
    n = psi.n_qubits
    exact = execute_density(kitaev_qft_sequence(psi)).cbit_probdist(order=list(range(n))[::-1]).probabilities
    assert np.allclose(exact, np.abs(orc.dft(n) @ vec) ** 2, atol=1e-9)


def test_kitaev_without_feedback_differs():
    # a plane wave with an odd frequency needs every conditional phase correction
    psi = PureState.from_vector(np.exp(2j * np.pi * np.arange(8) * 3 / 8) / math.sqrt(8))
    with_fb = run_kitaev_qft(psi, shots=None)
    without = run_kitaev_qft(psi, shots=None, feedback=False)
    assert with_fb.sso == pytest.approx(1.0, abs=1e-12)
    assert without.sso < 0.5


def test_product_factors():
    psi = PureState.from_vector(np.kron([1, 1j], [1, 0]), normalize=True)
    f = product_factors(psi)
    assert len(f) == 2
    with pytest.raises(ValueError):
        product_factors(PureState.from_vector([1, 0, 0, 1], normalize=True))


def test_kitaev_noisy_runs_are_seeded():
    a = run_kitaev_qft(KITAEV_QFT_INPUTS[2], NoiseParams(), shots=50, seed=3)
    b = run_kitaev_qft(KITAEV_QFT_INPUTS[2], NoiseParams(), shots=50, seed=3, workers=2)
    assert np.array_equal(a.counts, b.counts)
    assert a.counts.sum() == 50 and a.noisy


# ------------------------------------------------------------ coherent QFT


@pytest.mark.parametrize("spec", COHERENT_QFT_INPUTS, ids=lambda s: s.label)
def test_coherent_qft_noiseless_is_exact(spec):
    r = run_coherent_qft(spec)
    assert r.sso == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(r.ideal.probabilities, np.abs(qft_unitary(3) @ spec.state().amplitudes) ** 2)


def test_coherent_qft_noisy_is_below_one():
    r = run_coherent_qft(COHERENT_QFT_INPUTS[-1], NoiseParams(), trajectories=20, seed=0)
    assert 0.5 < r.sso < 1.0


# ------------------------------------------------------------ suite


def test_benchmark_config_and_suite(tmp_path):
    cfg = BenchmarkConfig.from_kv({"kitaev_qft": "zero", "order_finding": "pi2:0", "shots": "500"})
    assert cfg.shots == 500 and cfg.kitaev_qft == ("zero",)
    reports = benchmark_suite(cfg)
    assert [r.algorithm for r in reports] == ["kitaev_qft", "order_finding"]
    assert all(r.sso > 0.98 for r in reports)
    paths = write_reports(reports, tmp_path / "json")
    d = json.loads(paths[0].read_text())
    assert d["algorithm"] == "kitaev_qft" and sum(d["counts"]) == 500
    assert (tmp_path / "json" / "summary.txt").exists()
    csv_paths = write_reports(reports, tmp_path / "csv", "csv")
    assert csv_paths[1].read_text().startswith("outcome,ideal,measured\n0,0.5,")
    with pytest.raises(ValueError):
        write_reports(reports, tmp_path / "x", "xml")
    with pytest.raises(ValueError):
        BenchmarkConfig.from_kv({"bogus": "1"})
    with pytest.raises(ValueError):
        benchmark_suite({"kitaev_qft": "period9"})


def test_suite_all_selects_every_run():
    cfg = BenchmarkConfig(order_finding=("all",), shots=100)
    reports = benchmark_suite(cfg)
    assert [r.label for r in reports] == [f"{p}(|{y}>)" for p, y, *_ in ORDER_FINDING_RUNS]
    assert reports[0].to_text().startswith("order_finding")
