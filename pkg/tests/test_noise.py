import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tiqc.channels import execute_density
from tiqc.compiler import load
from tiqc.characterization import detection_error
from tiqc.core import PureState, partial_trace, state_fidelity
from tiqc.gates import (
    MS,
    Collective,
    ConditionalZRot,
    CrosstalkMatrix,
    Hide,
    Idle,
    Measure,
    PulseSequence,
    Unhide,
    ZRot,
)
from tiqc.noise import (
    BUDGET_SOURCES,
    SOURCES,
    NoiseParams,
    OUDephasing,
    SimResult,
    error_budget,
    ou_sigma,
    run_trajectory,
    sample_decay,
    sample_dephasing_phase,
    simulate,
)

RAMSEY = PulseSequence(1, [Collective(0.0, math.pi / 2), Idle(5e-3), Collective(0.0, -math.pi / 2)])


def _phase_variance(sigma, tc, T):
    x = T / tc
    return 2 * sigma**2 * tc**2 * (x - 1 + math.exp(-x))


# ------------------------------------------------------------ parameters


def test_params_kv_roundtrip(tmp_path):
    p = NoiseParams(tau_coh=10e-3, crosstalk=CrosstalkMatrix.neighbor(3, 0.05),
                    op_durations={"MS": 200e-6}, sources={"dephasing", "decay"})
    again = NoiseParams.from_kv(p.to_kv())
    assert again.tau_coh == p.tau_coh
    assert np.array_equal(again.crosstalk.epsilon, p.crosstalk.epsilon)
    assert again.op_durations == p.op_durations
    assert again.sources == p.sources
    path = tmp_path / "noise.cfg"
    p.save(path)
    assert NoiseParams.load(path).to_kv() == p.to_kv()
    assert NoiseParams.from_kv(NoiseParams.noiseless().to_kv()).sources == frozenset()


@pytest.mark.parametrize("kw", [
    {"tau_coh": 0.0}, {"intensity_rel_fluct": -1.0}, {"pump_fidelity": 1.5},
    {"crosstalk_neighbor": 2.0}, {"sources": {"gremlins"}}, {"op_durations": {"MS": -1.0}},
])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        NoiseParams(**kw)


def test_params_unknown_key():
    with pytest.raises(ValueError):
        NoiseParams.from_kv("warp_factor = 9\n")


def test_durations_and_crosstalk_defaults():
    p = NoiseParams()
    assert p.duration(MS(0, 1)) == pytest.approx(105e-6)
    assert p.duration(Measure(0, 0)) == pytest.approx(150e-6)
    assert p.duration(Idle(2e-3)) == pytest.approx(2e-3)
    assert p.crosstalk_for(3).epsilon[0, 1] == pytest.approx(0.03)
    with pytest.raises(ValueError):
        NoiseParams(crosstalk=CrosstalkMatrix.identity(2)).crosstalk_for(3)


# ------------------------------------------------------------ OU process


def test_ou_sigma_calibration_formula():
    s = ou_sigma(15e-3, 333e-6)
    assert _phase_variance(s, 333e-6, 15e-3) == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("T,tc", [(20e-6, 333e-6), (333e-6, 333e-6), (20e-3, 333e-6)])
def test_ou_phase_variance_regimes(T, tc):
    """Short (quasi-static), comparable and long (white) correlation regimes."""
    sigma = 3000.0
    rng = np.random.default_rng(0)
    n = 20000
    phases = np.array([OUDephasing(sigma, tc, rng).advance(T) for _ in range(n)])
    var = _phase_variance(sigma, tc, T)
    assert phases.mean() == pytest.approx(0.0, abs=5 * math.sqrt(var / n))
    # sample variance has relative std sqrt(2 / n)
    assert phases.var() == pytest.approx(var, rel=5 * math.sqrt(2 / n))


def test_ou_splitting_is_exact():
    """Summing phases over many small steps has the same law as one step."""
    sigma, tc, T = 3000.0, 333e-6, 1e-3
    rng = np.random.default_rng(1)
    n = 20000
    tot = []
    for _ in range(n):
        ou = OUDephasing(sigma, tc, rng)
        tot.append(sum(ou.advance(T / 7) for _ in range(7)))
    var = _phase_variance(sigma, tc, T)
    assert np.var(tot) == pytest.approx(var, rel=5 * math.sqrt(2 / n))


def test_ou_stationary_detuning():
    rng = np.random.default_rng(2)
    ou = OUDephasing(100.0, 1e-3, rng)
    ds = []
    for _ in range(20000):
        ou.advance(5e-3)
        ds.append(ou.delta)
    assert np.std(ds) == pytest.approx(100.0, rel=0.05)
    assert OUDephasing(1.0, 1.0, rng).advance(0.0) == 0.0


def test_sample_helpers():
    rng = np.random.default_rng(3)
    assert sample_dephasing_phase(NoiseParams(), 0.0, rng) == 0.0
    phases = [sample_dephasing_phase(NoiseParams(), 15e-3, rng) for _ in range(4000)]
    assert np.var(phases) == pytest.approx(2.0, rel=0.15)
    p = NoiseParams(tau1=1.0)
    ones = sum(abs(sample_decay(PureState.basis("0"), p, 0.5, rng).amplitudes[1]) ** 2 for _ in range(4000))
    assert ones / 4000 == pytest.approx(1 - math.exp(-0.5), abs=5 * math.sqrt(0.25 / 4000))


# ------------------------------------------------------------ simulation


@pytest.mark.parametrize("name", ["ghz_budget", "qft3", "cperm2"])
def test_noiseless_simulation_equals_exact(name):
    seq = load(name)
    res = simulate(seq, NoiseParams.noiseless(), 3, seed=0)
    exact = execute_density(seq).density
    assert state_fidelity(exact, res.density) == pytest.approx(1.0, abs=1e-10)


def test_simulation_deterministic_across_workers():
    seq = load("ghz_budget")
    p = NoiseParams()
    a = simulate(seq, p, 12, seed=9, workers=1)
    b = simulate(seq, p, 12, seed=9, workers=3)
    assert np.array_equal(a.density.matrix, b.density.matrix)
    assert a.classical_bits == b.classical_bits
    c = simulate(seq, p, 12, seed=10, workers=1)
    assert not np.array_equal(a.density.matrix, c.density.matrix)


def test_trajectory_depends_only_on_seed_and_index():
    seq = load("ghz_budget")
    p = NoiseParams()
    res = simulate(seq, p, 5, seed=4, keep_states=True)
    t3 = run_trajectory(seq, p, 3, 4)
    assert np.array_equal(res.states[3], t3.state.amplitudes)


def test_ramsey_contrast_with_dephasing():
    p = NoiseParams(op_durations={"Collective": 0.0}).with_sources(["dephasing"])
    res = simulate(RAMSEY, p, 3000, seed=2)
    s = ou_sigma(p.tau_coh, p.tau_corr)
    expect = math.exp(-_phase_variance(s, p.tau_corr, 5e-3) / 2)
    # the closing pulse maps the surviving coherence onto the population
    assert 2 * res.density.matrix[0, 0].real - 1 == pytest.approx(expect, abs=0.04)


def test_hidden_qubits_are_protected_from_dephasing():
    ops = [Collective(0.0, math.pi / 2), Hide(1), Idle(20e-3), Unhide(1)]
    p = NoiseParams(op_durations={"Collective": 0.0, "Hide": 0.0, "Unhide": 0.0}).with_sources(["dephasing"])
    rho = simulate(PulseSequence(2, ops), p, 400, seed=1).density
    r0 = partial_trace(rho, [0]).matrix
    r1 = partial_trace(rho, [1]).matrix
    assert 2 * abs(r1[0, 1]) == pytest.approx(1.0, abs=1e-12)
    assert 2 * abs(r0[0, 1]) < 0.5


def test_decay_source_population_and_hiding_does_not_protect():
    seq = PulseSequence(2, [Hide(1), Idle(0.5), Unhide(1)])
    p = NoiseParams(tau1=1.0, op_durations={"Hide": 0.0, "Unhide": 0.0}).with_sources(["decay"])
    res = simulate(seq, p, 4000, seed=0)
    pops = np.real(np.diag(res.density.matrix))
    # each ion stays in D (bit 0) with probability exp(-0.5)
    p_stay = math.exp(-0.5)
    assert pops[0] == pytest.approx(p_stay**2, abs=5 * math.sqrt(p_stay**2 / 4000))


def test_prep_errors():
    seq = PulseSequence(1, [Idle(0.0)])
    p = NoiseParams(pump_fidelity=0.9).with_sources(["prep"])
    res = simulate(seq, p, 5000, seed=3)
    assert res.density.matrix[1, 1].real == pytest.approx(0.1, abs=5 * math.sqrt(0.09 / 5000))


def test_intensity_noise_scales_rotation_angle():
    seq = PulseSequence(1, [Collective(0.0, math.pi / 2)])
    p = NoiseParams(intensity_rel_fluct=0.2, op_durations={"Collective": 0.0}).with_sources(["intensity"])
    res = simulate(seq, p, 4000, seed=5)
    # P(1) = sin^2(pi/4 (1 + eps)), E = 1/2 - 1/2 E[cos(pi/2 (1+eps))] = 1/2 + 1/2 E[sin(pi eps/2)] = 1/2
    assert res.density.matrix[1, 1].real == pytest.approx(0.5, abs=0.02)
    # the coherence shrinks by E[cos(pi eps / 2)] = exp(-(pi 0.2 / 2)^2 / 2)
    assert abs(res.density.matrix[0, 1]) == pytest.approx(0.5 * math.exp(-((math.pi * 0.1) ** 2) / 2), abs=0.02)


def test_crosstalk_rotates_neighbours():
    seq = PulseSequence(3, [Collective(0.0, math.pi / 2), ZRot(1, math.pi)])
    p = NoiseParams(crosstalk_neighbor=0.1, op_durations={"Collective": 0.0, "ZRot": 0.0}).with_sources(
        ["crosstalk"])
    t = run_trajectory(seq, p, 0, 0)
    ideal = execute_density(seq).density
    assert state_fidelity(ideal, t.state) == pytest.approx(math.cos(0.1 * math.pi / 2) ** 4, abs=1e-12)


def test_detection_misreads_use_in_sequence_window():
    seq = PulseSequence(1, [Measure(0, 0)])
    p = NoiseParams(detect_bright_rate=5e3, detect_dark_rate=1e3).with_sources(["detection"])
    res = simulate(seq, p, 3000, seed=0, strict_measure=True)
    misread = sum(b[0] for b in res.classical_bits) / 3000
    err = detection_error(p, 150e-6)
    assert misread == pytest.approx(err.p_dark_as_bright, abs=5 * math.sqrt(0.25 / 3000) + 0.01)


def test_feedforward_in_trajectories():
    seq = PulseSequence(2, [Collective(0.0, math.pi / 2), Hide(1), Measure(0, 0), Unhide(1),
                            ConditionalZRot(1, math.pi, 0), Hide(0), Collective(0.0, math.pi), Unhide(0)])
    res = simulate(seq, NoiseParams.noiseless(), 200, seed=0)
    exact = execute_density(seq).density
    assert state_fidelity(exact, res.density) > 0.999
    counts = res.cbit_counts()
    assert set(counts) <= {(0,), (1,)} and sum(counts.values()) == 200


def test_simresult_serialization():
    res = simulate(load("cperm2"), NoiseParams(), 4, seed=1)
    again = SimResult.from_dict(json.loads(res.to_json()))
    assert np.array_equal(again.density.matrix, res.density.matrix)
    csv_text = res.to_csv()
    assert csv_text.startswith("# name=cperm2")
    assert len(csv_text.strip().splitlines()) == 2 + 64


def test_simulate_argument_checks():
    with pytest.raises(ValueError):
        simulate(RAMSEY, NoiseParams(), 0)
    big = PulseSequence(11, [Idle(0.0)])
    with pytest.raises(ValueError):
        run_trajectory(big, NoiseParams(), 0, 0)


@given(st.sets(st.sampled_from(SOURCES)))
def test_with_sources(sources):
    p = NoiseParams().with_sources(sources)
    assert all(p.enabled(s) == (s in sources) for s in SOURCES)


def test_error_budget_structure():
    table = error_budget(load("ghz_budget"), NoiseParams(), n_traj=4, seed=0)
    assert list(table.fidelities) == ["all", *BUDGET_SOURCES]
    assert all(0 <= f <= 1 for f in table.fidelities.values())
    assert table.minimum_source() in BUDGET_SOURCES
    assert "dephasing" in table.to_text()
    assert table.to_dict()["reference"]["all"] == pytest.approx(0.77)
    with pytest.raises(ValueError):
        error_budget(load("ghz_budget"), NoiseParams(), sources=[])
