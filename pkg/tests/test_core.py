import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import random_state, random_unitary
from tiqc.core import (
    DensityMatrix,
    ProbDist,
    PureState,
    apply_unitary,
    bits_to_index,
    check_unitary,
    choi_state,
    index_to_bits,
    measure_probabilities,
    partial_trace,
    process_fidelity,
    sample_outcomes,
    state_fidelity,
    tensor,
    tensor_all,
)


def test_basis_packing_ion1_is_msb():
    s = PureState.basis("100")
    assert np.argmax(np.abs(s.amplitudes)) == 4
    assert bits_to_index([0, 1, 1]) == 3
    assert index_to_bits(6, 3) == (1, 1, 0)


@given(st.integers(1, 8).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, (1 << n) - 1))))
def test_bits_index_roundtrip(case):
    n, k = case
    assert bits_to_index(index_to_bits(k, n)) == k


def test_pure_state_validation():
    with pytest.raises(ValueError):
        PureState(1, np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        PureState(2, np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        PureState.from_vector(np.ones(3))
    s = PureState.from_vector([1, 1j], normalize=True)
    assert s.n_qubits == 1
    with pytest.raises(ValueError):
        s.amplitudes[0] = 0


def test_density_validation():
    with pytest.raises(ValueError):
        DensityMatrix(1, np.array([[1, 1], [0, 0]]))  # not Hermitian
    with pytest.raises(ValueError):
        DensityMatrix(1, np.eye(2))  # trace 2
    with pytest.raises(ValueError):
        DensityMatrix(1, np.diag([1.5, -0.5]))  # negative eigenvalue
    assert DensityMatrix.maximally_mixed(2).purity() == pytest.approx(0.25)


def test_probdist_and_sampling():
    with pytest.raises(ValueError):
        ProbDist([0.5, 0.6])
    d = ProbDist.from_counts([1, 3])
    assert d.probabilities.tolist() == [0.25, 0.75]
    c1 = sample_outcomes(d, 1000, 5)
    c2 = sample_outcomes(d, 1000, 5)
    assert c1.sum() == 1000 and np.array_equal(c1, c2)
    with pytest.raises(ValueError):
        sample_outcomes(d, 0, 1)


def test_check_unitary():
    assert check_unitary(np.eye(4)).shape == (4, 4)
    with pytest.raises(ValueError):
        check_unitary(np.ones((2, 2)))
    with pytest.raises(ValueError):
        check_unitary(np.eye(3))


@given(st.integers(0, 2**31 - 1), st.integers(1, 3), st.integers(1, 3))
def test_tensor_is_kron_and_preserves_type(seed, na, nb):
    rng = np.random.default_rng(seed)
    a = PureState.from_vector(random_state(rng, na))
    b = PureState.from_vector(random_state(rng, nb))
    ab = tensor(a, b)
    assert isinstance(ab, PureState) and ab.n_qubits == na + nb
    assert np.allclose(ab.amplitudes, np.kron(a.amplitudes, b.amplitudes))
    rho = tensor(a.density(), b.density())
    assert isinstance(rho, DensityMatrix)
    assert np.allclose(rho.matrix, ab.density().matrix)


def test_tensor_all_and_size_limit():
    z = tensor_all([PureState.zero(1)] * 4)
    assert z.n_qubits == 4
    with pytest.raises(ValueError):
        tensor(PureState.zero(7), PureState.zero(6))


@given(st.integers(0, 2**31 - 1), st.integers(1, 3))
def test_unitary_action_pure_vs_density(seed, n):
    rng = np.random.default_rng(seed)
    s = PureState.from_vector(random_state(rng, n))
    u = random_unitary(rng, 1 << n)
    a = apply_unitary(s, u)
    b = apply_unitary(s.density(), u)
    assert np.allclose(a.density().matrix, b.matrix, atol=1e-12)
    assert np.allclose(measure_probabilities(a).probabilities, measure_probabilities(b).probabilities)


@given(st.integers(0, 2**31 - 1), st.integers(1, 3))
def test_fidelity_properties(seed, n):
    rng = np.random.default_rng(seed)
    a = PureState.from_vector(random_state(rng, n))
    b = PureState.from_vector(random_state(rng, n))
    f = state_fidelity(a, b)
    assert 0.0 <= f <= 1.0
    assert f == pytest.approx(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2, abs=1e-12)
    assert state_fidelity(a, a) == pytest.approx(1.0)
    # global phase invariance
    c = PureState(n, np.exp(0.7j) * b.amplitudes)
    assert state_fidelity(a, c) == pytest.approx(f, abs=1e-12)


def test_mixed_state_fidelity_uhlmann():
    # commuting diagonal states: F = (sum sqrt(p q))^2
    p, q = np.array([0.7, 0.3]), np.array([0.4, 0.6])
    a = DensityMatrix(1, np.diag(p))
    b = DensityMatrix(1, np.diag(q))
    assert state_fidelity(a, b) == pytest.approx(np.sum(np.sqrt(p * q)) ** 2, abs=1e-12)


@given(st.integers(0, 2**31 - 1))
def test_process_fidelity_of_unitaries(seed):
    rng = np.random.default_rng(seed)
    u = random_unitary(rng, 4)
    v = random_unitary(rng, 4)
    expect = abs(np.trace(u.conj().T @ v)) ** 2 / 16
    assert process_fidelity(u, v) == pytest.approx(expect, abs=1e-9)
    assert process_fidelity(u, np.exp(0.3j) * u) == pytest.approx(1.0, abs=1e-9)


def test_choi_trace_and_rejects_nontp():
    c = choi_state([np.eye(2)])
    assert np.trace(c).real == pytest.approx(1.0)
    with pytest.raises(ValueError):
        choi_state([2 * np.eye(2)])


def test_partial_trace_product_and_bell():
    a = PureState.basis("1")
    b = PureState.from_vector([1, 1], normalize=True)
    red = partial_trace(tensor(a, b), [1])
    assert np.allclose(red.matrix, b.density().matrix)
    bell = PureState.from_vector([1, 0, 0, 1], normalize=True)
    red = partial_trace(bell, [0])
    assert np.allclose(red.matrix, np.eye(2) / 2)
    with pytest.raises(ValueError):
        partial_trace(bell, [2])


@given(st.integers(0, 2**31 - 1))
def test_partial_trace_matches_einsum(seed):
    rng = np.random.default_rng(seed)
    psi = random_state(rng, 3)
    t = psi.reshape(2, 2, 2)
    expect = np.einsum("abc,dbc->ad", t, t.conj())  # keep qubit 0
    got = partial_trace(PureState(3, psi), [0]).matrix
    assert np.allclose(got, expect, atol=1e-12)
    expect02 = np.einsum("abc,dbe->acde", t, t.conj()).reshape(4, 4)
    assert np.allclose(partial_trace(PureState(3, psi), [0, 2]).matrix, expect02, atol=1e-12)


def test_sample_outcomes_statistics():
    d = ProbDist([0.1, 0.2, 0.3, 0.4])
    counts = sample_outcomes(d, 100000, 0)
    sigma = np.sqrt(100000 * d.probabilities * (1 - d.probabilities))
    assert np.all(np.abs(counts - 100000 * d.probabilities) < 5 * sigma)
    assert math.isclose(counts.sum(), 100000)
