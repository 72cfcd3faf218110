from math import pi

import numpy as np
import pytest

from softu.circuits import Circuit, circuit_unitary, expectation_z, run_circuit, rx, zero_state
from softu.encoding import (
    EncodingSpec,
    angle_encode_features,
    encoding_diagonal,
    encoding_gates,
    exponential_rz_block,
    qubit_angles,
)
from softu.linalg import unitarity_deviation


def block_unitary(gates, n):
    return circuit_unitary(Circuit(n, tuple(gates), 0), [])


def test_exponential_block_zero_feature_is_identity():
    spec = EncodingSpec(n_qubits=3)
    u = block_unitary(exponential_rz_block(0.0, spec), 3)
    assert np.allclose(u, np.eye(8))


def test_exponential_block_angles():
    spec = EncodingSpec(n_qubits=3, base=2.0)
    gates = exponential_rz_block(0.5, spec)
    assert [g.fixed_angle for g in gates] == [0.5, 1.0, 2.0]
    assert [g.targets[0] for g in gates] == [0, 1, 2]
    assert all(g.param_slot is None for g in gates)


def test_exponential_block_diagonal_unitary():
    spec = EncodingSpec(n_qubits=5, base=2.0)
    u = block_unitary(exponential_rz_block(pi, spec), 5)
    off_diag = u - np.diag(np.diagonal(u))
    assert np.max(np.abs(off_diag)) < 1e-12
    assert np.max(np.abs(np.abs(np.diagonal(u)) - 1.0)) < 1e-12
    assert unitarity_deviation(u) <= 1e-12


def test_encoding_diagonal_matches_gate_block():
    rng = np.random.default_rng(2)
    for n in (1, 2, 3):
        spec = EncodingSpec(n_qubits=n, base=2.0)
        for _ in range(5):
            x = float(rng.uniform(-3, 3))
            u = block_unitary(exponential_rz_block(x, spec), n)
            assert np.max(np.abs(np.diagonal(u) - encoding_diagonal(spec, x))) < 1e-12


def test_encoding_blocks_parameter_free():
    spec = EncodingSpec(n_qubits=4)
    assert all(g.param_slot is None for g in exponential_rz_block(1.3, spec))
    assert all(g.param_slot is None for g in angle_encode_features([1, 2, 3, 4]))


def test_block_periodicity_up_to_phase():
    # with base 2: shifting x by 4pi reproduces the block exactly; shifting by
    # 2pi flips only a global sign, so downstream probabilities match
    spec = EncodingSpec(n_qubits=3, base=2.0)
    for x in (0.3, 1.7):
        u1 = block_unitary(exponential_rz_block(x, spec), 3)
        u2 = block_unitary(exponential_rz_block(x + 4 * pi, spec), 3)
        assert np.max(np.abs(u1 - u2)) < 1e-10
        u3 = block_unitary(exponential_rz_block(x + 2 * pi, spec), 3)
        assert np.max(np.abs(u1 + u3)) < 1e-10  # global -1


def test_downstream_probabilities_periodic():
    spec = EncodingSpec(n_qubits=2, base=2.0)
    probe = Circuit(2, tuple([rx(0, slot=0), rx(1, slot=1)]), 2)
    params = [0.9, 2.1]
    for x in (0.25, 1.0):
        outs = []
        for shift in (0.0, 2 * pi):
            state = zero_state(2)
            state = run_circuit(probe, params, state)
            for g in exponential_rz_block(x + shift, spec):
                state = run_circuit(Circuit(2, (g,), 0), [], state)
            outs.append(np.abs(state) ** 2)
        assert np.max(np.abs(outs[0] - outs[1])) < 1e-12


def test_angle_encode_structure():
    gates = angle_encode_features([0.1, 0.2, 0.3, 0.4], n_qubits=3)
    assert [g.targets[0] for g in gates] == [0, 1, 2, 0]
    assert [g.fixed_angle for g in gates] == pytest.approx([0.1, 0.2, 0.3, 0.4])


def test_angle_encode_zero_features_identity():
    u = block_unitary(angle_encode_features([0.0] * 4), 3)
    assert np.allclose(u, np.eye(8))


def test_angle_encode_rz_additivity():
    # qubit 0 receives features 0 and 3; the block equals RZ(f0+f3) there
    feats = [0.7, 0.0, 0.0, 1.1]
    u = block_unitary(angle_encode_features(feats), 3)
    from softu.circuits import rz

    expect = block_unitary([rz(0, angle=feats[0] + feats[3])], 3)
    assert np.max(np.abs(u - expect)) < 1e-12


def test_angle_encode_diagonal_unitary():
    rng = np.random.default_rng(5)
    feats = rng.uniform(-2, 2, 4)
    u = block_unitary(angle_encode_features(feats), 3)
    assert np.max(np.abs(u - np.diag(np.diagonal(u)))) < 1e-12
    assert unitarity_deviation(u) <= 1e-12
    spec = EncodingSpec(n_qubits=3, feature_map=(0, 1, 2, 0))
    assert np.max(np.abs(np.diagonal(u) - encoding_diagonal(spec, feats))) < 1e-12


def test_angle_encode_rejects_non_finite():
    with pytest.raises(ValueError):
        angle_encode_features([0.0, np.inf, 0.0, 0.0])


def test_spec_validation():
    with pytest.raises(ValueError):
        EncodingSpec(n_qubits=3, base=1.0)
    with pytest.raises(ValueError):
        EncodingSpec(n_qubits=2, feature_map=(0, 1, 2, 0))


def test_feature_map_qubit_angles():
    spec = EncodingSpec(n_qubits=3, feature_map=(0, 1, 2, 0))
    angles = qubit_angles(spec, [1.0, 2.0, 3.0, 4.0])
    assert np.allclose(angles, [5.0, 2.0, 3.0])
    gates = encoding_gates(spec, [1.0, 2.0, 3.0, 4.0])
    assert [g.targets[0] for g in gates] == [0, 1, 2, 0]
