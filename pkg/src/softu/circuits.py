"""Few-qubit statevector simulator with an explicit gate list.

Conventions, fixed so test vectors are portable:
  - Qubit 0 is the most significant bit of the state index, so the basis
    state |q0 q1 ... q_{n-1}> sits at index int("q0q1...q_{n-1}", 2).
  - RX(t) = exp(-i t X / 2), RY and RZ analogous.
  - CNOT targets are ordered (control, target).

Single- and two-qubit gates act by bit-indexed amplitude updates, O(2^n)
work per gate; building the dense 2^n x 2^n matrix is the separate
`circuit_unitary` path. The appliers accept either a state vector (2^n,) or
a matrix (2^n, k) whose columns are all evolved at once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import cos, pi, sin

import numpy as np

from .linalg import matrix_from_dict, matrix_to_dict, unitarity_deviation

MAX_QUBITS = 12

ROTATION_KINDS = ("RX", "RY", "RZ")
GATE_KINDS = ROTATION_KINDS + ("H", "CNOT", "FixedUnitary")

_H_MATRIX = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class Gate:
    """One gate application: a kind, target qubits, and its angle source.

    Rotations carry exactly one of `param_slot` (index into the circuit's
    parameter table) or `fixed_angle` (radians). `matrix` is only for
    FixedUnitary gates, which act on the full register.
    """

    kind: str
    targets: tuple[int, ...]
    param_slot: int | None = None
    fixed_angle: float | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.matrix is not None:
            object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=complex))
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"duplicate target qubits in {self.targets}")
        if any(t < 0 for t in self.targets):
            raise ValueError("negative qubit index")
        if self.kind in ROTATION_KINDS:
            if len(self.targets) != 1:
                raise ValueError(f"{self.kind} takes one target qubit")
            if (self.param_slot is None) == (self.fixed_angle is None):
                raise ValueError(f"{self.kind} needs exactly one of param_slot / fixed_angle")
            if self.matrix is not None:
                raise ValueError("rotation gates carry no matrix")
        else:
            if self.param_slot is not None or self.fixed_angle is not None:
                raise ValueError(f"{self.kind} takes no angle")
        if self.kind == "H" and len(self.targets) != 1:
            raise ValueError("H takes one target qubit")
        if self.kind == "CNOT" and len(self.targets) != 2:
            raise ValueError("CNOT takes (control, target)")
        if self.kind == "FixedUnitary":
            if self.matrix is None:
                raise ValueError("FixedUnitary needs a matrix")
            dim = 2 ** len(self.targets)
            if self.matrix.shape != (dim, dim):
                raise ValueError(f"FixedUnitary matrix shape {self.matrix.shape} != ({dim}, {dim})")
            dev = unitarity_deviation(self.matrix)
            if dev > 1e-10:
                raise ValueError(f"FixedUnitary matrix deviates from unitarity by {dev:.3e}")
        elif self.matrix is not None:
            raise ValueError(f"{self.kind} carries no matrix")


def rx(qubit: int, slot: int | None = None, angle: float | None = None) -> Gate:
    return Gate("RX", (qubit,), param_slot=slot, fixed_angle=angle)


def ry(qubit: int, slot: int | None = None, angle: float | None = None) -> Gate:
    return Gate("RY", (qubit,), param_slot=slot, fixed_angle=angle)


def rz(qubit: int, slot: int | None = None, angle: float | None = None) -> Gate:
    return Gate("RZ", (qubit,), param_slot=slot, fixed_angle=angle)


def h(qubit: int) -> Gate:
    return Gate("H", (qubit,))


def cnot(control: int, target: int) -> Gate:
    return Gate("CNOT", (control, target))


def fixed_unitary(matrix: np.ndarray, n_qubits: int) -> Gate:
    return Gate("FixedUnitary", tuple(range(n_qubits)), matrix=np.asarray(matrix, dtype=complex))


@dataclass(frozen=True, eq=False)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...]
    n_params: int

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}")
        if self.n_params < 0:
            raise ValueError("n_params must be >= 0")
        object.__setattr__(self, "gates", tuple(self.gates))
        seen = set()
        for g in self.gates:
            if any(t >= self.n_qubits for t in g.targets):
                raise ValueError(f"gate {g.kind} targets {g.targets} out of range for n={self.n_qubits}")
            if g.kind == "FixedUnitary" and g.targets != tuple(range(self.n_qubits)):
                raise ValueError("FixedUnitary must target the full register in order")
            if g.param_slot is not None:
                if g.param_slot >= self.n_params:
                    raise ValueError(f"param slot {g.param_slot} >= n_params {self.n_params}")
                seen.add(g.param_slot)
        missing = set(range(self.n_params)) - seen
        if missing:
            raise ValueError(f"parameter slots never referenced by any gate: {sorted(missing)}")


def zero_state(n_qubits: int) -> np.ndarray:
    """|0...0> for an n-qubit register."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    state = np.zeros(2**n_qubits, dtype=complex)
    state[0] = 1.0
    return state


def n_qubits_of(state: np.ndarray) -> int:
    n = int(np.log2(state.shape[0]) + 0.5)
    if 2**n != state.shape[0]:
        raise ValueError(f"state length {state.shape[0]} is not a power of two")
    return n


def _rotation_matrix(kind: str, theta: float) -> np.ndarray:
    c, s = cos(theta / 2.0), sin(theta / 2.0)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    return np.array([[np.exp(-0.5j * theta), 0.0], [0.0, np.exp(0.5j * theta)]])


def gate_matrix(gate: Gate, params=()) -> np.ndarray:
    """Local matrix of a gate: 2x2 for rotations/H, 4x4 for CNOT."""
    if gate.kind in ROTATION_KINDS:
        return _rotation_matrix(gate.kind, _angle_of(gate, params))
    if gate.kind == "H":
        return _H_MATRIX.copy()
    if gate.kind == "CNOT":
        return np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
        )
    return gate.matrix.copy()


def _angle_of(gate: Gate, params) -> float:
    if gate.param_slot is not None:
        if gate.param_slot >= len(params):
            raise ValueError(f"missing parameter for slot {gate.param_slot}")
        return float(params[gate.param_slot])
    return float(gate.fixed_angle)


def _apply_1q(arr: np.ndarray, mat: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Apply a 2x2 matrix to `qubit` of every column of `arr` (first axis 2^n)."""
    shape = arr.shape
    block = arr.reshape(2**qubit, 2, -1)
    a, b = block[:, 0, :], block[:, 1, :]
    out = np.empty_like(block)
    out[:, 0, :] = mat[0, 0] * a + mat[0, 1] * b
    out[:, 1, :] = mat[1, 0] * a + mat[1, 1] * b
    return out.reshape(shape)


def _apply_cnot(arr: np.ndarray, control: int, target: int, n: int) -> np.ndarray:
    shape = arr.shape
    ext = arr.reshape([2] * n + [-1])
    i10 = [slice(None)] * (n + 1)
    i11 = [slice(None)] * (n + 1)
    i10[control], i10[target] = 1, 0
    i11[control], i11[target] = 1, 1
    out = ext.copy()
    out[tuple(i10)] = ext[tuple(i11)]
    out[tuple(i11)] = ext[tuple(i10)]
    return out.reshape(shape)


def _apply_any(arr: np.ndarray, gate: Gate, params, n: int) -> np.ndarray:
    if gate.kind in ROTATION_KINDS:
        return _apply_1q(arr, _rotation_matrix(gate.kind, _angle_of(gate, params)), gate.targets[0], n)
    if gate.kind == "H":
        return _apply_1q(arr, _H_MATRIX, gate.targets[0], n)
    if gate.kind == "CNOT":
        return _apply_cnot(arr, gate.targets[0], gate.targets[1], n)
    return gate.matrix @ arr


def apply_gate(state: np.ndarray, gate: Gate, params=()) -> np.ndarray:
    """Apply one gate to a state vector, returning a new vector."""
    n = n_qubits_of(state)
    if any(t >= n for t in gate.targets):
        raise ValueError(f"gate targets {gate.targets} invalid for {n} qubits")
    return _apply_any(state, gate, params, n)


def run_circuit(circuit: Circuit, params=(), state: np.ndarray | None = None) -> np.ndarray:
    """Fold the circuit's gates over the input state (default |0...0>)."""
    if len(params) != circuit.n_params:
        raise ValueError(f"expected {circuit.n_params} parameters, got {len(params)}")
    if state is None:
        state = zero_state(circuit.n_qubits)
    elif state.shape[0] != 2**circuit.n_qubits:
        raise ValueError("state dimension does not match circuit")
    out = state
    for gate in circuit.gates:
        out = _apply_any(out, gate, params, circuit.n_qubits)
    return out


def circuit_unitary(circuit: Circuit, params=()) -> np.ndarray:
    """Dense matrix of the whole circuit; column k is the image of basis state k."""
    if len(params) != circuit.n_params:
        raise ValueError(f"expected {circuit.n_params} parameters, got {len(params)}")
    u = np.eye(2**circuit.n_qubits, dtype=complex)
    for gate in circuit.gates:
        u = _apply_any(u, gate, params, circuit.n_qubits)
    return u


def z_signs(n_qubits: int, qubit: int) -> np.ndarray:
    """Diagonal of Z on `qubit`: +1 where the qubit's bit is 0, -1 where it is 1."""
    if not 0 <= qubit < n_qubits:
        raise ValueError(f"qubit {qubit} out of range for n={n_qubits}")
    bits = (np.arange(2**n_qubits) >> (n_qubits - 1 - qubit)) & 1
    return 1.0 - 2.0 * bits


def expectation_z(state: np.ndarray, qubit: int) -> float:
    """<Z> on one qubit: signed sum of amplitude probabilities, in [-1, 1]."""
    n = n_qubits_of(state)
    return float(np.sum(z_signs(n, qubit) * np.abs(state) ** 2))


def basic_entangling_layer(n_qubits: int, param_slots) -> list[Gate]:
    """One trainable RX per qubit, then the CNOT ring (0->1),...,(n-1->0).

    A single qubit gets just the rotation (no ring).
    """
    slots = list(param_slots)
    if len(slots) != n_qubits:
        raise ValueError(f"need {n_qubits} param slots, got {len(slots)}")
    gates = [rx(q, slot=slots[q]) for q in range(n_qubits)]
    if n_qubits > 1:
        gates.extend(cnot(q, (q + 1) % n_qubits) for q in range(n_qubits))
    return gates


def entangling_stack(n_qubits: int, layers: int, axes: tuple[str, ...] = ("RX",)) -> Circuit:
    """`layers` entangling layers with one fresh slot per rotation.

    Each layer is one rotation per qubit followed by the CNOT ring; layer L
    rotates about axes[L % len(axes)]. The default is the plain RX layer.
    Conjugating X-rotations through CNOTs only ever produces X-type Pauli
    strings, which all commute, so an RX-only stack spans just an abelian
    torus no matter how deep it is; alternating the axis (e.g. RX, RZ)
    makes the stack universal.
    """
    if layers < 1:
        raise ValueError("layers must be >= 1")
    if any(a not in ROTATION_KINDS for a in axes):
        raise ValueError(f"axes must be rotation kinds, got {axes}")
    gates: list[Gate] = []
    slot = 0
    for layer in range(layers):
        kind = axes[layer % len(axes)]
        for q in range(n_qubits):
            gates.append(Gate(kind, (q,), param_slot=slot))
            slot += 1
        if n_qubits > 1:
            gates.extend(cnot(q, (q + 1) % n_qubits) for q in range(n_qubits))
    return Circuit(n_qubits, tuple(gates), slot)


def _conjugate_through(obs: np.ndarray, gate: Gate, params, n: int) -> np.ndarray:
    """Return G^dag obs G for one gate, via the bit-indexed appliers."""
    if gate.kind == "CNOT":
        c, t = gate.targets
        right = _apply_cnot(obs.T, c, t, n).T  # obs @ C  (CNOT is symmetric)
        return _apply_cnot(right, c, t, n)  # C @ (obs C), CNOT self-inverse
    if gate.kind == "FixedUnitary":
        return gate.matrix.conj().T @ obs @ gate.matrix
    mat = _rotation_matrix(gate.kind, _angle_of(gate, params)) if gate.kind in ROTATION_KINDS else _H_MATRIX
    q = gate.targets[0]
    right = _apply_1q(obs.T, mat.T, q, n).T  # obs @ G
    return _apply_1q(right, mat.conj().T, q, n)  # G^dag @ (obs G)


def _expectation_and_shift_gradient(circuit: Circuit, params, qubit: int):
    """<Z_qubit> after the circuit plus its parameter-shift gradient.

    Gradient entry j is [E(params + (pi/2) e_j) - E(params - (pi/2) e_j)] / 2.
    When every slot is referenced by exactly one gate, the shifted runs share
    their prefix states and a suffix-conjugated observable, which cuts the
    cost from O(P * G) circuit runs to one forward/backward sweep. Slots used
    by several gates fall back to plain shifted evaluations.
    """
    params = np.asarray(params, dtype=float)
    if len(params) != circuit.n_params:
        raise ValueError(f"expected {circuit.n_params} parameters, got {len(params)}")
    n = circuit.n_qubits
    for g in circuit.gates:
        if g.param_slot is not None and g.kind not in ROTATION_KINDS:
            raise ValueError(f"parameter-shift rule unsupported for parameterized {g.kind}")

    slot_refs: dict[int, int] = {}
    for g in circuit.gates:
        if g.param_slot is not None:
            slot_refs[g.param_slot] = slot_refs.get(g.param_slot, 0) + 1

    if any(c > 1 for c in slot_refs.values()):
        value = expectation_z(run_circuit(circuit, params), qubit)
        grad = np.zeros(circuit.n_params)
        for j in range(circuit.n_params):
            shifted = params.copy()
            shifted[j] += pi / 2
            e_plus = expectation_z(run_circuit(circuit, shifted), qubit)
            shifted[j] -= pi
            e_minus = expectation_z(run_circuit(circuit, shifted), qubit)
            grad[j] = 0.5 * (e_plus - e_minus)
        return value, grad

    states = [zero_state(n)]
    for g in circuit.gates:
        states.append(_apply_any(states[-1], g, params, n))
    value = expectation_z(states[-1], qubit)

    grad = np.zeros(circuit.n_params)
    obs = np.diag(z_signs(n, qubit)).astype(complex)
    for idx in range(len(circuit.gates) - 1, -1, -1):
        g = circuit.gates[idx]
        if g.param_slot is not None:
            theta = params[g.param_slot]
            q = g.targets[0]
            phi = _apply_1q(states[idx], _rotation_matrix(g.kind, theta + pi / 2), q, n)
            e_plus = float(np.real(np.vdot(phi, obs @ phi)))
            phi = _apply_1q(states[idx], _rotation_matrix(g.kind, theta - pi / 2), q, n)
            e_minus = float(np.real(np.vdot(phi, obs @ phi)))
            grad[g.param_slot] = 0.5 * (e_plus - e_minus)
        obs = _conjugate_through(obs, g, params, n)
    return value, grad


def parameter_shift_gradient(circuit: Circuit, params, qubit: int) -> np.ndarray:
    """Gradient of <Z_qubit> of run_circuit(circuit, params, |0...0>)."""
    return _expectation_and_shift_gradient(circuit, params, qubit)[1]


def gate_to_dict(gate: Gate) -> dict:
    rec: dict = {"kind": gate.kind, "targets": list(gate.targets)}
    if gate.param_slot is not None:
        rec["slot"] = gate.param_slot
    if gate.fixed_angle is not None:
        rec["angle"] = gate.fixed_angle
    if gate.matrix is not None:
        rec["matrix"] = matrix_to_dict(gate.matrix)
    return rec


def gate_from_dict(rec: dict) -> Gate:
    matrix = matrix_from_dict(rec["matrix"]) if "matrix" in rec else None
    return Gate(
        rec["kind"],
        tuple(rec["targets"]),
        param_slot=rec.get("slot"),
        fixed_angle=rec.get("angle"),
        matrix=matrix,
    )


def circuit_to_dict(circuit: Circuit) -> dict:
    return {
        "n_qubits": circuit.n_qubits,
        "n_params": circuit.n_params,
        "gates": [gate_to_dict(g) for g in circuit.gates],
    }


def circuit_from_dict(d: dict) -> Circuit:
    return Circuit(int(d["n_qubits"]), tuple(gate_from_dict(g) for g in d["gates"]), int(d["n_params"]))


def save_circuit(circuit: Circuit, path) -> None:
    with open(path, "w") as fh:
        json.dump(circuit_to_dict(circuit), fh)


def load_circuit(path) -> Circuit:
    with open(path) as fh:
        return circuit_from_dict(json.load(fh))
