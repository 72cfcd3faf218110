"""Variational compilation of near-unitary targets into entangling circuits.

Each target matrix gets its own stack of entangling layers (one rotation per
qubit plus the CNOT ring, axes alternating RX/RZ across layers) whose
rotation angles are driven down the Frobenius distance
||U_target - U_circuit|| by Adam. The combined loss across M targets is

    (1 / (2^n M)) * sum_i ||U_target_i - U_circuit_i||

and is optimized exactly in that phase-sensitive form; the phase-invariant
distance min_phi ||U_t - e^{i phi} U_c|| is reported as a diagnostic only.
Targets never see any training data: compilation depends on the matrices
alone, which is what makes its cost independent of dataset size.

Gradients come from the parameter-shift rule applied to the circuit unitary
itself: for a rotation angle t, dC/dt = [C(t + pi/2) - C(t - pi/2)] / (2 sqrt 2)
entrywise (exact, since every entry is degree one in cos(t/2), sin(t/2)),
followed by the chain rule through the norm with a zero-guard at the root.
Shifted unitaries share prefix products and suffix operators, so one epoch
costs O(gates + params) small matrix products instead of O(gates * params).
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field, replace
from math import ceil, pi, sqrt

import numpy as np

from .circuits import (
    Circuit,
    ROTATION_KINDS,
    _H_MATRIX,
    _apply_1q,
    _apply_any,
    _rotation_matrix,
    circuit_to_dict,
    circuit_from_dict,
    circuit_unitary,
    entangling_stack,
)
from .linalg import frobenius_norm, unitarity_deviation
from .optim import adam_init, adam_step
from .softmodel import SoftUnitaryModel, model_forward

DISTANCE_ZERO_GUARD = 1e-12
SHIFT_DIVISOR = 2.0 * sqrt(2.0)
# Rotation axes cycled across layers. A single-axis RX stack commutes into an
# abelian torus once the CNOTs are conjugated away and cannot express general
# unitaries at any depth; alternating RX/RZ layers are universal while keeping
# the layer shape (one rotation per qubit + CNOT ring) and parameter count.
COMPILER_AXES = ("RX", "RZ")


def default_layers(n_qubits: int) -> int:
    """Depth heuristic: 69 layers at 5 qubits, scaled by the 4^n parameter count."""
    return ceil(69 * 4**n_qubits / 4**5)


@dataclass
class AlignmentProblem:
    targets: list[np.ndarray]
    n_qubits: int
    layers_per_target: int | None = None
    epochs: int = 200
    learning_rate: float = 0.05
    lr_decay: float = 0.99  # per-epoch multiplier; alignment needs a cooled tail
    seed: int = 0

    def __post_init__(self):
        if not self.targets:
            raise ValueError("need at least one target")
        dim = 2**self.n_qubits
        self.targets = [np.asarray(t, dtype=complex) for t in self.targets]
        for t in self.targets:
            if t.shape != (dim, dim):
                raise ValueError(f"target shape {t.shape} does not match n_qubits={self.n_qubits}")
        if self.layers_per_target is None:
            self.layers_per_target = default_layers(self.n_qubits)
        if self.layers_per_target < 1:
            raise ValueError("layers_per_target must be >= 1")


@dataclass
class AlignmentHistory:
    epoch: list[int] = field(default_factory=list)
    loss: list[float] = field(default_factory=list)
    per_target: list[list[float]] = field(default_factory=list)  # row per epoch, M columns

    def __len__(self) -> int:
        return len(self.epoch)

    def to_csv(self, path) -> None:
        m = len(self.per_target[0]) if self.per_target else 0
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "loss"] + [f"d{i + 1}" for i in range(m)])
            for i in range(len(self)):
                writer.writerow([self.epoch[i], repr(self.loss[i])] + [repr(d) for d in self.per_target[i]])


@dataclass
class AlignedCircuitSet:
    circuits: list[Circuit]
    params: list[np.ndarray]
    final_distances: list[float]
    phase_invariant_distances: list[float]
    history: AlignmentHistory

    def final_loss(self, n_qubits: int) -> float:
        return sum(self.final_distances) / (2**n_qubits * len(self.final_distances))


def alignment_loss(targets, circuits, params_per_circuit) -> float:
    """(1 / (2^n M)) * sum of Frobenius distances target vs compiled unitary."""
    targets = [np.asarray(t, dtype=complex) for t in targets]
    if not (len(targets) == len(circuits) == len(params_per_circuit)):
        raise ValueError("targets, circuits and parameter vectors must align")
    total = 0.0
    n = circuits[0].n_qubits
    for t, c, p in zip(targets, circuits, params_per_circuit):
        if t.shape != (2**c.n_qubits, 2**c.n_qubits):
            raise ValueError("target dimension does not match circuit")
        total += frobenius_norm(t - circuit_unitary(c, p))
    return total / (2**n * len(targets))


def phase_invariant_distance(target: np.ndarray, compiled: np.ndarray) -> float:
    """min over global phases of ||target - e^{i phi} compiled||."""
    overlap = abs(np.trace(target.conj().T @ compiled))
    sq = np.linalg.norm(target) ** 2 + np.linalg.norm(compiled) ** 2 - 2.0 * overlap
    return float(np.sqrt(max(sq, 0.0)))


def _distance_and_gradient(target, circuit: Circuit, params: np.ndarray):
    """||target - C(params)|| and its exact gradient via shifted unitaries."""
    n = circuit.n_qubits
    dim = 2**n
    prefixes = [np.eye(dim, dtype=complex)]
    for g in circuit.gates:
        prefixes.append(_apply_any(prefixes[-1], g, params, n))
    compiled = prefixes[-1]
    residual = target - compiled
    dist = float(np.linalg.norm(residual))
    grad = np.zeros(circuit.n_params)
    if dist < DISTANCE_ZERO_GUARD:
        return dist, grad
    suffix_dag = np.eye(dim, dtype=complex)  # dagger of the product of later gates
    for idx in range(len(circuit.gates) - 1, -1, -1):
        g = circuit.gates[idx]
        if g.param_slot is not None:
            theta = params[g.param_slot]
            q = g.targets[0]
            suffix = suffix_dag.conj().T
            c_plus = suffix @ _apply_1q(prefixes[idx], _rotation_matrix(g.kind, theta + pi / 2), q, n)
            c_minus = suffix @ _apply_1q(prefixes[idx], _rotation_matrix(g.kind, theta - pi / 2), q, n)
            d_compiled = (c_plus - c_minus) / SHIFT_DIVISOR
            grad[g.param_slot] += -float(np.real(np.vdot(residual, d_compiled))) / dist
        # fold this gate into the suffix: S_{idx-1}^dag = G_idx^dag S_idx^dag
        if g.kind in ROTATION_KINDS:
            theta_g = float(params[g.param_slot]) if g.param_slot is not None else float(g.fixed_angle)
            suffix_dag = _apply_1q(suffix_dag, _rotation_matrix(g.kind, theta_g).conj().T, g.targets[0], n)
        elif g.kind == "H":
            suffix_dag = _apply_1q(suffix_dag, _H_MATRIX, g.targets[0], n)  # self-adjoint
        elif g.kind == "CNOT":
            suffix_dag = _apply_any(suffix_dag, g, params, n)  # self-adjoint
        else:
            suffix_dag = g.matrix.conj().T @ suffix_dag
    return dist, grad


def _align_single(target, n_qubits: int, layers: int, epochs: int, lr: float, lr_decay: float, seed: int):
    circuit = entangling_stack(n_qubits, layers, COMPILER_AXES)
    rng = np.random.default_rng(seed)
    params = rng.uniform(0.0, 2.0 * pi, circuit.n_params)
    state = adam_init(params.size, lr=lr)
    distances = []
    for epoch in range(epochs):
        dist, grad = _distance_and_gradient(target, circuit, params)
        if not np.isfinite(dist):
            raise RuntimeError(f"non-finite alignment loss at epoch {epoch}")
        distances.append(dist)
        params, state = adam_step(params, grad, state)
        if lr_decay != 1.0:
            state = replace(state, lr=state.lr * lr_decay)
    return circuit, params, distances


def align(problem: AlignmentProblem) -> AlignedCircuitSet:
    """Compile every target independently; deterministic for a fixed seed.

    Target i uses seed problem.seed + i, so a single-target problem with that
    seed reproduces the i-th result exactly.
    """
    for i, t in enumerate(problem.targets):
        dev = unitarity_deviation(t)
        if dev > 0.1:
            warnings.warn(f"target {i} deviates from unitarity by {dev:.3f}; alignment may stall", stacklevel=2)
    circuits, params_list, per_target = [], [], []
    for i, target in enumerate(problem.targets):
        circuit, params, distances = _align_single(
            target,
            problem.n_qubits,
            problem.layers_per_target,
            problem.epochs,
            problem.learning_rate,
            problem.lr_decay,
            problem.seed + i,
        )
        circuits.append(circuit)
        params_list.append(params)
        per_target.append(distances)

    m = len(problem.targets)
    scale = 1.0 / (2**problem.n_qubits * m)
    history = AlignmentHistory()
    for epoch in range(problem.epochs):
        row = [per_target[i][epoch] for i in range(m)]
        history.epoch.append(epoch)
        history.loss.append(scale * sum(row))
        history.per_target.append(row)

    finals, phase_inv = [], []
    for target, circuit, params in zip(problem.targets, circuits, params_list):
        compiled = circuit_unitary(circuit, params)
        finals.append(float(np.linalg.norm(target - compiled)))
        phase_inv.append(phase_invariant_distance(target, compiled))
    return AlignedCircuitSet(circuits, params_list, finals, phase_inv, history)


@dataclass(eq=False)
class CompiledModel:
    """A soft-unitary layout whose blocks are compiled circuit unitaries."""

    model: SoftUnitaryModel
    circuits: list[Circuit]
    params: list[np.ndarray]
    output_mse: float
    max_output_dev: float


def transfer_model(soft: SoftUnitaryModel, aligned: AlignedCircuitSet, grid=None) -> CompiledModel:
    """Swap each soft block for its compiled unitary and report output drift.

    The returned model has the same encoder/observable layout, so its forward
    pass is directly comparable to the soft model's; output_mse and
    max_output_dev summarize the difference over the evaluation grid.
    """
    if len(aligned.circuits) != soft.n_blocks:
        raise ValueError(f"aligned set has {len(aligned.circuits)} circuits for {soft.n_blocks} blocks")
    for c in aligned.circuits:
        if c.n_qubits != soft.n_qubits:
            raise ValueError("aligned circuit qubit count does not match model")
    blocks = [circuit_unitary(c, p) for c, p in zip(aligned.circuits, aligned.params)]
    compiled = SoftUnitaryModel(
        soft.n_qubits, blocks, soft.encoder, soft.observable, soft.output_rescale
    )
    if grid is None:
        grid = np.linspace(0.0, 2.0 * pi, 100, endpoint=False)
    diffs = np.array([model_forward(soft, x) - model_forward(compiled, x) for x in grid])
    return CompiledModel(
        compiled,
        list(aligned.circuits),
        [np.asarray(p, dtype=float) for p in aligned.params],
        float(np.mean(diffs**2)),
        float(np.max(np.abs(diffs))),
    )


def aligned_set_to_dict(aligned: AlignedCircuitSet) -> dict:
    return {
        "circuits": [circuit_to_dict(c) for c in aligned.circuits],
        "params": [list(map(float, p)) for p in aligned.params],
        "final_distances": aligned.final_distances,
        "phase_invariant_distances": aligned.phase_invariant_distances,
    }


def aligned_set_from_dict(d: dict) -> AlignedCircuitSet:
    return AlignedCircuitSet(
        [circuit_from_dict(c) for c in d["circuits"]],
        [np.asarray(p, dtype=float) for p in d["params"]],
        [float(v) for v in d["final_distances"]],
        [float(v) for v in d["phase_invariant_distances"]],
        AlignmentHistory(),
    )


def save_aligned_set(aligned: AlignedCircuitSet, path) -> None:
    with open(path, "w") as fh:
        json.dump(aligned_set_to_dict(aligned), fh)


def load_aligned_set(path) -> AlignedCircuitSet:
    with open(path) as fh:
        return aligned_set_from_dict(json.load(fh))
