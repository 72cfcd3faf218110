"""softu: few-qubit quantum models trained as regularized complex matrices
("soft-unitaries"), then compiled into gate circuits by unitary alignment."""

__version__ = "0.1.0"

from .alignment import AlignedCircuitSet, AlignmentProblem, align, alignment_loss, transfer_model
from .circuits import (
    Circuit,
    Gate,
    apply_gate,
    basic_entangling_layer,
    circuit_unitary,
    expectation_z,
    parameter_shift_gradient,
    run_circuit,
    zero_state,
)
from .encoding import EncodingSpec, angle_encode_features, exponential_rz_block
from .linalg import dagger, frobenius_norm, matmul, random_unitary, unitarity_deviation
from .optim import AdamState, adam_init, adam_step
from .softmodel import SoftUnitaryModel, build_soft_model, loss_gradients, model_forward, total_loss
from .tophat import Dataset, VqcBaseline, bce_loss, evaluate_model, make_tophat_dataset, train_vqc_direct
from .training import TrainConfig, TrainHistory, train_soft

__all__ = [
    "AdamState",
    "AlignedCircuitSet",
    "AlignmentProblem",
    "Circuit",
    "Dataset",
    "EncodingSpec",
    "Gate",
    "SoftUnitaryModel",
    "TrainConfig",
    "TrainHistory",
    "VqcBaseline",
    "adam_init",
    "adam_step",
    "align",
    "alignment_loss",
    "angle_encode_features",
    "apply_gate",
    "basic_entangling_layer",
    "bce_loss",
    "build_soft_model",
    "circuit_unitary",
    "dagger",
    "evaluate_model",
    "expectation_z",
    "exponential_rz_block",
    "frobenius_norm",
    "loss_gradients",
    "make_tophat_dataset",
    "matmul",
    "model_forward",
    "parameter_shift_gradient",
    "random_unitary",
    "run_circuit",
    "total_loss",
    "train_soft",
    "train_vqc_direct",
    "transfer_model",
    "unitarity_deviation",
    "zero_state",
]
