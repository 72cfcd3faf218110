"""Data-encoding blocks: fixed-angle RZ gates, no trainable slots.

Two modes share one config type:
  - broadcast (feature_map=None): a single scalar feature x lands on every
    qubit with an exponentially growing angle, RZ(base**q * x) on qubit q.
  - feature_map: feature j lands on qubit feature_map[j] as RZ(f_j), used to
    angle-encode the 4-feature cartpole observation onto 3 qubits.

All encoding unitaries are diagonal, so `encoding_diagonal` exposes the block
as a phase vector for the fast matrix-chain forward pass; the gate-list form
is what gets compiled into circuits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import Gate, rz


@dataclass(frozen=True)
class EncodingSpec:
    n_qubits: int
    base: float = 2.0
    feature_map: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if self.base <= 1.0:
            raise ValueError(f"base must be > 1, got {self.base}")
        if self.feature_map is not None:
            object.__setattr__(self, "feature_map", tuple(int(q) for q in self.feature_map))
            if any(not 0 <= q < self.n_qubits for q in self.feature_map):
                raise ValueError("feature_map assigns a feature to a missing qubit")


def exponential_rz_block(x: float, spec: EncodingSpec) -> list[Gate]:
    """RZ(base**q * x) on each qubit q, as fixed-angle gates."""
    x = float(x)
    if not np.isfinite(x):
        raise ValueError("feature must be finite")
    return [rz(q, angle=spec.base**q * x) for q in range(spec.n_qubits)]


def angle_encode_features(features, n_qubits: int = 3) -> list[Gate]:
    """RZ(f_j) on qubit (j mod n_qubits) for each feature, in feature order."""
    feats = np.asarray(features, dtype=float)
    if not np.all(np.isfinite(feats)):
        raise ValueError("features must be finite")
    return [rz(j % n_qubits, angle=float(f)) for j, f in enumerate(feats)]


def encoding_gates(spec: EncodingSpec, x) -> list[Gate]:
    """Gate-list form of the block for scalar x (broadcast) or a feature vector."""
    if spec.feature_map is None:
        return exponential_rz_block(x, spec)
    feats = np.asarray(x, dtype=float)
    if feats.shape != (len(spec.feature_map),):
        raise ValueError(f"expected {len(spec.feature_map)} features, got shape {feats.shape}")
    if not np.all(np.isfinite(feats)):
        raise ValueError("features must be finite")
    return [rz(q, angle=float(f)) for f, q in zip(feats, spec.feature_map)]


def qubit_angles(spec: EncodingSpec, x) -> np.ndarray:
    """Total RZ angle accumulated on each qubit by the block."""
    if spec.feature_map is None:
        return spec.base ** np.arange(spec.n_qubits) * float(x)
    feats = np.asarray(x, dtype=float)
    angles = np.zeros(spec.n_qubits)
    for f, q in zip(feats, spec.feature_map):
        angles[q] += f
    return angles


def encoding_diagonal(spec: EncodingSpec, x) -> np.ndarray:
    """The block's unitary as a diagonal phase vector over basis states."""
    theta = qubit_angles(spec, x)
    n = spec.n_qubits
    idx = np.arange(2**n)
    # sign +1 where the qubit's bit is 0 (phase e^{-i theta/2}), -1 where 1
    signs = np.empty((2**n, n))
    for q in range(n):
        signs[:, q] = 1.0 - 2.0 * ((idx >> (n - 1 - q)) & 1)
    return np.exp(-0.5j * signs @ theta)
