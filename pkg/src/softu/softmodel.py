"""Soft-unitary models: raw complex matrices trained as parameters.

A model is an interleaved chain U_1, E(x), U_2, E(x), ..., U_M applied to
|0...0>, where the U_k are free complex matrices (not constrained to be
unitary) and E(x) is the diagonal data-encoding block. The scalar output is
<Z> on one qubit, optionally rescaled from [-1, 1] to [0, 1].

Unitarity is not enforced structurally; callers add the penalty
sum_k ||U_k^dag U_k - I|| (scaled by lambda) to their task loss, and the
gradient helpers here differentiate both pieces analytically. Each complex
entry counts as two real parameters; `pack_blocks` fixes the flat layout as
[Re(U_1), Im(U_1), Re(U_2), ...] row-major.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .circuits import z_signs
from .encoding import EncodingSpec, encoding_diagonal
from .linalg import matrix_from_dict, matrix_to_dict, random_unitary, unitarity_deviation

BCE_CLAMP = 1e-7
# below this deviation the norm's square-root gradient is undefined; treat as converged
PENALTY_ZERO_GUARD = 1e-12


@dataclass(eq=False)
class SoftUnitaryModel:
    n_qubits: int
    blocks: list[np.ndarray]
    encoder: EncodingSpec
    observable: int = 0
    output_rescale: bool = True

    def __post_init__(self):
        dim = 2**self.n_qubits
        if not self.blocks:
            raise ValueError("model needs at least one block")
        self.blocks = [np.asarray(b, dtype=complex) for b in self.blocks]
        for b in self.blocks:
            if b.shape != (dim, dim):
                raise ValueError(f"block shape {b.shape} does not match n_qubits={self.n_qubits}")
        if self.encoder.n_qubits != self.n_qubits:
            raise ValueError("encoder qubit count does not match model")
        if not 0 <= self.observable < self.n_qubits:
            raise ValueError(f"observable qubit {self.observable} out of range")

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def max_unitarity_deviation(self) -> float:
        return max(unitarity_deviation(b) for b in self.blocks)


def build_soft_model(
    n_qubits: int,
    n_blocks: int,
    encoder: EncodingSpec | None = None,
    observable: int = 0,
    output_rescale: bool = True,
    seed: int = 0,
) -> SoftUnitaryModel:
    """Fresh model with Haar-random unitary blocks (a known-unitary start)."""
    if encoder is None:
        encoder = EncodingSpec(n_qubits=n_qubits)
    block_seeds = np.random.SeedSequence(seed).generate_state(n_blocks)
    blocks = [random_unitary(2**n_qubits, int(s)) for s in block_seeds]
    return SoftUnitaryModel(n_qubits, blocks, encoder, observable, output_rescale)


def _forward_states(model: SoftUnitaryModel, x):
    """Chain pass returning (states before each block, final state, diagonal)."""
    diag = encoding_diagonal(model.encoder, x)
    state = np.zeros(2**model.n_qubits, dtype=complex)
    state[0] = 1.0
    pre = []
    last = model.n_blocks - 1
    for k, block in enumerate(model.blocks):
        pre.append(state)
        state = block @ state
        if k != last:
            state = diag * state
    return pre, state, diag


def model_forward(model: SoftUnitaryModel, x: float) -> float:
    """Scalar model output for feature x: rescaled <Z> on the observable qubit."""
    _, psi, _ = _forward_states(model, x)
    z = float(np.sum(z_signs(model.n_qubits, model.observable) * np.abs(psi) ** 2))
    return 0.5 * (z + 1.0) if model.output_rescale else z


def bce(pred: float, label: int) -> float:
    """Binary cross-entropy with predictions clamped to [1e-7, 1 - 1e-7]."""
    p = min(max(float(pred), BCE_CLAMP), 1.0 - BCE_CLAMP)
    return -(label * np.log(p) + (1 - label) * np.log(1.0 - p))


def _batch_arrays(batch):
    if hasattr(batch, "xs") and hasattr(batch, "labels"):
        xs, ys = np.asarray(batch.xs, dtype=float), np.asarray(batch.labels)
    else:
        pairs = list(batch)
        if not pairs:
            raise ValueError("batch is empty")
        xs = np.asarray([p[0] for p in pairs], dtype=float)
        ys = np.asarray([p[1] for p in pairs])
    if xs.size == 0:
        raise ValueError("batch is empty")
    if not np.all(np.isin(ys, (0, 1))):
        raise ValueError("labels must be 0 or 1")
    return xs, ys.astype(int)


def pack_blocks(blocks) -> np.ndarray:
    """Flatten blocks to the canonical real parameter vector."""
    parts = []
    for b in blocks:
        parts.append(np.asarray(b).real.ravel())
        parts.append(np.asarray(b).imag.ravel())
    return np.concatenate(parts)


def unpack_blocks(vec: np.ndarray, dim: int, n_blocks: int) -> list[np.ndarray]:
    per = 2 * dim * dim
    if vec.size != per * n_blocks:
        raise ValueError(f"vector length {vec.size} != {per * n_blocks}")
    blocks = []
    for k in range(n_blocks):
        chunk = vec[k * per : (k + 1) * per]
        re = chunk[: dim * dim].reshape(dim, dim)
        im = chunk[dim * dim :].reshape(dim, dim)
        blocks.append(re + 1j * im)
    return blocks


def _grads_to_vector(grads: list[np.ndarray]) -> np.ndarray:
    # d/dRe = 2 Re(dL/dU*), d/dIm = 2 Im(dL/dU*) for real-valued losses
    parts = []
    for g in grads:
        parts.append(2.0 * g.real.ravel())
        parts.append(2.0 * g.imag.ravel())
    return np.concatenate(parts)


def unitarity_penalty(blocks, lam: float, squared: bool = False) -> float:
    """lambda * sum_k ||U_k^dag U_k - I|| (or the squared-norm variant)."""
    total = 0.0
    for b in blocks:
        dev = unitarity_deviation(b)
        total += dev * dev if squared else dev
    return lam * total


def unitarity_penalty_gradients(blocks, lam: float, squared: bool = False) -> np.ndarray:
    """Flat real gradient of `unitarity_penalty` in pack_blocks layout."""
    grads = []
    for b in blocks:
        b = np.asarray(b, dtype=complex)
        d = b.conj().T @ b - np.eye(b.shape[0])
        norm = np.linalg.norm(d)
        if squared:
            grads.append(lam * 2.0 * (b @ d))
        elif norm < PENALTY_ZERO_GUARD:
            grads.append(np.zeros_like(b))
        else:
            grads.append(lam * (b @ d) / norm)
    return _grads_to_vector(grads)


def _task_loss_and_grads(model: SoftUnitaryModel, xs, ys, want_grads: bool):
    n = model.n_qubits
    signs = z_signs(n, model.observable)
    m_blocks = model.n_blocks
    scale = 0.5 if model.output_rescale else 1.0
    accum = [np.zeros_like(b) for b in model.blocks] if want_grads else None
    loss = 0.0
    inv_b = 1.0 / len(xs)
    for x, y in zip(xs, ys):
        pre, psi, diag = _forward_states(model, x)
        z = float(np.sum(signs * np.abs(psi) ** 2))
        p = scale * (z + 1.0) if model.output_rescale else z
        clamped = p < BCE_CLAMP or p > 1.0 - BCE_CLAMP
        p_hat = min(max(p, BCE_CLAMP), 1.0 - BCE_CLAMP)
        loss += -(y * np.log(p_hat) + (1 - y) * np.log(1.0 - p_hat)) * inv_b
        if not want_grads:
            continue
        if clamped:
            continue  # flat region of the clamp: zero gradient
        coef = (p_hat - y) / (p_hat * (1.0 - p_hat)) * scale * inv_b
        chi = signs * psi
        diag_conj = diag.conj()
        for k in range(m_blocks - 1, -1, -1):
            accum[k] += coef * np.outer(chi, pre[k].conj())
            chi = model.blocks[k].conj().T @ chi
            if k > 0:
                chi = diag_conj * chi
    return loss, accum


def task_loss(model: SoftUnitaryModel, batch) -> float:
    """Mean binary cross-entropy of the model over (x, label) pairs."""
    xs, ys = _batch_arrays(batch)
    return _task_loss_and_grads(model, xs, ys, want_grads=False)[0]


def total_loss(model: SoftUnitaryModel, batch, lam: float, squared_penalty: bool = False) -> float:
    """Task BCE plus the unitarity penalty over all blocks."""
    return task_loss(model, batch) + unitarity_penalty(model.blocks, lam, squared_penalty)


def loss_gradients(model: SoftUnitaryModel, batch, lam: float, squared_penalty: bool = False) -> np.ndarray:
    """Analytic gradient of total_loss per real parameter (pack_blocks layout).

    Reverse accumulation through the matrix chain; the BCE clamp contributes
    zero gradient in its flat regions, matching finite differences of the
    clamped loss.
    """
    xs, ys = _batch_arrays(batch)
    _, accum = _task_loss_and_grads(model, xs, ys, want_grads=True)
    grad = _grads_to_vector(accum)
    if lam != 0.0:
        grad = grad + unitarity_penalty_gradients(model.blocks, lam, squared_penalty)
    return grad


def loss_and_gradients(model: SoftUnitaryModel, batch, lam: float, squared_penalty: bool = False):
    """(task_loss, penalty, flat gradient) in one pass; used by the trainer."""
    xs, ys = _batch_arrays(batch)
    task, accum = _task_loss_and_grads(model, xs, ys, want_grads=True)
    grad = _grads_to_vector(accum)
    pen = unitarity_penalty(model.blocks, lam, squared_penalty)
    if lam != 0.0:
        grad = grad + unitarity_penalty_gradients(model.blocks, lam, squared_penalty)
    return float(task), float(pen), grad


def model_to_dict(model: SoftUnitaryModel) -> dict:
    enc = {"n_qubits": model.encoder.n_qubits, "base": model.encoder.base}
    if model.encoder.feature_map is not None:
        enc["feature_map"] = list(model.encoder.feature_map)
    return {
        "n_qubits": model.n_qubits,
        "blocks": [matrix_to_dict(b) for b in model.blocks],
        "encoder": enc,
        "observable": model.observable,
        "output_rescale": model.output_rescale,
    }


def model_from_dict(d: dict) -> SoftUnitaryModel:
    enc = d["encoder"]
    fm = tuple(enc["feature_map"]) if "feature_map" in enc else None
    encoder = EncodingSpec(int(enc["n_qubits"]), float(enc["base"]), fm)
    return SoftUnitaryModel(
        int(d["n_qubits"]),
        [matrix_from_dict(b) for b in d["blocks"]],
        encoder,
        int(d["observable"]),
        bool(d["output_rescale"]),
    )


def save_model(model: SoftUnitaryModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path) -> SoftUnitaryModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
