"""Deep-Q cartpole agents: a classical MLP and a parallel hybrid network.

The hybrid network (PHN) runs a classical branch and a quantum branch on the
same 4-feature observation and sums their Q-vectors. The quantum branch is
two trainable complex 8x8 blocks around one angle-encoding insertion on
3 qubits, read out as per-qubit <Z> into a linear 3->2 map. Blocks are kept
near-unitary by adding lambda * sum ||U^dag U - I|| to the TD loss. The two
architectures carry almost the same number of classical weights (within 10%,
checked at construction), so performance differences come from the quantum
branch rather than raw capacity.

Training is standard DQN: epsilon-greedy behavior with per-episode decay, a
uniform replay buffer, a target network synced on a fixed episode cadence,
and Huber TD errors. Everything is driven by one seeded generator, so a run
is deterministic given its config.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .alignment import AlignedCircuitSet, AlignmentProblem, align
from .cartpole import env_reset, env_step, is_terminal
from .linalg import matrix_from_dict, matrix_to_dict, random_unitary, unitarity_deviation
from .optim import adam_init, adam_step
from .softmodel import unitarity_penalty, unitarity_penalty_gradients

BASELINE_SIZES = (4, 32, 32, 2)
PHN_CLASSICAL_SIZES = (4, 182, 2)
PHN_FEATURE_MAP = (0, 1, 2, 0)  # feature j -> qubit (j mod 3)
PHN_N_QUBITS = 3
PHN_N_BLOCKS = 2
WEIGHT_PARITY_TOLERANCE = 0.10


def _z_sign_matrix(n_qubits: int) -> np.ndarray:
    idx = np.arange(2**n_qubits)
    cols = [1.0 - 2.0 * ((idx >> (n_qubits - 1 - q)) & 1) for q in range(n_qubits)]
    return np.stack(cols, axis=1)  # (2^n, n)


_SIGNS = _z_sign_matrix(PHN_N_QUBITS)


@dataclass(eq=False)
class MlpNetwork:
    """Fully connected net, tanh hidden activations, linear 2-wide output."""

    sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if self.sizes[-1] != 2:
            raise ValueError("output dimension must be 2 (Q-values for left/right)")


@dataclass(eq=False)
class QuantumBranch:
    blocks: list[np.ndarray]
    readout_w: np.ndarray  # (2, n_qubits)
    readout_b: np.ndarray  # (2,)
    n_qubits: int = PHN_N_QUBITS
    feature_map: tuple[int, ...] = PHN_FEATURE_MAP

    def max_unitarity_deviation(self) -> float:
        return max(unitarity_deviation(b) for b in self.blocks)


@dataclass(eq=False)
class PhnNetwork:
    classical: MlpNetwork
    quantum: QuantumBranch

    def __post_init__(self):
        baseline = mlp_param_count_for(BASELINE_SIZES)
        ours = classical_weight_count(self)
        if abs(ours - baseline) / baseline > WEIGHT_PARITY_TOLERANCE:
            raise ValueError(
                f"classical weight parity violated: PHN has {ours}, baseline {baseline}"
            )


def mlp_param_count_for(sizes) -> int:
    return sum(sizes[i] * sizes[i + 1] + sizes[i + 1] for i in range(len(sizes) - 1))


def mlp_param_count(net: MlpNetwork) -> int:
    return mlp_param_count_for(net.sizes)


def classical_weight_count(net: PhnNetwork) -> int:
    return mlp_param_count(net.classical) + net.quantum.readout_w.size + net.quantum.readout_b.size


def build_mlp(sizes=BASELINE_SIZES, seed: int = 0) -> MlpNetwork:
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.standard_normal((fan_out, fan_in)) / np.sqrt(fan_in))
        biases.append(np.zeros(fan_out))
    return MlpNetwork(tuple(sizes), weights, biases)


def build_phn(seed: int = 0) -> PhnNetwork:
    seeds = np.random.SeedSequence(seed).generate_state(2 + PHN_N_BLOCKS)
    classical = build_mlp(PHN_CLASSICAL_SIZES, seed=int(seeds[0]))
    rng = np.random.default_rng(int(seeds[1]))
    blocks = [random_unitary(2**PHN_N_QUBITS, int(s)) for s in seeds[2:]]
    readout_w = rng.standard_normal((2, PHN_N_QUBITS)) * 0.1
    readout_b = np.zeros(2)
    return PhnNetwork(classical, QuantumBranch(blocks, readout_w, readout_b))


# ---------------------------------------------------------------------------
# forward / backward
#
# The *_batch variants are the data-parallel forms used by the training loop;
# per-sample q_forward / q_backward are the reference path they must match.
# ---------------------------------------------------------------------------


def _mlp_forward_batch(net: MlpNetwork, x: np.ndarray):
    acts = [x]
    h = x
    last = len(net.weights) - 1
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w.T + b
        if l != last:
            h = np.tanh(h)
        acts.append(h)
    return h, acts


def _mlp_backward_batch(net: MlpNetwork, acts, upstream: np.ndarray) -> list[np.ndarray]:
    grads = []
    delta = upstream
    for l in range(len(net.weights) - 1, -1, -1):
        grads.append(delta.sum(axis=0))  # bias
        grads.append(delta.T @ acts[l])  # weight
        if l > 0:
            delta = (delta @ net.weights[l]) * (1.0 - acts[l] ** 2)
    grads.reverse()  # now [dW0, db0, dW1, db1, ...]
    return grads


def _quantum_stages_batch(branch: QuantumBranch, feats: np.ndarray):
    theta = np.zeros((feats.shape[0], branch.n_qubits))
    for j, q in enumerate(branch.feature_map):
        theta[:, q] += feats[:, j]
    diag = np.exp(-0.5j * theta @ _SIGNS.T)  # (B, 2^n)
    before_last = diag * branch.blocks[0][:, 0][None, :]  # U1 |0> is its first column
    psi = before_last @ branch.blocks[1].T
    z = (np.abs(psi) ** 2) @ _SIGNS  # (B, n_qubits)
    return diag, before_last, psi, z


def _phn_forward_batch(net: PhnNetwork, feats: np.ndarray):
    q_cls, acts = _mlp_forward_batch(net.classical, feats)
    diag, before_last, psi, z = _quantum_stages_batch(net.quantum, feats)
    q_quantum = z @ net.quantum.readout_w.T + net.quantum.readout_b
    return q_cls + q_quantum, acts, diag, before_last, psi, z


def q_forward(network, features) -> np.ndarray:
    """Q-values (left, right) for one observation."""
    feats = np.asarray(features, dtype=float)
    if feats.shape != (4,):
        raise ValueError(f"expected 4 features, got shape {feats.shape}")
    if not np.all(np.isfinite(feats)):
        raise ValueError("features must be finite")
    if isinstance(network, MlpNetwork):
        out, _ = _mlp_forward_batch(network, feats[None, :])
        return out[0]
    if isinstance(network, PhnNetwork):
        out, *_ = _phn_forward_batch(network, feats[None, :])
        return out[0]
    raise TypeError(f"unknown network type {type(network).__name__}")


def q_backward(network, features, upstream_grad) -> np.ndarray:
    """Flat parameter gradient of upstream . Q(features), in get_params layout."""
    feats = np.asarray(features, dtype=float)
    up = np.asarray(upstream_grad, dtype=float)
    if feats.shape != (4,) or up.shape != (2,):
        raise ValueError("expected 4 features and a length-2 upstream gradient")
    if not np.all(np.isfinite(feats)):
        raise ValueError("features must be finite")
    return _backward_batch(network, feats[None, :], up[None, :])


def _backward_batch(network, feats: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    if isinstance(network, MlpNetwork):
        _, acts = _mlp_forward_batch(network, feats)
        grads = _mlp_backward_batch(network, acts, upstream)
        return np.concatenate([g.ravel() for g in grads])
    if not isinstance(network, PhnNetwork):
        raise TypeError(f"unknown network type {type(network).__name__}")
    branch = network.quantum
    _, acts = _mlp_forward_batch(network.classical, feats)
    cls_grads = _mlp_backward_batch(network.classical, acts, upstream)
    diag, before_last, psi, z = _quantum_stages_batch(branch, feats)
    d_w = upstream.T @ z
    d_b = upstream.sum(axis=0)
    dz = upstream @ branch.readout_w  # (B, n_qubits)
    chi = (dz @ _SIGNS.T) * psi  # d z / d psi* contraction
    g_u2 = chi.T @ before_last.conj()
    chi = (chi @ branch.blocks[1].conj()) * diag.conj()
    g_u1 = np.zeros_like(branch.blocks[0])
    g_u1[:, 0] = chi.sum(axis=0)  # input state is the fixed basis vector e0
    parts = [g.ravel() for g in cls_grads]
    parts.extend([d_w.ravel(), d_b.ravel()])
    for g in (g_u1, g_u2):
        parts.append(2.0 * g.real.ravel())
        parts.append(2.0 * g.imag.ravel())
    return np.concatenate(parts)


def get_params(network) -> np.ndarray:
    if isinstance(network, MlpNetwork):
        parts = []
        for w, b in zip(network.weights, network.biases):
            parts.extend([w.ravel(), b.ravel()])
        return np.concatenate(parts)
    if isinstance(network, PhnNetwork):
        parts = [get_params(network.classical)]
        parts.extend([network.quantum.readout_w.ravel(), network.quantum.readout_b.ravel()])
        for blk in network.quantum.blocks:
            parts.extend([blk.real.ravel(), blk.imag.ravel()])
        return np.concatenate(parts)
    raise TypeError(f"unknown network type {type(network).__name__}")


def set_params(network, flat: np.ndarray) -> None:
    flat = np.asarray(flat, dtype=float)
    pos = 0
    if isinstance(network, MlpNetwork):
        for l, (w, b) in enumerate(zip(network.weights, network.biases)):
            network.weights[l] = flat[pos : pos + w.size].reshape(w.shape)
            pos += w.size
            network.biases[l] = flat[pos : pos + b.size]
            pos += b.size
    elif isinstance(network, PhnNetwork):
        n_cls = sum(w.size + b.size for w, b in zip(network.classical.weights, network.classical.biases))
        set_params(network.classical, flat[:n_cls])
        pos = n_cls
        q = network.quantum
        q.readout_w = flat[pos : pos + q.readout_w.size].reshape(q.readout_w.shape)
        pos += q.readout_w.size
        q.readout_b = flat[pos : pos + q.readout_b.size]
        pos += q.readout_b.size
        dim = 2**q.n_qubits
        for k in range(len(q.blocks)):
            re = flat[pos : pos + dim * dim].reshape(dim, dim)
            pos += dim * dim
            im = flat[pos : pos + dim * dim].reshape(dim, dim)
            pos += dim * dim
            q.blocks[k] = re + 1j * im
    else:
        raise TypeError(f"unknown network type {type(network).__name__}")


def _block_segment(network: PhnNetwork) -> tuple[int, int]:
    """(offset, length) of the quantum-block entries inside the flat vector."""
    n_cls = classical_weight_count(network)
    dim = 2**network.quantum.n_qubits
    return n_cls, len(network.quantum.blocks) * 2 * dim * dim


def copy_network(network):
    if isinstance(network, MlpNetwork):
        return MlpNetwork(network.sizes, [w.copy() for w in network.weights], [b.copy() for b in network.biases])
    return PhnNetwork(
        copy_network(network.classical),
        QuantumBranch(
            [b.copy() for b in network.quantum.blocks],
            network.quantum.readout_w.copy(),
            network.quantum.readout_b.copy(),
            network.quantum.n_qubits,
            network.quantum.feature_map,
        ),
    )


class ReplayBuffer:
    """Fixed-capacity transition ring with uniform without-replacement sampling."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._states = np.zeros((capacity, 4))
        self._actions = np.zeros(capacity, dtype=int)
        self._rewards = np.zeros(capacity)
        self._next_states = np.zeros((capacity, 4))
        self._dones = np.zeros(capacity)
        self._size = 0
        self._pos = 0

    def push(self, state, action, reward, next_state, done) -> None:
        i = self._pos
        self._states[i] = state
        self._actions[i] = action
        self._rewards[i] = reward
        self._next_states[i] = next_state
        self._dones[i] = float(done)
        self._pos = (self._pos + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        if batch_size > self._size:
            raise ValueError(f"cannot sample {batch_size} from buffer of size {self._size}")
        idx = rng.choice(self._size, size=batch_size, replace=False)
        return (
            self._states[idx],
            self._actions[idx],
            self._rewards[idx],
            self._next_states[idx],
            self._dones[idx],
        )

    def __len__(self) -> int:
        return self._size


@dataclass
class DqnConfig:
    episodes: int = 340
    buffer_capacity: int = 10_000
    batch_size: int = 64
    gamma: float = 0.99
    learning_rate: float = 1e-3
    epsilon_start: float = 1.0
    epsilon_min: float = 0.05
    epsilon_decay: float = 0.995  # per episode
    target_sync_every: int = 10  # episodes
    min_buffer: int = 500  # transitions before training starts
    lam: float = 1000.0  # unitarity regularization (hybrid only)
    seed: int = 0


@dataclass
class EpisodeRecord:
    episode: int
    duration: int
    running_mean: float
    epsilon: float
    td_loss: float
    unitary_dev: float


EPISODE_COLUMNS = ("episode", "duration", "running_mean", "epsilon", "td_loss", "unitary_dev")


def records_to_csv(records: list[EpisodeRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EPISODE_COLUMNS)
        for r in records:
            writer.writerow(
                [r.episode, r.duration, repr(r.running_mean), repr(r.epsilon), repr(r.td_loss), repr(r.unitary_dev)]
            )


def _huber(err: np.ndarray) -> np.ndarray:
    a = np.abs(err)
    return np.where(a <= 1.0, 0.5 * err**2, a - 0.5)


def _forward_values_batch(network, feats: np.ndarray) -> np.ndarray:
    if isinstance(network, MlpNetwork):
        return _mlp_forward_batch(network, feats)[0]
    return _phn_forward_batch(network, feats)[0]


def _train_step(network, target_net, params, opt_state, batch, config: DqnConfig):
    states, actions, rewards, next_states, dones = batch
    q_next = _forward_values_batch(target_net, next_states)
    targets = rewards + config.gamma * (1.0 - dones) * q_next.max(axis=1)
    q_vals = _forward_values_batch(network, states)
    picked = q_vals[np.arange(actions.size), actions]
    err = picked - targets
    loss = float(np.mean(_huber(err)))
    upstream = np.zeros_like(q_vals)
    upstream[np.arange(actions.size), actions] = np.clip(err, -1.0, 1.0) / actions.size
    grad = _backward_batch(network, states, upstream)
    if isinstance(network, PhnNetwork) and config.lam > 0.0:
        off, length = _block_segment(network)
        grad[off : off + length] += unitarity_penalty_gradients(network.quantum.blocks, config.lam)
        loss_total = loss + unitarity_penalty(network.quantum.blocks, config.lam)
    else:
        loss_total = loss
    if not np.isfinite(loss_total):
        raise RuntimeError("non-finite TD loss")
    params, opt_state = adam_step(params, grad, opt_state)
    set_params(network, params)
    return params, opt_state, loss


def dqn_train(agent_kind: str, config: DqnConfig):
    """Train one agent; returns (records, network).

    `agent_kind` is "classical" (the baseline MLP) or "hybrid" (the PHN).
    Fully deterministic for a fixed config: one master generator drives
    episode seeds, exploration, and replay sampling in a fixed order.
    """
    if agent_kind not in ("classical", "hybrid"):
        raise ValueError(f"agent_kind must be 'classical' or 'hybrid', got {agent_kind!r}")
    rng = np.random.default_rng(config.seed)
    network = build_mlp(seed=config.seed) if agent_kind == "classical" else build_phn(seed=config.seed)
    target_net = copy_network(network)
    buffer = ReplayBuffer(config.buffer_capacity)
    params = get_params(network)
    opt_state = adam_init(params.size, lr=config.learning_rate)

    records: list[EpisodeRecord] = []
    epsilon = config.epsilon_start
    duration_sum = 0
    for episode in range(config.episodes):
        state = env_reset(int(rng.integers(2**31)))
        duration = 0
        losses: list[float] = []
        while not is_terminal(state):
            feats = state.features()
            if rng.random() < epsilon:
                action = int(rng.integers(2))
            else:
                action = int(np.argmax(q_forward(network, feats)))
            nxt, reward, done = env_step(state, action)
            buffer.push(feats, action, reward, nxt.features(), done)
            duration += 1
            if len(buffer) >= max(config.min_buffer, config.batch_size):
                batch = buffer.sample(config.batch_size, rng)
                params, opt_state, loss = _train_step(network, target_net, params, opt_state, batch, config)
                losses.append(loss)
            state = nxt
        epsilon = max(config.epsilon_min, epsilon * config.epsilon_decay)
        if (episode + 1) % config.target_sync_every == 0:
            target_net = copy_network(network)
        duration_sum += duration
        udev = network.quantum.max_unitarity_deviation() if isinstance(network, PhnNetwork) else 0.0
        records.append(
            EpisodeRecord(
                episode,
                duration,
                duration_sum / (episode + 1),
                epsilon,
                float(np.mean(losses)) if losses else 0.0,
                udev,
            )
        )
    return records, network


def align_rl_blocks(
    agent: PhnNetwork,
    layers_per_target: int = 24,
    epochs: int = 400,
    learning_rate: float = 0.05,
    seed: int = 0,
) -> AlignedCircuitSet:
    """Compile the trained quantum blocks; episode data plays no part."""
    problem = AlignmentProblem(
        [b.copy() for b in agent.quantum.blocks],
        agent.quantum.n_qubits,
        layers_per_target=layers_per_target,
        epochs=epochs,
        learning_rate=learning_rate,
        seed=seed,
    )
    return align(problem)


def agent_to_dict(network) -> dict:
    if isinstance(network, MlpNetwork):
        return {
            "kind": "classical",
            "sizes": list(network.sizes),
            "weights": [w.tolist() for w in network.weights],
            "biases": [b.tolist() for b in network.biases],
        }
    return {
        "kind": "hybrid",
        "classical": agent_to_dict(network.classical),
        "readout_w": network.quantum.readout_w.tolist(),
        "readout_b": network.quantum.readout_b.tolist(),
        "blocks": [matrix_to_dict(b) for b in network.quantum.blocks],
        "n_qubits": network.quantum.n_qubits,
        "feature_map": list(network.quantum.feature_map),
    }


def agent_from_dict(d: dict):
    if d["kind"] == "classical":
        return MlpNetwork(
            tuple(d["sizes"]),
            [np.asarray(w, dtype=float) for w in d["weights"]],
            [np.asarray(b, dtype=float) for b in d["biases"]],
        )
    classical = agent_from_dict(d["classical"])
    return PhnNetwork(
        classical,
        QuantumBranch(
            [matrix_from_dict(b) for b in d["blocks"]],
            np.asarray(d["readout_w"], dtype=float),
            np.asarray(d["readout_b"], dtype=float),
            int(d["n_qubits"]),
            tuple(d["feature_map"]),
        ),
    )


def save_agent(network, path) -> None:
    with open(path, "w") as fh:
        json.dump(agent_to_dict(network), fh)


def load_agent(path):
    with open(path) as fh:
        return agent_from_dict(json.load(fh))
