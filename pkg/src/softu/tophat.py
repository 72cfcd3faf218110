"""Top-hat classification benchmark: data, the gate-circuit baseline trained
directly on that data, evaluation sweeps, and timing/scaling measurements.

The baseline mirrors the soft model's layout (variational blocks interleaved
with the same encoding block), but each variational block is a stack of basic
entangling layers trained through the parameter-shift rule, so its per-epoch
cost grows with both the dataset size and the gate count. That contrast is
what `scaling_report` measures.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from math import pi

import numpy as np

from .circuits import (
    Circuit,
    Gate,
    _expectation_and_shift_gradient,
    basic_entangling_layer,
    expectation_z,
    run_circuit,
)
from .encoding import EncodingSpec, encoding_gates
from .optim import adam_init, adam_step
from .softmodel import BCE_CLAMP, SoftUnitaryModel, model_forward
from .training import TrainConfig, TrainHistory


@dataclass(frozen=True)
class Dataset:
    xs: np.ndarray
    labels: np.ndarray
    domain: tuple[float, float]
    edges: tuple[float, float]

    @property
    def points(self) -> list[tuple[float, int]]:
        return list(zip(self.xs.tolist(), self.labels.tolist()))

    def __len__(self) -> int:
        return int(self.xs.size)


DEFAULT_DOMAIN = (0.0, 2.0 * pi)
DEFAULT_EDGES = (2.0 * pi / 3.0, 4.0 * pi / 3.0)


def make_tophat_dataset(
    count: int,
    domain: tuple[float, float] = DEFAULT_DOMAIN,
    edges: tuple[float, float] = DEFAULT_EDGES,
    seed: int = 0,
) -> Dataset:
    """Uniform x samples labeled 1 inside the plateau [edges[0], edges[1]]."""
    lo, hi = float(domain[0]), float(domain[1])
    a, b = float(edges[0]), float(edges[1])
    if count < 1:
        raise ValueError("count must be >= 1")
    if not (lo <= a < b <= hi):
        raise ValueError(f"edges {edges} must satisfy lo <= a < b <= hi within domain {domain}")
    rng = np.random.default_rng(seed)
    xs = rng.uniform(lo, hi, count)
    labels = ((xs >= a) & (xs <= b)).astype(int)
    return Dataset(xs, labels, (lo, hi), (a, b))


def tophat_truth(x: float, edges: tuple[float, float] = DEFAULT_EDGES) -> int:
    return int(edges[0] <= x <= edges[1])


def bce_loss(pred: float, label: int) -> float:
    """-[y ln p + (1-y) ln(1-p)] with p clamped to [1e-7, 1 - 1e-7]."""
    p = min(max(float(pred), BCE_CLAMP), 1.0 - BCE_CLAMP)
    return float(-(label * np.log(p) + (1 - label) * np.log(1.0 - p)))


@dataclass(eq=False)
class VqcBaseline:
    """Direct-trained circuit model: blocks of entangling layers around the
    same data-encoding insertions as the soft model."""

    n_qubits: int
    n_blocks: int
    layers_per_block: int
    params: np.ndarray
    encoder: EncodingSpec
    observable: int = 0
    output_rescale: bool = True

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float)
        expected = self.n_blocks * self.layers_per_block * self.n_qubits
        if self.params.size != expected:
            raise ValueError(f"parameter vector has {self.params.size} entries, expected {expected}")

    @property
    def reuploads(self) -> int:
        return self.n_blocks - 1


def build_vqc_baseline(
    n_qubits: int,
    n_blocks: int,
    layers_per_block: int,
    encoder: EncodingSpec | None = None,
    seed: int = 0,
) -> VqcBaseline:
    if encoder is None:
        encoder = EncodingSpec(n_qubits=n_qubits)
    n_params = n_blocks * layers_per_block * n_qubits
    rng = np.random.default_rng(seed)
    params = rng.uniform(0.0, 2.0 * pi, n_params)
    return VqcBaseline(n_qubits, n_blocks, layers_per_block, params, encoder)


def baseline_circuit(baseline: VqcBaseline, x: float) -> Circuit:
    """Full circuit for one datapoint: variational blocks + encoding gates."""
    gates: list[Gate] = []
    slot = 0
    for block in range(baseline.n_blocks):
        for _ in range(baseline.layers_per_block):
            gates.extend(basic_entangling_layer(baseline.n_qubits, range(slot, slot + baseline.n_qubits)))
            slot += baseline.n_qubits
        if block != baseline.n_blocks - 1:
            gates.extend(encoding_gates(baseline.encoder, x))
    return Circuit(baseline.n_qubits, tuple(gates), baseline.params.size)


def vqc_forward(baseline: VqcBaseline, x: float) -> float:
    circuit = baseline_circuit(baseline, x)
    value = expectation_z(run_circuit(circuit, baseline.params), baseline.observable)
    return 0.5 * (value + 1.0) if baseline.output_rescale else value


def train_vqc_direct(baseline: VqcBaseline, dataset: Dataset, config: TrainConfig):
    """Adam on mean BCE with parameter-shift gradients; returns (model, history).

    The circuit structure is fixed per datapoint (only encoding angles depend
    on x), so the per-point circuits are built once up front.
    """
    xs = np.asarray(dataset.xs, dtype=float)
    ys = np.asarray(dataset.labels, dtype=int)
    if xs.size == 0:
        raise ValueError("dataset is empty")
    trained = VqcBaseline(
        baseline.n_qubits,
        baseline.n_blocks,
        baseline.layers_per_block,
        baseline.params.copy(),
        baseline.encoder,
        baseline.observable,
        baseline.output_rescale,
    )
    history = TrainHistory()
    if config.epochs == 0:
        return trained, history

    circuits = [baseline_circuit(trained, x) for x in xs]
    params = trained.params
    state = adam_init(params.size, lr=config.learning_rate)
    rng = np.random.default_rng(config.seed)
    scale = 0.5 if trained.output_rescale else 1.0

    def batch_loss_and_grad(idx):
        grad = np.zeros(params.size)
        loss = 0.0
        inv = 1.0 / idx.size
        for i in idx:
            ev, g = _expectation_and_shift_gradient(circuits[i], params, trained.observable)
            p = scale * (ev + 1.0) if trained.output_rescale else ev
            p_hat = min(max(p, BCE_CLAMP), 1.0 - BCE_CLAMP)
            loss += bce_loss(p, ys[i]) * inv
            if BCE_CLAMP < p < 1.0 - BCE_CLAMP:
                coef = (p_hat - ys[i]) / (p_hat * (1.0 - p_hat)) * scale * inv
                grad += coef * g
        return loss, grad

    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        if config.batch_size is None or config.batch_size >= xs.size:
            loss, grad = batch_loss_and_grad(np.arange(xs.size))
            params, state = adam_step(params, grad, state)
        else:
            order = rng.permutation(xs.size)
            loss_sum = 0.0
            for start in range(0, xs.size, config.batch_size):
                idx = order[start : start + config.batch_size]
                loss, grad = batch_loss_and_grad(idx)
                loss_sum += loss * idx.size
                params, state = adam_step(params, grad, state)
            loss = loss_sum / xs.size
        if not np.isfinite(loss):
            raise RuntimeError(f"non-finite loss at epoch {epoch}")
        wall = time.perf_counter() - t0
        history.append(epoch, loss, 0.0, loss, wall, 0.0)
    trained.params = params
    return trained, history


def predict(model, x: float) -> float:
    """Forward dispatch for any of the toolkit's model flavors."""
    if isinstance(model, SoftUnitaryModel):
        return model_forward(model, x)
    if isinstance(model, VqcBaseline):
        return vqc_forward(model, x)
    if hasattr(model, "model"):  # CompiledModel wraps a block model
        return model_forward(model.model, x)
    if callable(model):
        return float(model(x))
    raise TypeError(f"cannot evaluate model of type {type(model).__name__}")


def evaluate_model(model, grid) -> list[tuple[float, float]]:
    """Deterministic sweep: one (x, output) row per grid point."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid is empty")
    return [(float(x), predict(model, x)) for x in grid]


def _median_epoch_seconds(history: TrainHistory, skip_first: bool = True) -> float:
    walls = history.wall_s[1:] if skip_first and len(history) > 1 else history.wall_s
    return float(np.median(walls))


def scaling_report(
    n_qubits: int = 3,
    datapoint_sizes=(250, 500, 1000),
    layer_counts=(2, 4, 8),
    epochs: int = 5,
    seed: int = 0,
) -> list[dict]:
    """Measure the cost shapes of the two training routes.

    Rows cover: soft-training per-epoch time vs dataset size (expected
    ~linear), direct circuit training vs entangling layer count (expected
    increasing), soft-training vs nominal gate count (identical by
    construction: gate count is not an input to soft training, so one
    measurement is reported for every label), and alignment vs dataset size
    (identical inputs: alignment takes no dataset).
    """
    from .alignment import AlignmentProblem, align
    from .softmodel import build_soft_model
    from .training import train_soft

    rows: list[dict] = []
    encoder = EncodingSpec(n_qubits=n_qubits)
    config = TrainConfig(epochs=epochs, lam=1000.0, seed=seed)

    for size in datapoint_sizes:
        data = make_tophat_dataset(size, seed=seed)
        model = build_soft_model(n_qubits, 4, encoder, seed=seed)
        _, hist = train_soft(model, data, config)
        rows.append({"experiment": "soft_vs_datapoints", "size": int(size), "per_epoch_s": _median_epoch_seconds(hist)})

    small = make_tophat_dataset(64, seed=seed)
    for layers in layer_counts:
        baseline = build_vqc_baseline(n_qubits, 4, layers, encoder, seed=seed)
        _, hist = train_vqc_direct(baseline, small, TrainConfig(epochs=max(2, epochs // 2), seed=seed))
        rows.append({"experiment": "vqc_vs_layers", "size": int(layers), "per_epoch_s": _median_epoch_seconds(hist)})

    # soft training has no gate-count input: one run serves every layer label
    data = make_tophat_dataset(int(datapoint_sizes[0]), seed=seed)
    model = build_soft_model(n_qubits, 4, encoder, seed=seed)
    _, hist = train_soft(model, data, config)
    soft_epoch_s = _median_epoch_seconds(hist)
    for layers in (10, 69):
        rows.append({"experiment": "soft_vs_layers", "size": int(layers), "per_epoch_s": soft_epoch_s})

    targets = [b.copy() for b in model.blocks[:2]]
    for size in (int(datapoint_sizes[0]), int(datapoint_sizes[-1])):
        t0 = time.perf_counter()
        align(AlignmentProblem(targets, n_qubits, layers_per_target=4, epochs=20, seed=seed))
        rows.append({"experiment": "alignment_vs_datapoints", "size": size, "per_epoch_s": (time.perf_counter() - t0) / 20.0})
    return rows


def scaling_rows_to_csv(rows: list[dict], path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["experiment", "size", "per_epoch_s"])
        for row in rows:
            writer.writerow([row["experiment"], row["size"], repr(row["per_epoch_s"])])


def vqc_to_dict(baseline: VqcBaseline) -> dict:
    enc = {"n_qubits": baseline.encoder.n_qubits, "base": baseline.encoder.base}
    if baseline.encoder.feature_map is not None:
        enc["feature_map"] = list(baseline.encoder.feature_map)
    return {
        "n_qubits": baseline.n_qubits,
        "n_blocks": baseline.n_blocks,
        "layers_per_block": baseline.layers_per_block,
        "params": baseline.params.tolist(),
        "encoder": enc,
        "observable": baseline.observable,
        "output_rescale": baseline.output_rescale,
    }


def vqc_from_dict(d: dict) -> VqcBaseline:
    enc = d["encoder"]
    fm = tuple(enc["feature_map"]) if "feature_map" in enc else None
    return VqcBaseline(
        int(d["n_qubits"]),
        int(d["n_blocks"]),
        int(d["layers_per_block"]),
        np.asarray(d["params"], dtype=float),
        EncodingSpec(int(enc["n_qubits"]), float(enc["base"]), fm),
        int(d["observable"]),
        bool(d["output_rescale"]),
    )


def save_vqc(baseline: VqcBaseline, path) -> None:
    with open(path, "w") as fh:
        json.dump(vqc_to_dict(baseline), fh)


def load_vqc(path) -> VqcBaseline:
    with open(path) as fh:
        return vqc_from_dict(json.load(fh))
