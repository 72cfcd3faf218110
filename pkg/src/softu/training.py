"""Adam training loop for soft-unitary models.

Gradients over a batch are accumulated datapoint by datapoint (each point is
independent), so the per-epoch cost is linear in the dataset size and does
not depend on any gate count; that cost shape is part of what the timing
experiments measure.
"""

from __future__ import annotations

import csv
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .optim import adam_init, adam_step
from .softmodel import SoftUnitaryModel, loss_and_gradients, pack_blocks, unpack_blocks

HISTORY_COLUMNS = ("epoch", "task_loss", "unitary_loss", "total_loss", "wall_s", "max_udev")


@dataclass
class TrainConfig:
    epochs: int
    learning_rate: float = 0.01
    lam: float = 1000.0
    batch_size: int | None = None  # None = full batch
    seed: int = 0
    unitarity_threshold: float = 1e-2
    lr_decay: float = 1.0  # per-epoch multiplicative decay
    squared_penalty: bool = False

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class TrainHistory:
    """Per-epoch metric rows; losses are evaluated on the pre-step model of
    each epoch, max_udev on the post-step blocks."""

    epoch: list[int] = field(default_factory=list)
    task_loss: list[float] = field(default_factory=list)
    unitary_loss: list[float] = field(default_factory=list)
    total_loss: list[float] = field(default_factory=list)
    wall_s: list[float] = field(default_factory=list)
    max_udev: list[float] = field(default_factory=list)

    def append(self, epoch, task, unitary, total, wall, udev):
        self.epoch.append(int(epoch))
        self.task_loss.append(float(task))
        self.unitary_loss.append(float(unitary))
        self.total_loss.append(float(total))
        self.wall_s.append(float(wall))
        self.max_udev.append(float(udev))

    def __len__(self) -> int:
        return len(self.epoch)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(HISTORY_COLUMNS)
            for i in range(len(self)):
                writer.writerow(
                    [
                        self.epoch[i],
                        repr(self.task_loss[i]),
                        repr(self.unitary_loss[i]),
                        repr(self.total_loss[i]),
                        repr(self.wall_s[i]),
                        repr(self.max_udev[i]),
                    ]
                )

    @classmethod
    def from_csv(cls, path) -> "TrainHistory":
        hist = cls()
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                hist.append(
                    int(row["epoch"]),
                    float(row["task_loss"]),
                    float(row["unitary_loss"]),
                    float(row["total_loss"]),
                    float(row["wall_s"]),
                    float(row["max_udev"]),
                )
        return hist


def _dataset_arrays(dataset):
    if hasattr(dataset, "xs") and hasattr(dataset, "labels"):
        return np.asarray(dataset.xs, dtype=float), np.asarray(dataset.labels, dtype=int)
    pairs = list(dataset)
    if not pairs:
        raise ValueError("dataset is empty")
    return np.asarray([p[0] for p in pairs], dtype=float), np.asarray([p[1] for p in pairs], dtype=int)


@dataclass(frozen=True)
class _Batch:
    xs: np.ndarray
    labels: np.ndarray


def train_soft(model: SoftUnitaryModel, dataset, config: TrainConfig):
    """Train a copy of `model` on (x, label) data; returns (model, history).

    Deterministic for a fixed config seed (the seed only drives mini-batch
    shuffling; full-batch runs use no randomness at all). Aborts with a
    diagnostic if the loss goes non-finite.
    """
    xs, ys = _dataset_arrays(dataset)
    if xs.size == 0:
        raise ValueError("dataset is empty")
    work = SoftUnitaryModel(
        model.n_qubits,
        [b.copy() for b in model.blocks],
        model.encoder,
        model.observable,
        model.output_rescale,
    )
    history = TrainHistory()
    if config.epochs == 0:
        return work, history

    dim = 2**work.n_qubits
    params = pack_blocks(work.blocks)
    state = adam_init(params.size, lr=config.learning_rate)
    rng = np.random.default_rng(config.seed)

    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        if config.batch_size is None or config.batch_size >= xs.size:
            task, pen, grad = loss_and_gradients(work, _Batch(xs, ys), config.lam, config.squared_penalty)
            params, state = adam_step(params, grad, state)
            work.blocks = unpack_blocks(params, dim, work.n_blocks)
        else:
            order = rng.permutation(xs.size)
            task_sum = 0.0
            pen = 0.0
            for start in range(0, xs.size, config.batch_size):
                idx = order[start : start + config.batch_size]
                t, pen, grad = loss_and_gradients(
                    work, _Batch(xs[idx], ys[idx]), config.lam, config.squared_penalty
                )
                task_sum += t * idx.size
                params, state = adam_step(params, grad, state)
                work.blocks = unpack_blocks(params, dim, work.n_blocks)
            task = task_sum / xs.size
        total = task + pen
        if not np.isfinite(total):
            raise RuntimeError(f"non-finite loss at epoch {epoch}: task={task}, unitary={pen}")
        if config.lr_decay != 1.0:
            state = replace(state, lr=state.lr * config.lr_decay)
        wall = time.perf_counter() - t0
        history.append(epoch, task, pen, total, wall, work.max_unitarity_deviation())

    final_udev = work.max_unitarity_deviation()
    if final_udev > config.unitarity_threshold:
        warnings.warn(
            f"final unitarity deviation {final_udev:.3e} exceeds threshold {config.unitarity_threshold:.3e}",
            stacklevel=2,
        )
    return work, history
