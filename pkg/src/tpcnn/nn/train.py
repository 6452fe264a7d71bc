"""Deterministic mini-batch training loop with best-validation snapshots."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .losses import LOSSES
from .network import Network


@dataclass
class TrainReport:
    """Per-epoch loss history plus bookkeeping for the selected snapshot."""

    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)
    best_epoch: int = -1
    updates_per_epoch: int = 0

    @property
    def best_val_loss(self) -> float:
        return self.val_loss[self.best_epoch]

    def to_dict(self) -> dict:
        return {
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "epoch_seconds": self.epoch_seconds,
            "best_epoch": self.best_epoch,
            "updates_per_epoch": self.updates_per_epoch,
        }


def _check_disjoint(x_train: np.ndarray, x_val: np.ndarray) -> None:
    train_keys = {row.tobytes() for row in x_train}
    for i, row in enumerate(x_val):
        if row.tobytes() in train_keys:
            raise ValueError(f"validation sample {i} also appears in the training set")


def predict_in_batches(net: Network, x: np.ndarray, batch: int = 256) -> np.ndarray:
    outs = [net.forward(x[s : s + batch]) for s in range(0, x.shape[0], batch)]
    return np.concatenate(outs, axis=0)


def train(
    model: Network,
    train_set: tuple[np.ndarray, np.ndarray],
    val_set: tuple[np.ndarray, np.ndarray],
    epochs: int,
    batch_size: int = 8,
    seed: int = 0,
    loss: str = "mse",
    lr: float = 5e-4,
    beta1: float = 0.9,
    beta2: float = 0.999,
    patience: int | None = None,
) -> tuple[Network, TrainReport]:
    """Train with Adamax and return the model at its best validation epoch.

    Shuffling is driven by a PCG64 generator seeded with `seed`, so a fixed
    seed reproduces the exact update sequence. Training stops early when the
    validation loss has not improved for `patience` epochs (None disables).
    The train and validation sets must be disjoint; this is enforced by
    hashing the input rows, not assumed.
    """
    from .optim import Adamax

    x_train, y_train = (np.asarray(a, dtype=np.float64) for a in train_set)
    x_val, y_val = (np.asarray(a, dtype=np.float64) for a in val_set)
    if x_train.shape[0] == 0 or x_val.shape[0] == 0:
        raise ValueError("training and validation sets must be non-empty")
    _check_disjoint(x_train, x_val)

    loss_fn, grad_fn = LOSSES[loss]
    rng = np.random.Generator(np.random.PCG64(seed))
    opt = Adamax(model.params(), lr=lr, beta1=beta1, beta2=beta2)
    n = x_train.shape[0]
    report = TrainReport(updates_per_epoch=(n + batch_size - 1) // batch_size)
    best_state = model.get_state()
    best_val = np.inf
    since_best = 0

    for epoch in range(epochs):
        tic = time.perf_counter()
        order = rng.permutation(n)
        running = 0.0
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            xb, yb = x_train[idx], y_train[idx]
            model.zero_grads()
            out = model.forward(xb)
            running += loss_fn(yb, out) * idx.shape[0]
            model.backward(grad_fn(yb, out))
            opt.step(model.grads())
        val_out = predict_in_batches(model, x_val)
        val = loss_fn(y_val, val_out)
        report.train_loss.append(running / n)
        report.val_loss.append(val)
        report.epoch_seconds.append(time.perf_counter() - tic)

        if val < best_val:
            best_val = val
            best_state = model.get_state()
            report.best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if patience is not None and since_best >= patience:
                break

    model.set_state(best_state)
    return model, report
