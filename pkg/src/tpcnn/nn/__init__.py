"""Minimal numpy neural-network engine: layers, losses, Adamax, training."""

from .layers import (
    Conv1D,
    Dense,
    Flatten,
    MaxPoolChannel,
    MaxPoolTime,
    NumericError,
    ReLU,
    Sigmoid,
    relu,
    sigmoid,
)
from .losses import bce_grad, bce_loss, mse_grad, mse_loss
from .network import Network, loss_and_grads
from .optim import Adamax
from .train import TrainReport, predict_in_batches, train
from .io import (
    FORMAT_VERSION,
    ModelFormatError,
    ModelVersionError,
    load_model,
    save_model,
)

__all__ = [
    "Adamax",
    "Conv1D",
    "Dense",
    "Flatten",
    "FORMAT_VERSION",
    "MaxPoolChannel",
    "MaxPoolTime",
    "ModelFormatError",
    "ModelVersionError",
    "Network",
    "NumericError",
    "ReLU",
    "Sigmoid",
    "TrainReport",
    "bce_grad",
    "bce_loss",
    "load_model",
    "loss_and_grads",
    "mse_grad",
    "mse_loss",
    "predict_in_batches",
    "relu",
    "save_model",
    "sigmoid",
    "train",
]
