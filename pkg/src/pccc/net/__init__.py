from .checkpoint import load_model, read_history, save_model, write_history
from .model import (
    Architecture,
    ForwardResult,
    ForwardTrace,
    LinearLayer,
    PcccModel,
    angular_loss,
    angular_loss_grad,
    backward,
    forward,
    forward_batch,
    init_model,
    loss_and_grads,
)
from .optim import AdamState, adam_step
from .train import TrainConfig, predict, predict_many, prepare, train

__all__ = [
    "AdamState",
    "Architecture",
    "ForwardResult",
    "ForwardTrace",
    "LinearLayer",
    "PcccModel",
    "TrainConfig",
    "adam_step",
    "angular_loss",
    "angular_loss_grad",
    "backward",
    "forward",
    "forward_batch",
    "init_model",
    "load_model",
    "loss_and_grads",
    "predict",
    "predict_many",
    "prepare",
    "read_history",
    "save_model",
    "train",
    "write_history",
]
