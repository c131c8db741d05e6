from .model import (
    ARCHITECTURE,
    BnnModel,
    PredictiveDistribution,
    forward_sample,
    init_model,
    kl_divergence,
    load_model,
    param_count,
    predict,
    predict_batch,
    save_model,
)
from .training import (
    TrainConfig,
    gradient_check,
    loss,
    loss_and_grad,
    split_indices,
    train,
    wmsle,
)

__all__ = [
    "ARCHITECTURE",
    "BnnModel",
    "PredictiveDistribution",
    "TrainConfig",
    "forward_sample",
    "gradient_check",
    "init_model",
    "kl_divergence",
    "load_model",
    "loss",
    "loss_and_grad",
    "param_count",
    "predict",
    "predict_batch",
    "save_model",
    "split_indices",
    "train",
    "wmsle",
]
