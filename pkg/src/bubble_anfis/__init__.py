"""ANFIS surrogate modelling of bubble-column pressure gradients.

Grid-partition Sugeno fuzzy inference trained by hybrid least-squares /
gradient-descent learning, plus the sensitivity-sweep harness and an analytic
bubble-column dataset to run it on.
"""

__version__ = "0.1.0"

from .errors import AnfisError
from .fis import AnfisModel, InputSpec, build_model, forward, load_model, predict, save_model
from .membership import MfBank, MfFamily, MfSpec, eval_mf, grad_mf, make_mf_bank
from .trainer import TrainConfig, TrainTrace, train

__all__ = [
    "AnfisError",
    "AnfisModel",
    "InputSpec",
    "MfBank",
    "MfFamily",
    "MfSpec",
    "TrainConfig",
    "TrainTrace",
    "build_model",
    "eval_mf",
    "forward",
    "grad_mf",
    "load_model",
    "make_mf_bank",
    "predict",
    "save_model",
    "train",
]
