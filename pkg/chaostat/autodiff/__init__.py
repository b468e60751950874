from chaostat.autodiff import tensor as ad
from chaostat.autodiff.optim import Adam, AdamState, AdamW, StepLR, adam_step
from chaostat.autodiff.tensor import DiffArray, Tape, numerical_gradient, parameters_on

__all__ = [
    "Adam",
    "AdamState",
    "AdamW",
    "DiffArray",
    "StepLR",
    "Tape",
    "ad",
    "adam_step",
    "numerical_gradient",
    "parameters_on",
]
