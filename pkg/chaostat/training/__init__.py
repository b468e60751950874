from chaostat.training.datasets import (
    PairDataset,
    PdeInputSet,
    label_slots,
    make_pde_inputs,
    merge_pairs,
    pairs_from_trajectory,
)
from chaostat.training.losses import (
    evaluate_data_loss,
    evaluate_pde_loss,
    frames_residual_norm,
    holdout_relative_error,
    loss_data,
    loss_pde,
    pde_residual,
    relative_l2_error,
)
from chaostat.training.multistage import (
    ABLATIONS,
    LambdaSchedule,
    LossRecord,
    LossReport,
    StageSchedule,
    TrainingData,
    train_multistage,
    train_supervised,
)

__all__ = [
    "ABLATIONS",
    "LambdaSchedule",
    "LossRecord",
    "LossReport",
    "PairDataset",
    "PdeInputSet",
    "StageSchedule",
    "TrainingData",
    "evaluate_data_loss",
    "evaluate_pde_loss",
    "frames_residual_norm",
    "holdout_relative_error",
    "label_slots",
    "loss_data",
    "loss_pde",
    "make_pde_inputs",
    "merge_pairs",
    "pairs_from_trajectory",
    "pde_residual",
    "relative_l2_error",
    "train_multistage",
    "train_supervised",
]
