from chaostat.closure.coarse import cgs_integrate, cgs_step
from chaostat.closure.commutator import (
    CommutatorSample,
    NonUniquenessReport,
    SingleStateTrainConfig,
    apply_operator,
    commutator_dataset,
    commutator_target,
    nonuniqueness_demo,
    nonuniqueness_pair,
    train_single_state,
)
from chaostat.closure.terms import (
    ClosureSpec,
    closure_tendency,
    eddy_viscosity_term,
    smagorinsky_term,
    strain_rate_magnitude,
)
from chaostat.closure.tuning import EDDY_GRID, tune_eddy_viscosity

__all__ = [
    "EDDY_GRID",
    "ClosureSpec",
    "CommutatorSample",
    "NonUniquenessReport",
    "SingleStateTrainConfig",
    "apply_operator",
    "cgs_integrate",
    "cgs_step",
    "closure_tendency",
    "commutator_dataset",
    "commutator_target",
    "eddy_viscosity_term",
    "nonuniqueness_demo",
    "nonuniqueness_pair",
    "smagorinsky_term",
    "strain_rate_magnitude",
    "train_single_state",
    "tune_eddy_viscosity",
]
