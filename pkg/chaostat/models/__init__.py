from chaostat.models.fno import (
    FnoConfig,
    FnoParams,
    encode_inputs,
    fno_apply,
    fno_forward,
    fno_predict,
    init_params,
    rollout,
)
from chaostat.models.single_state import (
    SingleStateConfig,
    SingleStateModel,
    init_single_state,
    single_state_apply,
)

__all__ = [
    "FnoConfig",
    "FnoParams",
    "SingleStateConfig",
    "SingleStateModel",
    "encode_inputs",
    "fno_apply",
    "fno_forward",
    "fno_predict",
    "init_params",
    "init_single_state",
    "rollout",
    "single_state_apply",
]
