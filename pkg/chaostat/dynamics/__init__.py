from chaostat.dynamics.initial import noisy_copy, random_initial_condition
from chaostat.dynamics.kuramoto import (
    KsEtdrk4Stepper,
    ks_etdrk4_step,
    ks_galerkin_integrate,
    ks_galerkin_rhs,
    ks_integrate,
    ks_rhs,
    modes_to_spectral,
    spectral_to_modes,
)
from chaostat.dynamics.navier_stokes import (
    NsSplitStepper,
    ns_integrate,
    ns_rhs,
    ns_split_step,
    velocity_from_vorticity,
)
from chaostat.dynamics.params import KsParams, NsParams, SolverConfig, Trajectory

__all__ = [
    "KsEtdrk4Stepper",
    "KsParams",
    "NsParams",
    "NsSplitStepper",
    "SolverConfig",
    "Trajectory",
    "ks_etdrk4_step",
    "ks_galerkin_integrate",
    "ks_galerkin_rhs",
    "ks_integrate",
    "ks_rhs",
    "modes_to_spectral",
    "noisy_copy",
    "ns_integrate",
    "ns_rhs",
    "ns_split_step",
    "random_initial_condition",
    "spectral_to_modes",
    "velocity_from_vorticity",
]
