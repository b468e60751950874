"""
chaostat - Seeded simulation runs
Initial conditions, fine and coarse trajectories and FNO rollouts built from an ExperimentConfig.
"""

import logging
from typing import Optional

import numpy as np

from chaostat.closure.coarse import cgs_integrate
from chaostat.closure.terms import ClosureSpec
from chaostat.dynamics.initial import random_initial_condition
from chaostat.dynamics.kuramoto import ks_integrate
from chaostat.dynamics.navier_stokes import ns_integrate
from chaostat.dynamics.params import KsParams, Trajectory
from chaostat.harness.config import ExperimentConfig
from chaostat.models.fno import FnoParams, rollout
from chaostat.spectral.fields import RealField
from chaostat.spectral.transforms import apply_filter

logger = logging.getLogger(__name__)

# seed streams; each (seed, role, index) triple gets its own generator state
ROLES = {"cgs": 1, "frs": 2, "test": 3, "stats": 4, "pde": 5, "fno": 6, "closure": 7, "demo": 8}


def derive_seed(seed: int, role: str, index: int = 0) -> int:
    return int(np.random.SeedSequence([seed, ROLES[role], index]).generate_state(1)[0])


def initial_state(cfg: ExperimentConfig, role: str, index: int) -> RealField:
    """Random fine-grid initial condition for trajectory `index` of a seed stream"""
    ds = cfg.dataset
    return random_initial_condition(cfg.fine_grid(), derive_seed(cfg.seed, role, index),
                                    ds.init_modes, ds.init_amplitude)


def coarse_state(cfg: ExperimentConfig, u: RealField) -> RealField:
    return apply_filter(u, cfg.filter_spec())


def classical_closure(cfg: ExperimentConfig, coeff: Optional[float] = None) -> ClosureSpec:
    """Eddy viscosity for KS, Smagorinsky for NS"""
    if cfg.equation == "ks":
        return ClosureSpec.eddy_viscosity(cfg.closure.eddy_coeff if coeff is None else coeff)
    return ClosureSpec.smagorinsky(cfg.closure.smagorinsky_cs)


def run_frs(cfg: ExperimentConfig, u0: RealField, t_end: float, interval: float) -> Trajectory:
    params = cfg.params()
    solver = cfg.solver_config(True, t_end, interval)
    if isinstance(params, KsParams):
        return ks_integrate(u0, solver, params)
    return ns_integrate(u0, solver, params)


def run_cgs(cfg: ExperimentConfig, v0: RealField, closure: ClosureSpec, t_end: float, interval: float) -> Trajectory:
    return cgs_integrate(v0, cfg.solver_config(False, t_end, interval), closure, cfg.params())


def run_fno(cfg: ExperimentConfig, params: FnoParams, v0: RealField, t_end: float, interval: float) -> Trajectory:
    """Rollout with states every `interval` (a multiple of h); the initial state is kept at t = 0"""
    h = params.config.h
    n_steps = int(round(t_end / h))
    record_every = max(1, int(round(interval / h)))
    traj = rollout(params, v0, n_steps, record_every)
    return Trajectory(v0.grid, np.concatenate([[0.0], traj.times]),
                      np.concatenate([v0.values[None], traj.values]), "FNO")
