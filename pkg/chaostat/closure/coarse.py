"""
chaostat - Coarse-grid simulation
The coarse steppers with a closure tendency added to the right-hand side
"""

import logging
from typing import Union

from chaostat.closure.terms import ClosureSpec, closure_tendency
from chaostat.dynamics.kuramoto import KsEtdrk4Stepper, check_state, ks_integrate
from chaostat.dynamics.navier_stokes import NsSplitStepper, ns_integrate
from chaostat.dynamics.params import KsParams, NsParams, SolverConfig, Trajectory
from chaostat.spectral.fields import RealField, SpectralField

logger = logging.getLogger(__name__)

Params = Union[KsParams, NsParams]


def cgs_step(v: SpectralField, dt: float, closure: ClosureSpec, params: Params, step_index: int = 0) -> SpectralField:
    """One coarse step with the closure tendency; closure none is the bare solver step"""
    extra = closure_tendency(closure, v.grid)
    if isinstance(params, KsParams):
        out = KsEtdrk4Stepper(v.grid, dt, params, extra).step(v.coeffs)
    else:
        out = NsSplitStepper(v.grid, params, extra).step(v.coeffs, dt)
    check_state(out, (step_index + 1) * dt, step_index + 1)
    return v.replace(out)


def cgs_integrate(v0: RealField, cfg: SolverConfig, closure: ClosureSpec, params: Params) -> Trajectory:
    """Coarse trajectory with the closure applied at every stage of every step"""
    extra = closure_tendency(closure, cfg.grid)
    logger.debug(f"CGS on n={cfg.grid.n} with closure {closure.label}")
    if isinstance(params, KsParams):
        return ks_integrate(v0, cfg, params, extra_term=extra, provenance="CGS")
    return ns_integrate(v0, cfg, params, extra_term=extra, provenance="CGS")
