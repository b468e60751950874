"""
chaostat - Eddy-viscosity coefficient search
"""

import logging
import math
from typing import Dict, Optional, Sequence, Tuple

from chaostat.closure.coarse import cgs_integrate
from chaostat.closure.terms import ClosureSpec
from chaostat.dynamics.params import KsParams, SolverConfig
from chaostat.spectral.fields import RealField
from chaostat.stats.measure import Mode, collect_measure, mode_tv
from chaostat.stats.report import MethodStatistics
from chaostat.utils.errors import SolverBlowUpError
from chaostat.utils.worker_pool import WorkerPool

logger = logging.getLogger(__name__)

EDDY_GRID = (1e-3, 3e-3, 1e-2, 3e-2, 1e-1)


def tune_eddy_viscosity(
    initial_states: Sequence[RealField],
    cfg: SolverConfig,
    params: KsParams,
    reference: MethodStatistics,
    burn_in: float,
    horizon: float,
    modes: Sequence[Mode],
    coefficients: Sequence[float] = EDDY_GRID,
    pool: Optional[WorkerPool] = None,
) -> Tuple[float, Dict[float, float]]:
    """Coefficient with the smallest Avg. TV against the reference; blown-up runs score inf"""
    scores: Dict[float, float] = {}
    seeds = range(len(initial_states))
    for coeff in coefficients:
        closure = ClosureSpec.eddy_viscosity(coeff)
        try:
            measure = collect_measure(lambda i: cgs_integrate(initial_states[i], cfg, closure, params),
                                      burn_in, horizon, seeds, modes, closure.label, pool)
        except SolverBlowUpError as e:
            logger.warning(f"⚠️ eddy viscosity {coeff:g} blew up on start {e.seed}: {e}")
            scores[coeff] = math.inf
            continue
        scores[coeff] = float(mode_tv(reference.measure, measure).mean())
        logger.info(f"📊 eddy viscosity {coeff:g}: Avg. TV {scores[coeff]:.4f}")

    best = min(scores, key=scores.get)
    if math.isinf(scores[best]):
        raise SolverBlowUpError("every eddy-viscosity coefficient blew up", cfg.t_end, 0)
    logger.info(f"✅ selected eddy viscosity {best:g}")
    return best, scores
