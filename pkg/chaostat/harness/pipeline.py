"""
chaostat - Evaluation pipeline
Runs every method from the same random initial states, builds their statistics and compares
each against the fully resolved reference. A failing method is recorded and skipped.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from chaostat.closure.terms import ClosureSpec
from chaostat.closure.tuning import EDDY_GRID, tune_eddy_viscosity
from chaostat.dynamics.params import Trajectory
from chaostat.harness.config import ExperimentConfig
from chaostat.harness.datagen import filter_trajectory
from chaostat.harness.runs import classical_closure, coarse_state, initial_state, run_cgs, run_fno, run_frs
from chaostat.models.fno import FnoParams
from chaostat.models.single_state import SingleStateModel
from chaostat.spectral.fields import RealField
from chaostat.stats.measure import collect_trajectories, tracked_modes
from chaostat.stats.report import MethodStatistics, StatReport, compare, summarize
from chaostat.utils.errors import ChaostatError, NumericalError
from chaostat.utils.worker_pool import WorkerPool

logger = logging.getLogger(__name__)

FRS = "FRS"
CGS_NONE = "CGS-none"
CGS_CLASSICAL = "CGS-classical"
CGS_SINGLE_STATE = "CGS-single-state"
FNO = "FNO"
METHODS = (FRS, CGS_NONE, CGS_CLASSICAL, CGS_SINGLE_STATE, FNO)


@dataclass
class MethodRun:
    method: str
    trajectories: List[Trajectory] = field(repr=False)
    seconds_per_trajectory: float


@dataclass
class PipelineResult:
    reference: MethodStatistics
    reports: Dict[str, StatReport] = field(default_factory=dict)
    failures: Dict[str, str] = field(default_factory=dict)
    eddy_scores: Optional[Dict[float, float]] = None

    def ordered_reports(self) -> List[StatReport]:
        return [self.reports[m] for m in METHODS if m in self.reports] + \
               [r for m, r in self.reports.items() if m not in METHODS]


def stats_initial_states(cfg: ExperimentConfig) -> List[RealField]:
    return [initial_state(cfg, "stats", i) for i in range(cfg.stats.n_traj)]


class Evaluator:
    """Trajectory ensembles of each method over the statistics window of `cfg`"""

    def __init__(self, cfg: ExperimentConfig, pool: Optional[WorkerPool] = None):
        self.cfg = cfg
        self.pool = pool or WorkerPool()
        self.modes = tracked_modes(cfg.dim, cfg.tracked_cutoff())
        self.initial = stats_initial_states(cfg)

    @property
    def horizon(self) -> float:
        return self.cfg.stats.horizon

    @property
    def interval(self) -> float:
        return self.cfg.stats.record_interval

    def _ensemble(self, method: str, job: Callable[[RealField], Trajectory]) -> MethodRun:
        trajectories, seconds = collect_trajectories(lambda i: job(self.initial[i]), range(len(self.initial)),
                                                     self.pool, method)
        logger.info(f"⏱️ {method}: {len(trajectories)} trajectories, {seconds:.3f} s each")
        return MethodRun(method, trajectories, seconds)

    def frs(self) -> MethodRun:
        cfg = self.cfg
        return self._ensemble(FRS, lambda u: filter_trajectory(cfg, run_frs(cfg, u, self.horizon, self.interval)))

    def cgs(self, method: str, closure: ClosureSpec) -> MethodRun:
        cfg = self.cfg
        return self._ensemble(method, lambda u: run_cgs(cfg, coarse_state(cfg, u), closure, self.horizon, self.interval))

    def fno(self, params: FnoParams) -> MethodRun:
        cfg = self.cfg
        return self._ensemble(FNO, lambda u: run_fno(cfg, params, coarse_state(cfg, u), self.horizon, self.interval))

    def summarize(self, run: MethodRun) -> MethodStatistics:
        s = self.cfg.stats
        return summarize(run.method, run.trajectories, s.burn_in, s.horizon, self.modes,
                         self.cfg.dissipation_coefficient(), run.seconds_per_trajectory, s.gradient_dissipation)

    def compare(self, reference: MethodStatistics, candidate: MethodStatistics) -> StatReport:
        return compare(reference, candidate, self.cfg.stats.bins, self.cfg.stats.with_w1)

    def tune_eddy(self, reference: MethodStatistics) -> Tuple[float, Dict[float, float]]:
        cfg = self.cfg
        starts = [coarse_state(cfg, u) for u in self.initial]
        solver = cfg.solver_config(False, self.horizon, self.interval)
        return tune_eddy_viscosity(starts, solver, cfg.params(), reference, cfg.stats.burn_in, self.horizon,
                                   self.modes, EDDY_GRID, self.pool)


def run_pipeline(
    cfg: ExperimentConfig,
    fno_params: Optional[FnoParams] = None,
    closure_model: Optional[SingleStateModel] = None,
    methods: Sequence[str] = METHODS,
    pool: Optional[WorkerPool] = None,
) -> PipelineResult:
    """One StatReport per requested method against the FRS reference; FRS itself is always run"""
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValueError(f"unknown methods {unknown}; expected a subset of {METHODS}")

    evaluator = Evaluator(cfg, pool)
    logger.info(f"🚀 evaluating {', '.join(methods)} on {cfg.stats.n_traj} trajectories, "
                f"window [{cfg.stats.burn_in}, {cfg.stats.horizon}]")
    reference = evaluator.summarize(evaluator.frs())
    result = PipelineResult(reference)
    if FRS in methods:
        result.reports[FRS] = evaluator.compare(reference, reference)

    for method in methods:
        if method == FRS:
            continue
        try:
            if method == CGS_NONE:
                run = evaluator.cgs(method, ClosureSpec.none())
            elif method == CGS_CLASSICAL:
                closure = classical_closure(cfg)
                if cfg.equation == "ks" and cfg.closure.tune_eddy:
                    best, result.eddy_scores = evaluator.tune_eddy(reference)
                    closure = classical_closure(cfg, best)
                run = evaluator.cgs(method, closure)
            elif method == CGS_SINGLE_STATE:
                if closure_model is None:
                    raise FileNotFoundError("no trained single-state closure available")
                run = evaluator.cgs(method, ClosureSpec.learned(closure_model))
            else:
                if fno_params is None:
                    raise FileNotFoundError("no trained FNO weights available")
                run = evaluator.fno(fno_params)
            result.reports[method] = evaluator.compare(reference, evaluator.summarize(run))
        except (ChaostatError, ValueError, FileNotFoundError) as e:
            kind = "numerical failure" if isinstance(e, NumericalError) else "error"
            logger.error(f"❌ {method} failed ({kind}): {e}")
            result.failures[method] = f"{type(e).__name__}: {e}"

    logger.info(f"✅ pipeline finished: {len(result.reports)} reports, {len(result.failures)} failures")
    return result
