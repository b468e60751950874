from chaostat.stats.measure import (
    EmpiricalMeasure,
    Histogram,
    collect_measure,
    collect_trajectories,
    histogram,
    measure_from_states,
    measure_from_trajectories,
    mode_tv,
    phase_uniformity,
    shared_edges,
    tracked_modes,
    tv_distance,
    wasserstein1_per_mode,
)
from chaostat.stats.observables import (
    ScalarStatistics,
    autocorrelation_coeff,
    energy_spectrum,
    scalar_statistics,
    spatial_correlation,
)
from chaostat.stats.report import MethodStatistics, StatReport, compare, summarize

__all__ = [
    "EmpiricalMeasure",
    "Histogram",
    "MethodStatistics",
    "ScalarStatistics",
    "StatReport",
    "autocorrelation_coeff",
    "collect_measure",
    "collect_trajectories",
    "compare",
    "energy_spectrum",
    "histogram",
    "measure_from_states",
    "measure_from_trajectories",
    "mode_tv",
    "phase_uniformity",
    "scalar_statistics",
    "shared_edges",
    "spatial_correlation",
    "summarize",
    "tracked_modes",
    "tv_distance",
    "wasserstein1_per_mode",
]
