"""
chaostat - Statistics reports
Per-method summaries of a trajectory ensemble and their comparison against the reference
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from chaostat.dynamics.params import Trajectory
from chaostat.spectral.fields import RealField
from chaostat.stats.measure import (
    DEFAULT_BINS,
    EmpiricalMeasure,
    Histogram,
    Mode,
    measure_from_trajectories,
    mode_tv,
    sample_tv,
    wasserstein1_per_mode,
)
from chaostat.stats.observables import (
    ScalarStatistics,
    autocorrelation_coeff,
    energy_spectrum,
    mode_values,
    scalar_statistics,
)

logger = logging.getLogger(__name__)


@dataclass
class MethodStatistics:
    method: str
    measure: EmpiricalMeasure
    energy: np.ndarray = field(repr=False)
    autocorrelation: np.ndarray = field(repr=False)
    scalars: ScalarStatistics = field(repr=False)
    runtime_seconds: Optional[float] = None


def summarize(
    method: str,
    trajectories: Sequence[Trajectory],
    burn_in: float,
    horizon: float,
    modes: Sequence[Mode],
    dissipation_coefficient: float,
    runtime_seconds: Optional[float] = None,
    gradient_dissipation: bool = False,
) -> MethodStatistics:
    """Measure, time-averaged spectra over shells 1..K and scalar statistics of an ensemble"""
    measure = measure_from_trajectories(trajectories, burn_in, horizon, modes, method)
    cutoff = max(max(abs(k) for k in m) for m in modes)
    windows = [t.window(burn_in, horizon) for t in trajectories]
    grid = windows[0].grid
    states = np.concatenate([w.values for w in windows])

    spectra = np.array([energy_spectrum(RealField(grid, s))[1:cutoff + 1] for s in states])
    autocorr = np.array([mode_values(autocorrelation_coeff(RealField(grid, s)), grid, modes) for s in states])
    scalars = scalar_statistics(states, grid, dissipation_coefficient, gradient_dissipation=gradient_dissipation)
    return MethodStatistics(method, measure, spectra.mean(axis=0), autocorr.mean(axis=0), scalars, runtime_seconds)


def _relative_errors(candidate: np.ndarray, reference: np.ndarray) -> np.ndarray:
    keep = np.abs(reference) > 0
    return np.abs(candidate[keep] - reference[keep]) / np.abs(reference[keep])


@dataclass
class StatReport:
    method: str
    avg_tv: float
    max_tv: float
    per_mode_tv: List[float]
    energy_avg_rel_err: float
    energy_max_rel_err: float
    autocorr_avg_rel_err: float
    autocorr_max_rel_err: float
    value_tv: float
    dissipation_tv: float
    kinetic_energy_tv: float
    variance: float
    variance_rel_err: float
    runtime_seconds: Optional[float] = None
    w1_per_mode: Optional[List[float]] = None
    modes: List[List[int]] = field(default_factory=list)
    histograms: Dict[str, Dict[str, Histogram]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.avg_tv <= 1.0 + 1e-12:
            raise ValueError(f"average TV must lie in [0, 1], got {self.avg_tv}")

    def to_dict(self) -> Dict:
        return {
            "method": self.method,
            "avg_tv": self.avg_tv,
            "max_tv": self.max_tv,
            "per_mode_tv": self.per_mode_tv,
            "energy_avg_rel_err": self.energy_avg_rel_err,
            "energy_max_rel_err": self.energy_max_rel_err,
            "autocorr_avg_rel_err": self.autocorr_avg_rel_err,
            "autocorr_max_rel_err": self.autocorr_max_rel_err,
            "value_tv": self.value_tv,
            "dissipation_tv": self.dissipation_tv,
            "kinetic_energy_tv": self.kinetic_energy_tv,
            "variance": self.variance,
            "variance_rel_err": self.variance_rel_err,
            "runtime_seconds": self.runtime_seconds,
            "w1_per_mode": self.w1_per_mode,
            "modes": self.modes,
        }

    def table_row(self) -> Dict:
        """Flat row matching the comparison-table columns"""
        return {
            "method": self.method,
            "avg_tv": self.avg_tv,
            "max_tv": self.max_tv,
            "energy_avg_rel_err": self.energy_avg_rel_err,
            "energy_max_rel_err": self.energy_max_rel_err,
            "autocorr_avg_rel_err": self.autocorr_avg_rel_err,
            "autocorr_max_rel_err": self.autocorr_max_rel_err,
            "value_tv": self.value_tv,
            "variance_rel_err": self.variance_rel_err,
            "dissipation_tv": self.dissipation_tv,
            "kinetic_energy_tv": self.kinetic_energy_tv,
            "runtime_seconds": self.runtime_seconds,
        }


def compare(reference: MethodStatistics, candidate: MethodStatistics, bins: int = DEFAULT_BINS,
            with_w1: bool = False) -> StatReport:
    """StatReport of `candidate` against the reference ensemble"""
    tvs = mode_tv(reference.measure, candidate.measure, bins)
    energy_err = _relative_errors(candidate.energy, reference.energy)
    autocorr_err = _relative_errors(candidate.autocorrelation, reference.autocorrelation)

    histograms: Dict[str, Dict[str, Histogram]] = {}
    scalar_tvs = {}
    for name in ("values", "dissipation", "kinetic_energy"):
        tv, h_ref, h_cand = sample_tv(getattr(reference.scalars, name), getattr(candidate.scalars, name), bins)
        scalar_tvs[name] = tv
        histograms[name] = {"reference": h_ref, "method": h_cand}
    for i, mode in enumerate(reference.measure.modes):
        _, h_ref, h_cand = sample_tv(reference.measure.magnitudes[:, i], candidate.measure.magnitudes[:, i], bins)
        histograms[f"mode_{'_'.join(str(k) for k in mode)}"] = {"reference": h_ref, "method": h_cand}

    ref_var = reference.scalars.variance
    report = StatReport(
        method=candidate.method,
        avg_tv=float(np.mean(tvs)),
        max_tv=float(np.max(tvs)),
        per_mode_tv=[float(v) for v in tvs],
        energy_avg_rel_err=float(np.mean(energy_err)) if energy_err.size else 0.0,
        energy_max_rel_err=float(np.max(energy_err)) if energy_err.size else 0.0,
        autocorr_avg_rel_err=float(np.mean(autocorr_err)) if autocorr_err.size else 0.0,
        autocorr_max_rel_err=float(np.max(autocorr_err)) if autocorr_err.size else 0.0,
        value_tv=scalar_tvs["values"],
        dissipation_tv=scalar_tvs["dissipation"],
        kinetic_energy_tv=scalar_tvs["kinetic_energy"],
        variance=candidate.scalars.variance,
        variance_rel_err=abs(candidate.scalars.variance - ref_var) / ref_var if ref_var > 0 else 0.0,
        runtime_seconds=candidate.runtime_seconds,
        w1_per_mode=[float(v) for v in wasserstein1_per_mode(reference.measure, candidate.measure)] if with_w1 else None,
        modes=[list(m) for m in reference.measure.modes],
        histograms=histograms,
    )
    logger.info(f"📊 {candidate.method}: Avg. TV {report.avg_tv:.4f}, Max. TV {report.max_tv:.4f}, "
                f"energy err {100 * report.energy_avg_rel_err:.2f}%")
    return report
