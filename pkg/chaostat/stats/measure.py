"""
chaostat - Empirical invariant measures
Pooled Fourier-mode samples from trajectory windows, shared-bin histograms and the
total-variation / Wasserstein distances between mode marginals.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import wasserstein_distance

from chaostat.dynamics.params import Trajectory
from chaostat.spectral.fields import GridSpec
from chaostat.utils.errors import GridError, SolverBlowUpError
from chaostat.utils.worker_pool import WorkerPool

logger = logging.getLogger(__name__)

DEFAULT_BINS = 64
PHASE_BINS = 32
MIN_PHASE_SAMPLES = 100

Mode = Tuple[int, ...]


def tracked_modes(dim: int, cutoff: int) -> List[Mode]:
    """
    One representative per conjugate pair with |k|_inf <= cutoff:
    k = 1..K in 1D; the upper half-plane (ky > 0, or ky = 0 and kx > 0) in 2D.
    """
    if cutoff < 1:
        raise ValueError(f"cutoff must be >= 1, got {cutoff}")
    if dim == 1:
        return [(k,) for k in range(1, cutoff + 1)]
    modes = []
    for ky in range(0, cutoff + 1):
        for kx in range(-cutoff, cutoff + 1):
            if ky > 0 or kx > 0:
                modes.append((kx, ky))
    return modes


def mode_coefficients(states: np.ndarray, grid: GridSpec, modes: Sequence[Mode]) -> np.ndarray:
    """(samples, *spatial) -> (samples, n_modes) forward-normalized coefficients"""
    states = np.asarray(states, dtype=np.float64)
    if states.shape[1:] != grid.shape:
        raise GridError(f"states shape {states.shape} does not match grid {grid.shape}")
    axes = tuple(range(1, grid.dim + 1))
    coeffs = np.fft.fftn(states, axes=axes) / grid.size
    for mode in modes:
        if max(abs(k) for k in mode) >= grid.nyquist:
            raise GridError(f"mode {mode} is not resolved on n={grid.n}")
    index = tuple(np.array([m[d] % grid.n for m in modes]) for d in range(grid.dim))
    return coeffs[(slice(None),) + index]


@dataclass
class EmpiricalMeasure:
    modes: List[Mode]
    magnitudes: np.ndarray = field(repr=False)
    phases: np.ndarray = field(repr=False)
    metadata: Dict = field(default_factory=dict)

    def __post_init__(self):
        self.magnitudes = np.asarray(self.magnitudes, dtype=np.float64)
        self.phases = np.asarray(self.phases, dtype=np.float64)
        if self.magnitudes.shape != self.phases.shape or self.magnitudes.shape[1:] != (len(self.modes),):
            raise ValueError(
                f"samples {self.magnitudes.shape} / {self.phases.shape} do not match {len(self.modes)} modes"
            )
        if np.any(self.magnitudes < 0):
            raise ValueError("mode magnitudes must be non-negative")

    @property
    def n_samples(self) -> int:
        return self.magnitudes.shape[0]

    def merge(self, other: "EmpiricalMeasure") -> "EmpiricalMeasure":
        if other.modes != self.modes:
            raise ValueError("cannot pool measures over different mode sets")
        meta = dict(self.metadata)
        meta["n_traj"] = self.metadata.get("n_traj", 0) + other.metadata.get("n_traj", 0)
        return EmpiricalMeasure(
            self.modes,
            np.concatenate([self.magnitudes, other.magnitudes]),
            np.concatenate([self.phases, other.phases]),
            meta,
        )


def measure_from_states(states: np.ndarray, grid: GridSpec, modes: Sequence[Mode], metadata: Optional[Dict] = None) -> EmpiricalMeasure:
    z = mode_coefficients(states, grid, modes)
    return EmpiricalMeasure(list(modes), np.abs(z), np.mod(np.angle(z), 2.0 * np.pi), dict(metadata or {}))


def measure_from_trajectories(
    trajectories: Iterable[Trajectory],
    burn_in: float,
    horizon: float,
    modes: Sequence[Mode],
    source: str = "",
) -> EmpiricalMeasure:
    """Pool mode samples of every recorded state with burn_in <= t <= horizon"""
    if not horizon > burn_in:
        raise ValueError(f"horizon {horizon} must exceed burn-in {burn_in}")
    chunks: List[np.ndarray] = []
    grid = None
    count = 0
    for traj in trajectories:
        window = traj.window(burn_in, horizon)
        if grid is not None and window.grid != grid:
            raise GridError("trajectories of one measure must share a grid")
        grid = window.grid
        chunks.append(window.values)
        count += 1
    if not chunks:
        raise ValueError("no trajectories to build a measure from")
    meta = {"burn_in": burn_in, "horizon": horizon, "n_traj": count, "source": source, "grid": grid.to_dict()}
    return measure_from_states(np.concatenate(chunks), grid, modes, meta)


def collect_trajectories(
    source: Callable[[int], Trajectory],
    seeds: Sequence[int],
    pool: Optional[WorkerPool] = None,
    tag: str = "",
) -> Tuple[List[Trajectory], float]:
    """
    Run `source(seed)` for every seed on the worker pool.
    Returns the trajectories in seed order and the mean wall-clock seconds per trajectory.
    The first failure is re-raised; a blow-up carries the seed that produced it.
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("no seeds to run")
    pool = pool or WorkerPool()
    results = pool.map([lambda s=s: source(s) for s in seeds], [f"{tag or 'trajectory'}-{s}" for s in seeds])
    for seed, result in zip(seeds, results):
        if result.ok:
            continue
        if isinstance(result.error, SolverBlowUpError):
            result.error.seed = seed
            logger.error(f"❌ {tag or 'trajectory'} seed {seed} blew up: {result.error}")
        raise result.error
    return [r.value for r in results], float(np.mean([r.seconds for r in results]))


def collect_measure(
    source: Callable[[int], Trajectory],
    burn_in: float,
    horizon: float,
    seeds: Sequence[int],
    modes: Sequence[Mode],
    tag: str = "",
    pool: Optional[WorkerPool] = None,
) -> EmpiricalMeasure:
    """Fan `source(seed)` out over the pool and merge the windowed mode samples"""
    trajectories, _ = collect_trajectories(source, seeds, pool, tag)
    return measure_from_trajectories(trajectories, burn_in, horizon, modes, tag)


# ----------------------------------------------------------------------
# histograms and distances
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.float64)
        counts = np.asarray(self.counts, dtype=np.float64)
        if edges.ndim != 1 or len(edges) != len(counts) + 1:
            raise ValueError(f"{len(counts)} counts need {len(counts) + 1} edges, got {len(edges)}")
        if not np.all(np.diff(edges) > 0):
            raise ValueError("histogram edges must be strictly increasing")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def density(self) -> np.ndarray:
        if self.total == 0:
            return np.zeros_like(self.counts)
        return self.counts / (self.total * self.widths)

    def probabilities(self) -> np.ndarray:
        return self.counts / self.total if self.total else np.zeros_like(self.counts)


def shared_edges(a: np.ndarray, b: np.ndarray, bins: int = DEFAULT_BINS) -> np.ndarray:
    """`bins` equal bins over the pooled range of both samples"""
    pooled = np.concatenate([np.ravel(a), np.ravel(b)])
    if pooled.size == 0:
        raise ValueError("cannot bin empty samples")
    lo, hi = float(pooled.min()), float(pooled.max())
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    return np.linspace(lo, hi, bins + 1)


def histogram(samples: np.ndarray, edges: np.ndarray) -> Histogram:
    counts, _ = np.histogram(np.ravel(samples), bins=edges)
    return Histogram(edges, counts)


def tv_distance(a: Histogram, b: Histogram) -> float:
    """1/2 sum |density_a - density_b| * width over shared bins"""
    if a.edges.shape != b.edges.shape or not np.array_equal(a.edges, b.edges):
        raise ValueError("TV distance needs histograms on identical bin edges")
    return float(0.5 * np.sum(np.abs(a.probabilities() - b.probabilities())))


def sample_tv(a: np.ndarray, b: np.ndarray, bins: int = DEFAULT_BINS) -> Tuple[float, Histogram, Histogram]:
    edges = shared_edges(a, b, bins)
    ha, hb = histogram(a, edges), histogram(b, edges)
    return tv_distance(ha, hb), ha, hb


def mode_tv(a: EmpiricalMeasure, b: EmpiricalMeasure, bins: int = DEFAULT_BINS) -> np.ndarray:
    """TV distance between magnitude marginals, one value per tracked mode"""
    if a.modes != b.modes:
        raise ValueError("measures track different modes")
    return np.array([sample_tv(a.magnitudes[:, i], b.magnitudes[:, i], bins)[0] for i in range(len(a.modes))])


def wasserstein1_per_mode(a: EmpiricalMeasure, b: EmpiricalMeasure) -> np.ndarray:
    """W1 between magnitude marginals per mode (exact for unequal sample counts)"""
    if a.modes != b.modes:
        raise ValueError("measures track different modes")
    if a.n_samples == 0 or b.n_samples == 0:
        raise ValueError("W1 needs non-empty samples")
    return np.array([wasserstein_distance(a.magnitudes[:, i], b.magnitudes[:, i]) for i in range(len(a.modes))])


def phase_uniformity(phases: np.ndarray, bins: int = PHASE_BINS) -> float:
    """TV distance between the phase histogram on [0, 2pi) and the uniform law"""
    phases = np.mod(np.ravel(phases), 2.0 * np.pi)
    if phases.size < MIN_PHASE_SAMPLES:
        raise ValueError(f"phase uniformity needs >= {MIN_PHASE_SAMPLES} samples, got {phases.size}")
    counts, _ = np.histogram(phases, bins=np.linspace(0.0, 2.0 * np.pi, bins + 1))
    return float(0.5 * np.sum(np.abs(counts / phases.size - 1.0 / bins)))
