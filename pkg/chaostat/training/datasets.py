"""
chaostat - Training datasets
Input/label pairs cut from trajectories, laid out on the FNO output slots, and the
unlabelled inputs used by the physics-informed loss.
"""

import logging
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence

import numpy as np

from chaostat.dynamics.initial import noisy_copy
from chaostat.dynamics.params import Trajectory
from chaostat.spectral.fields import GridSpec, RealField
from chaostat.utils.errors import GridError

logger = logging.getLogger(__name__)

TIME_TOL = 1e-9


@dataclass
class PairDataset:
    """
    inputs: (N, *spatial) states at t; labels: (N, T, *spatial) with slot j holding
    S(t + (j+1) h / T) u where masks[i, j] is set and zeros elsewhere.
    """

    grid: GridSpec
    inputs: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    masks: np.ndarray = field(repr=False)
    horizon: float
    provenance: str = "FRS"
    source_times: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        self.masks = np.asarray(self.masks, dtype=bool)
        n = len(self.inputs)
        if self.inputs.shape[1:] != self.grid.shape:
            raise GridError(f"inputs shape {self.inputs.shape} does not match grid {self.grid.shape}")
        if self.labels.shape[0] != n or self.labels.shape[2:] != self.grid.shape:
            raise GridError(f"labels shape {self.labels.shape} does not match {n} inputs on {self.grid.shape}")
        if self.masks.shape != self.labels.shape[:2]:
            raise GridError(f"masks shape {self.masks.shape} does not match labels {self.labels.shape[:2]}")
        if n and not np.all(self.masks.any(axis=1)):
            raise ValueError("every pair needs at least one labelled frame")

    def __len__(self) -> int:
        return len(self.inputs)

    @property
    def t_frames(self) -> int:
        return self.labels.shape[1]

    def subset(self, index: Sequence[int]) -> "PairDataset":
        index = np.asarray(index, dtype=np.int64)
        times = None if self.source_times is None else self.source_times[index]
        return PairDataset(self.grid, self.inputs[index], self.labels[index], self.masks[index],
                           self.horizon, self.provenance, times)

    def concat(self, other: "PairDataset") -> "PairDataset":
        if other.grid != self.grid or other.t_frames != self.t_frames:
            raise GridError("datasets must share grid and frame count to be joined")
        times = None
        if self.source_times is not None and other.source_times is not None:
            times = np.concatenate([self.source_times, other.source_times])
        return PairDataset(
            self.grid,
            np.concatenate([self.inputs, other.inputs]),
            np.concatenate([self.labels, other.labels]),
            np.concatenate([self.masks, other.masks]),
            self.horizon, self.provenance, times,
        )


@dataclass
class PdeInputSet:
    """Noisy fully resolved states for the residual loss; `fine_grid`, when given, must be their grid"""

    grid: GridSpec
    inputs: np.ndarray = field(repr=False)
    fine_grid: Optional[GridSpec] = None

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        if self.fine_grid is not None and self.grid != self.fine_grid:
            raise GridError(f"PDE inputs must sit on the fine grid n={self.fine_grid.n}, got n={self.grid.n}")
        if self.inputs.shape[1:] != self.grid.shape:
            raise GridError(f"PDE inputs shape {self.inputs.shape} does not match grid {self.grid.shape}")

    def __len__(self) -> int:
        return len(self.inputs)

    def subset(self, index: Sequence[int]) -> "PdeInputSet":
        return PdeInputSet(self.grid, self.inputs[np.asarray(index, dtype=np.int64)], self.fine_grid)



def label_slots(t_frames: int, n_labels: int) -> List[int]:
    """Slot indices (0-based) holding labels at (k / n_labels) h, k = 1..n_labels"""
    if t_frames % n_labels != 0:
        raise ValueError(f"{n_labels} labels do not fall on the slots of T={t_frames}")
    stride = t_frames // n_labels
    return [stride * k - 1 for k in range(1, n_labels + 1)]


def _index_of(times: np.ndarray, t: float) -> int:
    i = int(np.argmin(np.abs(times - t)))
    if abs(times[i] - t) > TIME_TOL * max(1.0, abs(t)):
        raise ValueError(f"trajectory has no state recorded at t={t:.6g}")
    return i


def pairs_from_trajectory(
    traj: Trajectory,
    snapshot_times: Sequence[float],
    horizon: float,
    t_frames: int,
    slots: Optional[Sequence[int]] = None,
) -> PairDataset:
    """One pair per snapshot time; labels filled on `slots` (all slots by default)"""
    slots = list(range(t_frames)) if slots is None else list(slots)
    n = len(snapshot_times)
    inputs = np.zeros((n,) + traj.grid.shape)
    labels = np.zeros((n, t_frames) + traj.grid.shape)
    masks = np.zeros((n, t_frames), dtype=bool)
    for i, t in enumerate(snapshot_times):
        inputs[i] = traj.values[_index_of(traj.times, t)]
        for j in slots:
            labels[i, j] = traj.values[_index_of(traj.times, t + (j + 1) * horizon / t_frames)]
            masks[i, j] = True
    return PairDataset(traj.grid, inputs, labels, masks, horizon, traj.provenance, np.asarray(snapshot_times, dtype=np.float64))


def merge_pairs(parts: Sequence[PairDataset]) -> PairDataset:
    if not parts:
        raise ValueError("nothing to merge")
    out = parts[0]
    for part in parts[1:]:
        out = out.concat(part)
    return out


def make_pde_inputs(
    states: Sequence[RealField],
    sigma_ratio: float,
    seed: int,
    copies: int = 1,
    fine_grid: Optional[GridSpec] = None,
) -> PdeInputSet:
    """FRS states plus Gaussian noise of sigma_ratio * RMS in physical space"""
    if not states:
        raise ValueError("need at least one state to build PDE inputs")
    rng = np.random.default_rng(seed)
    grid = states[0].grid
    zero_mean = grid.dim == 2
    inputs = [noisy_copy(s, sigma_ratio, rng, zero_mean=zero_mean).values for s in states for _ in range(copies)]
    return PdeInputSet(grid, np.stack(inputs), fine_grid)


def iterate_batches(n: int, batch_size: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    """Endless shuffled batches of indices; each pass is a fresh permutation"""
    if n == 0:
        raise ValueError("cannot draw batches from an empty dataset")
    while True:
        perm = rng.permutation(n)
        for start in range(0, n, batch_size):
            yield perm[start:start + batch_size]
