"""
chaostat - Dynamics parameters and trajectory container
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from chaostat.spectral.fields import GridSpec, RealField
from chaostat.utils.errors import GridError

BLOWUP_THRESHOLD = 1e6


@dataclass(frozen=True)
class KsParams:
    """Kuramoto-Sivashinsky: u_t + u u_x + u_xx + nu u_xxxx = 0"""

    nu: float = 0.01
    length: float = 6.0 * math.pi
    nonlinear: bool = True

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length}")

    def to_dict(self) -> Dict:
        return {"nu": self.nu, "length": self.length, "nonlinear": self.nonlinear}


@dataclass(frozen=True)
class NsParams:
    """2D Navier-Stokes in vorticity form with Kolmogorov forcing (sin(k_f y), 0)"""

    re: float = 100.0
    length: float = 2.0 * math.pi
    forcing_wavenumber: int = 4
    forcing_on: bool = True

    def __post_init__(self):
        if not self.re > 0:
            raise ValueError(f"re must be positive, got {self.re}")
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length}")

    def to_dict(self) -> Dict:
        return {
            "re": self.re,
            "length": self.length,
            "forcing_wavenumber": self.forcing_wavenumber,
            "forcing_on": self.forcing_on,
        }


@dataclass(frozen=True)
class SolverConfig:
    """
    Time-stepping settings.
    KS uses the fixed `dt` and records every `record_every` steps.
    NS uses `cfl_number` when set (with `dt` as an optional step ceiling) and records
    every `record_dt` time units.
    """

    grid: GridSpec
    t_end: float
    dt: Optional[float] = None
    cfl_number: Optional[float] = None
    record_every: int = 1
    record_dt: Optional[float] = None

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.dt is None and self.cfl_number is None:
            raise ValueError("either dt or cfl_number must be set")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.cfl_number is not None and not 0 < self.cfl_number <= 1:
            raise ValueError(f"cfl_number must lie in (0, 1], got {self.cfl_number}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")
        if self.record_dt is not None and not self.record_dt > 0:
            raise ValueError(f"record_dt must be positive, got {self.record_dt}")


@dataclass
class Trajectory:
    """Time-stamped states on one grid; provenance is FRS, CGS or FNO"""

    grid: GridSpec
    times: np.ndarray
    values: np.ndarray = field(repr=False)
    provenance: str = "FRS"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.times),) + self.grid.shape:
            raise GridError(
                f"trajectory values shape {self.values.shape} does not match "
                f"{len(self.times)} states on grid {self.grid.shape}"
            )
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self) -> Iterator[Tuple[float, RealField]]:
        for t, v in zip(self.times, self.values):
            yield float(t), RealField(self.grid, v)

    @property
    def states(self) -> List[RealField]:
        return [RealField(self.grid, v) for v in self.values]

    def state_at(self, index: int) -> RealField:
        return RealField(self.grid, self.values[index])

    def window(self, t_start: float, t_stop: float) -> "Trajectory":
        """States with t_start <= t <= t_stop"""
        keep = (self.times >= t_start - 1e-12) & (self.times <= t_stop + 1e-12)
        return Trajectory(self.grid, self.times[keep], self.values[keep], self.provenance)
