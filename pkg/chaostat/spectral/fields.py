"""
chaostat - Field containers
Uniform periodic grids, physical-space fields and their Fourier coefficients
"""

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from chaostat.utils.errors import FilterError, GridError, NonFiniteError

# Forward transform is normalized: u_hat_k = (1/N) sum_j f(x_j) exp(-i q_k x_j)
CONVENTION = "forward-normalized"


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid with `n` points per axis on [0, length)^dim"""

    dim: int
    n: int
    length: float = 2.0 * math.pi

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise GridError(f"dim must be 1 or 2, got {self.dim}")
        if self.n < 4 or self.n % 2 != 0 or (self.n & (self.n - 1)) != 0:
            raise GridError(f"n must be a power of two >= 4, got {self.n}")
        if not self.length > 0:
            raise GridError(f"length must be positive, got {self.length}")

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n ** self.dim

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def nyquist(self) -> int:
        return self.n // 2

    def coordinates(self) -> Tuple[np.ndarray, ...]:
        """Grid coordinates, one array per axis, broadcast to `shape`"""
        x = np.arange(self.n) * self.dx
        if self.dim == 1:
            return (x,)
        return tuple(np.meshgrid(x, x, indexing="ij"))

    def integer_wavenumbers(self) -> Tuple[np.ndarray, ...]:
        """Integer wavenumbers in numpy FFT order, broadcast to `shape`"""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n).round().astype(np.int64)
        if self.dim == 1:
            return (k,)
        return tuple(np.meshgrid(k, k, indexing="ij"))

    def wavenumbers(self) -> Tuple[np.ndarray, ...]:
        """Physical wavenumbers q = 2*pi*k/length"""
        scale = 2.0 * math.pi / self.length
        return tuple(scale * k.astype(np.float64) for k in self.integer_wavenumbers())

    def with_n(self, n: int) -> "GridSpec":
        return GridSpec(dim=self.dim, n=n, length=self.length)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "n": self.n, "length": self.length}

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        return cls(dim=int(data["dim"]), n=int(data["n"]), length=float(data["length"]))


@dataclass(frozen=True)
class RealField:
    """Real samples on a grid, row-major"""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != self.grid.shape:
            raise GridError(f"values shape {values.shape} does not match grid shape {self.grid.shape}")
        object.__setattr__(self, "values", values)

    def check_finite(self) -> "RealField":
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteError("field contains non-finite values")
        return self

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def mean_square(self) -> float:
        return float(np.mean(self.values ** 2))


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients in numpy FFT layout under the forward-normalized convention"""

    grid: GridSpec
    coeffs: np.ndarray = field(repr=False)
    convention: str = CONVENTION

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if coeffs.shape != self.grid.shape:
            raise GridError(f"coeffs shape {coeffs.shape} does not match grid shape {self.grid.shape}")
        object.__setattr__(self, "coeffs", coeffs)

    def coefficient(self, *k: int) -> complex:
        """Coefficient for integer wavenumber tuple k"""
        index = tuple(int(kk) % self.grid.n for kk in k)
        return complex(self.coeffs[index])

    def replace(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coeffs, self.convention)


@dataclass(frozen=True)
class FilterSpec:
    """Fourier truncation keeping |k|_inf <= cutoff, sampled on `target`"""

    cutoff: int
    target: GridSpec

    def __post_init__(self):
        if self.cutoff < 0:
            raise FilterError(f"cutoff must be non-negative, got {self.cutoff}")
        if self.cutoff > self.target.nyquist:
            raise FilterError(
                f"cutoff {self.cutoff} exceeds target Nyquist {self.target.nyquist}"
            )
