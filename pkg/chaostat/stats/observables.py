"""
chaostat - Physical observables
Energy spectrum, spatial correlation, autocorrelation coefficient and scalar statistics
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from chaostat.spectral.fields import GridSpec, RealField
from chaostat.spectral.transforms import fft_forward
from chaostat.stats.measure import Mode
from chaostat.utils.errors import GridError

logger = logging.getLogger(__name__)


def energy_spectrum(u: RealField) -> np.ndarray:
    """
    Entry k0 holds the energy in the |k|_1 = k0 shell (1D: |u_k|^2 + |u_-k|^2).
    The entries sum to the mean square of u.
    """
    power = np.abs(fft_forward(u.values)) ** 2
    shells = sum(np.abs(k) for k in u.grid.integer_wavenumbers())
    return np.bincount(shells.ravel(), weights=power.ravel())


def spatial_correlation(u: RealField) -> np.ndarray:
    """O_s(h) = integral of u(x) u(x + h) dx at every grid shift h (correlation theorem)"""
    spectrum = np.abs(np.fft.fftn(u.values)) ** 2
    return u.grid.dx ** u.grid.dim * np.real(np.fft.ifftn(spectrum))


def spatial_correlation_direct(u: RealField) -> np.ndarray:
    """O(N^2) shifted-product sum of `spatial_correlation`"""
    out = np.zeros(u.grid.shape)
    for shift in np.ndindex(*u.grid.shape):
        shifted = np.roll(u.values, tuple(-s for s in shift), axis=tuple(range(u.grid.dim)))
        out[shift] = np.sum(u.values * shifted)
    return u.grid.dx ** u.grid.dim * out


def autocorrelation_coeff(u: RealField) -> np.ndarray:
    """O_a(k) = |(O_s)^_k|^2 = volume^2 |u_k|^4, full transform layout"""
    return np.abs(fft_forward(spatial_correlation(u))) ** 2


def mode_values(table: np.ndarray, grid: GridSpec, modes: Sequence[Mode]) -> np.ndarray:
    index = tuple(np.array([m[d] % grid.n for m in modes]) for d in range(grid.dim))
    return table[index]


def dissipation(values: np.ndarray, grid: GridSpec, coefficient: float, gradient: bool = False) -> np.ndarray:
    """
    Per-snapshot coefficient * mean(u^2); with gradient=True the mean of |grad u|^2 is used instead.
    values: (samples, *spatial)
    """
    axes = tuple(range(1, grid.dim + 1))
    if not gradient:
        return coefficient * np.mean(values ** 2, axis=axes)
    coeffs = np.fft.fftn(values, axes=axes) / grid.size
    q2 = sum(q ** 2 for q in grid.wavenumbers())
    return coefficient * np.sum(q2 * np.abs(coeffs) ** 2, axis=axes)


@dataclass
class ScalarStatistics:
    values: np.ndarray = field(repr=False)
    dissipation: np.ndarray = field(repr=False)
    kinetic_energy: np.ndarray = field(repr=False)
    variance: float = 0.0


def scalar_statistics(
    states: np.ndarray,
    grid: GridSpec,
    coefficient: float,
    mean_field: Optional[np.ndarray] = None,
    gradient_dissipation: bool = False,
) -> ScalarStatistics:
    """
    Pointwise values, per-snapshot dissipation and kinetic energy mean((u - u_bar)^2), and the
    variance of pointwise values over a window of states (samples, *spatial).
    u_bar defaults to the time mean of the window itself.
    """
    states = np.asarray(states, dtype=np.float64)
    if states.shape[1:] != grid.shape:
        raise GridError(f"states shape {states.shape} does not match grid {grid.shape}")
    if states.shape[0] < 2:
        raise ValueError(f"scalar statistics need at least 2 samples, got {states.shape[0]}")
    mean_field = states.mean(axis=0) if mean_field is None else np.asarray(mean_field, dtype=np.float64)
    axes = tuple(range(1, grid.dim + 1))
    return ScalarStatistics(
        values=states.ravel(),
        dissipation=dissipation(states, grid, coefficient, gradient_dissipation),
        kinetic_energy=np.mean((states - mean_field) ** 2, axis=axes),
        variance=float(np.var(states)),
    )
