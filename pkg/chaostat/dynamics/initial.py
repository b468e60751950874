"""
chaostat - Random initial conditions
"""

from typing import Optional

import numpy as np

from chaostat.spectral.fields import GridSpec, RealField
from chaostat.spectral.transforms import fft_inverse, truncation_mask


def random_initial_condition(
    grid: GridSpec,
    seed: int,
    n_modes: int = 8,
    amplitude: float = 1.0,
) -> RealField:
    """Smooth zero-mean random field band-limited to |k|_inf <= n_modes, RMS = amplitude"""
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    coeffs = np.where(truncation_mask(grid, min(n_modes, grid.nyquist - 1)), coeffs, 0.0)
    coeffs[(0,) * grid.dim] = 0.0
    values = fft_inverse(coeffs)
    rms = float(np.sqrt(np.mean(values ** 2)))
    if rms > 0:
        values *= amplitude / rms
    return RealField(grid, values)


def noisy_copy(field: RealField, sigma_ratio: float, rng: np.random.Generator,
               zero_mean: Optional[bool] = False) -> RealField:
    """Add Gaussian noise of standard deviation sigma_ratio * RMS(field) in physical space"""
    rms = float(np.sqrt(np.mean(field.values ** 2)))
    noise = rng.normal(0.0, sigma_ratio * rms, size=field.grid.shape)
    if zero_mean:
        noise -= noise.mean()
    return RealField(field.grid, field.values + noise)
