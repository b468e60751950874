"""
chaostat - Spectral transforms
Forward/inverse Fourier transforms, spectral derivatives, 2/3 dealiasing,
Fourier truncation filter and spectral regridding
"""

import logging
from functools import lru_cache
from typing import Union

import numpy as np

from chaostat.spectral.fields import FilterSpec, GridSpec, RealField, SpectralField
from chaostat.utils.errors import FilterError, GridError, HermitianSymmetryError, NonFiniteError

logger = logging.getLogger(__name__)

IMAG_RESIDUE_TOL = 1e-10


# ----------------------------------------------------------------------
# array-level kernels (used directly by the solvers' inner loops)
# ----------------------------------------------------------------------

def fft_forward(values: np.ndarray) -> np.ndarray:
    """Forward-normalized transform of a real or complex array over all axes"""
    return np.fft.fftn(values) / values.size


def fft_inverse(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of `fft_forward`, real part only"""
    return np.fft.ifftn(coeffs).real * coeffs.size


@lru_cache(maxsize=64)
def dealias_mask(grid: GridSpec) -> np.ndarray:
    """Boolean mask of modes with every |k_axis| <= n/3"""
    mask = np.ones(grid.shape, dtype=bool)
    for k in grid.integer_wavenumbers():
        mask &= 3 * np.abs(k) <= grid.n
    mask.setflags(write=False)
    return mask


@lru_cache(maxsize=64)
def truncation_mask(grid: GridSpec, cutoff: int) -> np.ndarray:
    """Boolean mask of modes with |k|_inf <= cutoff"""
    mask = np.ones(grid.shape, dtype=bool)
    for k in grid.integer_wavenumbers():
        mask &= np.abs(k) <= cutoff
    mask.setflags(write=False)
    return mask


@lru_cache(maxsize=128)
def derivative_symbol(grid: GridSpec, order: int, axis: int = 0) -> np.ndarray:
    """Multiplier (i q)^order along `axis`, Nyquist zeroed for odd orders"""
    if order < 0:
        raise ValueError(f"derivative order must be non-negative, got {order}")
    if not 0 <= axis < grid.dim:
        raise GridError(f"axis {axis} out of range for a {grid.dim}D grid")
    q = grid.wavenumbers()[axis]
    symbol = np.ones(grid.shape, dtype=np.complex128)
    for _ in range(order):
        symbol = symbol * (1j * q)
    if order % 2 == 1:
        nyquist = grid.integer_wavenumbers()[axis] == -grid.nyquist
        symbol = np.where(nyquist, 0.0, symbol)
    symbol = np.asarray(symbol, dtype=np.complex128)
    symbol.setflags(write=False)
    return symbol


def _transfer_axis(coeffs: np.ndarray, axis: int, n_dst: int, cutoff: int) -> np.ndarray:
    """Copy retained modes along one axis into an array of length n_dst"""
    n_src = coeffs.shape[axis]
    k_src = np.fft.fftfreq(n_src, d=1.0 / n_src).round().astype(np.int64)
    src = np.moveaxis(coeffs, axis, 0)
    out = np.zeros((n_dst,) + src.shape[1:], dtype=np.complex128)

    keep = np.abs(k_src) <= cutoff
    split_nyquist = n_dst > n_src and cutoff >= n_src // 2
    if split_nyquist:
        keep &= k_src != -(n_src // 2)

    np.add.at(out, k_src[keep] % n_dst, src[keep])

    if split_nyquist:
        # the source Nyquist bin stands for both +n/2 and -n/2
        half = 0.5 * src[n_src // 2]
        out[(n_src // 2) % n_dst] += half
        out[(-(n_src // 2)) % n_dst] += half

    return np.moveaxis(out, 0, axis)


def transfer_coefficients(coeffs: np.ndarray, n_dst: int, cutoff: int) -> np.ndarray:
    """Truncate to |k|_inf <= cutoff and re-embed on an n_dst grid, axis by axis"""
    out = coeffs
    for axis in range(coeffs.ndim):
        out = _transfer_axis(out, axis, n_dst, cutoff)
    return out


# ----------------------------------------------------------------------
# field-level operations
# ----------------------------------------------------------------------

def forward_transform(f: RealField) -> SpectralField:
    """Fourier coefficients of f under the forward-normalized convention"""
    if not np.all(np.isfinite(f.values)):
        raise NonFiniteError("forward_transform received non-finite samples")
    return SpectralField(f.grid, fft_forward(f.values))


def inverse_transform(s: SpectralField) -> RealField:
    """Real field from Hermitian coefficients; rejects coefficients of complex fields"""
    values = np.fft.ifftn(s.coeffs) * s.coeffs.size
    scale = max(1.0, float(np.max(np.abs(values.real))) if values.size else 1.0)
    residue = float(np.max(np.abs(values.imag))) if values.size else 0.0
    if residue > IMAG_RESIDUE_TOL * scale:
        raise HermitianSymmetryError(
            f"imaginary residue {residue:.3e} exceeds tolerance; coefficients are not Hermitian"
        )
    return RealField(s.grid, values.real)


def spectral_derivative(s: SpectralField, order: int, axis: int = 0) -> SpectralField:
    return s.replace(s.coeffs * derivative_symbol(s.grid, order, axis))


def dealias_two_thirds(s: SpectralField) -> SpectralField:
    return s.replace(np.where(dealias_mask(s.grid), s.coeffs, 0.0))


def apply_filter(f: Union[RealField, SpectralField], spec: FilterSpec) -> Union[RealField, SpectralField]:
    """
    Fourier-mode truncation F = P: keep |k|_inf <= cutoff and sample on spec.target.
    Returns the same kind of field it was given.
    """
    source_grid = f.grid
    if spec.target.dim != source_grid.dim or spec.target.length != source_grid.length:
        raise FilterError("filter target grid must share dimension and domain length with the source")
    if spec.cutoff > source_grid.nyquist:
        raise FilterError(
            f"cutoff {spec.cutoff} exceeds source Nyquist {source_grid.nyquist}"
        )

    coeffs = f.coeffs if isinstance(f, SpectralField) else forward_transform(f).coeffs
    out = SpectralField(spec.target, transfer_coefficients(coeffs, spec.target.n, spec.cutoff))
    if isinstance(f, SpectralField):
        return out
    return inverse_transform(out)


def resample(f: RealField, target: GridSpec) -> RealField:
    """Spectral interpolation between grids (zero-pad or truncate)"""
    if target.dim != f.grid.dim or target.length != f.grid.length:
        raise GridError("resample requires matching dimension and domain length")
    if target.n == f.grid.n:
        return f
    cutoff = min(f.grid.n, target.n) // 2
    coeffs = transfer_coefficients(forward_transform(f).coeffs, target.n, cutoff)
    return inverse_transform(SpectralField(target, coeffs))
