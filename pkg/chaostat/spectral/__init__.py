from chaostat.spectral.fields import CONVENTION, FilterSpec, GridSpec, RealField, SpectralField
from chaostat.spectral.transforms import (
    apply_filter,
    dealias_mask,
    dealias_two_thirds,
    derivative_symbol,
    fft_forward,
    fft_inverse,
    forward_transform,
    inverse_transform,
    resample,
    spectral_derivative,
    transfer_coefficients,
    truncation_mask,
)

__all__ = [
    "CONVENTION",
    "FilterSpec",
    "GridSpec",
    "RealField",
    "SpectralField",
    "apply_filter",
    "dealias_mask",
    "dealias_two_thirds",
    "derivative_symbol",
    "fft_forward",
    "fft_inverse",
    "forward_transform",
    "inverse_transform",
    "resample",
    "spectral_derivative",
    "transfer_coefficients",
    "truncation_mask",
]
