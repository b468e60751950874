"""
chaostat - Closure terms
Classical eddy viscosity (KS), Smagorinsky (NS) and the learned single-state closure,
exposed as spectral tendencies the coarse steppers add to their right-hand side.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from chaostat.dynamics.navier_stokes import velocity_coeffs
from chaostat.models.single_state import SingleStateModel
from chaostat.spectral.fields import GridSpec, RealField
from chaostat.spectral.transforms import dealias_mask, fft_forward, fft_inverse
from chaostat.utils.errors import GridError

logger = logging.getLogger(__name__)

ExtraTerm = Callable[[np.ndarray], np.ndarray]

NONE = "none"
EDDY_VISCOSITY = "eddy_viscosity"
SMAGORINSKY = "smagorinsky"
LEARNED_SINGLE_STATE = "learned_single_state"
KINDS = (NONE, EDDY_VISCOSITY, SMAGORINSKY, LEARNED_SINGLE_STATE)

DEFAULT_SMAGORINSKY_CS = 0.17


@dataclass(frozen=True)
class ClosureSpec:
    kind: str = NONE
    coeff: float = 0.0
    cs: float = DEFAULT_SMAGORINSKY_CS
    model: Optional[SingleStateModel] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown closure kind {self.kind!r}; expected one of {KINDS}")
        if self.coeff < 0:
            raise ValueError(f"eddy-viscosity coefficient must be >= 0, got {self.coeff}")
        if self.cs < 0:
            raise ValueError(f"Smagorinsky constant must be >= 0, got {self.cs}")
        if self.kind == LEARNED_SINGLE_STATE and self.model is None:
            raise ValueError("learned single-state closure needs a trained model")

    @classmethod
    def none(cls) -> "ClosureSpec":
        return cls(NONE)

    @classmethod
    def eddy_viscosity(cls, coeff: float) -> "ClosureSpec":
        return cls(EDDY_VISCOSITY, coeff=coeff)

    @classmethod
    def smagorinsky(cls, cs: float = DEFAULT_SMAGORINSKY_CS) -> "ClosureSpec":
        return cls(SMAGORINSKY, cs=cs)

    @classmethod
    def learned(cls, model: SingleStateModel) -> "ClosureSpec":
        return cls(LEARNED_SINGLE_STATE, model=model)

    @property
    def label(self) -> str:
        if self.kind == EDDY_VISCOSITY:
            return f"eddy_viscosity(coeff={self.coeff:g})"
        if self.kind == SMAGORINSKY:
            return f"smagorinsky(cs={self.cs:g})"
        return self.kind


# ----------------------------------------------------------------------
# spectral kernels
# ----------------------------------------------------------------------

def eddy_viscosity_coeffs(u_hat: np.ndarray, grid: GridSpec, coeff: float) -> np.ndarray:
    """coeff * u_xx in spectral space"""
    q = grid.wavenumbers()[0]
    return -coeff * q ** 2 * u_hat


def strain_rate_values(w_hat: np.ndarray, grid: GridSpec) -> np.ndarray:
    """|S| = sqrt(2 (S11^2 + S22^2 + 2 S12^2)) in physical space from vorticity coefficients"""
    qx, qy = grid.wavenumbers()
    u_hat, v_hat = velocity_coeffs(w_hat, grid)
    s11 = fft_inverse(1j * qx * u_hat)
    s22 = fft_inverse(1j * qy * v_hat)
    s12 = 0.5 * fft_inverse(1j * qy * u_hat + 1j * qx * v_hat)
    return np.sqrt(2.0 * (s11 ** 2 + s22 ** 2 + 2.0 * s12 ** 2))


def smagorinsky_coeffs(w_hat: np.ndarray, grid: GridSpec, cs: float) -> np.ndarray:
    """div(nu_t grad w) with nu_t = (cs dx)^2 |S|, dealiased on input and output"""
    mask = dealias_mask(grid)
    w_hat = np.where(mask, w_hat, 0.0)
    qx, qy = grid.wavenumbers()
    nu_t = (cs * grid.dx) ** 2 * strain_rate_values(w_hat, grid)
    flux_x = fft_forward(nu_t * fft_inverse(1j * qx * w_hat))
    flux_y = fft_forward(nu_t * fft_inverse(1j * qy * w_hat))
    out = np.where(mask, 1j * qx * flux_x + 1j * qy * flux_y, 0.0)
    out[0, 0] = 0.0
    return out


# ----------------------------------------------------------------------
# field-level operations
# ----------------------------------------------------------------------

def eddy_viscosity_term(u_bar: RealField, coeff: float) -> RealField:
    if u_bar.grid.dim != 1:
        raise GridError("eddy viscosity closure is defined for 1D KS states")
    coeffs = eddy_viscosity_coeffs(fft_forward(u_bar.values), u_bar.grid, coeff)
    return RealField(u_bar.grid, fft_inverse(coeffs))


def strain_rate_magnitude(w_bar: RealField) -> RealField:
    if w_bar.grid.dim != 2:
        raise GridError("strain rate needs a 2D vorticity field")
    return RealField(w_bar.grid, strain_rate_values(fft_forward(w_bar.values), w_bar.grid))


def smagorinsky_term(w_bar: RealField, cs: float = DEFAULT_SMAGORINSKY_CS) -> RealField:
    if w_bar.grid.dim != 2:
        raise GridError("Smagorinsky closure needs a 2D vorticity field")
    return RealField(w_bar.grid, fft_inverse(smagorinsky_coeffs(fft_forward(w_bar.values), w_bar.grid, cs)))


def closure_tendency(spec: ClosureSpec, grid: GridSpec) -> Optional[ExtraTerm]:
    """Spectral tendency for a stepper, or None when the closure adds nothing"""
    if spec.kind == NONE:
        return None
    if spec.kind == EDDY_VISCOSITY:
        if grid.dim != 1:
            raise GridError("eddy viscosity closure is defined for 1D KS states")
        return lambda coeffs: eddy_viscosity_coeffs(coeffs, grid, spec.coeff)
    if spec.kind == SMAGORINSKY:
        if grid.dim != 2:
            raise GridError("Smagorinsky closure needs a 2D grid")
        return lambda coeffs: smagorinsky_coeffs(coeffs, grid, spec.cs)

    model = spec.model
    if model.config.spatial_shape != grid.shape:
        raise GridError(f"learned closure was trained on {model.config.spatial_shape}, coarse grid is {grid.shape}")
    return lambda coeffs: fft_forward(model.predict(fft_inverse(coeffs)))
