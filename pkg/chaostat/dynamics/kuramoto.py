"""
chaostat - Kuramoto-Sivashinsky dynamics
Pseudo-spectral right-hand side, ETDRK4 time stepping and the truncated Galerkin oracle
"""

import logging
import math
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np

from chaostat.dynamics.params import BLOWUP_THRESHOLD, KsParams, SolverConfig, Trajectory
from chaostat.spectral.fields import GridSpec, RealField, SpectralField
from chaostat.spectral.transforms import dealias_mask, fft_forward, fft_inverse
from chaostat.utils.errors import GridError, SolverBlowUpError

logger = logging.getLogger(__name__)

# Extra spectral tendency added to the nonlinear part (closure terms)
ExtraTerm = Callable[[np.ndarray], np.ndarray]

CONTOUR_POINTS = 32


def _check_domain(grid: GridSpec, p: KsParams):
    if grid.dim != 1:
        raise GridError(f"KS runs on 1D grids, got dim={grid.dim}")
    if not math.isclose(grid.length, p.length, rel_tol=1e-12):
        raise GridError(f"grid length {grid.length} differs from KS length {p.length}")


@lru_cache(maxsize=32)
def ks_linear_symbol(grid: GridSpec, nu: float) -> np.ndarray:
    """lambda_k = q^2 - nu q^4"""
    q = grid.wavenumbers()[0]
    symbol = q ** 2 - nu * q ** 4
    symbol.setflags(write=False)
    return symbol


def ks_nonlinear(coeffs: np.ndarray, grid: GridSpec, p: KsParams) -> np.ndarray:
    """-(u^2/2)_x in spectral space, 2/3-dealiased on input and output"""
    if not p.nonlinear:
        return np.zeros_like(coeffs)
    mask = dealias_mask(grid)
    u = fft_inverse(np.where(mask, coeffs, 0.0))
    q = grid.wavenumbers()[0]
    return np.where(mask, -0.5j * q * fft_forward(u * u), 0.0)


def ks_rhs(u: SpectralField, p: KsParams) -> SpectralField:
    """A u = -(u^2/2)_x - u_xx - nu u_xxxx"""
    _check_domain(u.grid, p)
    linear = ks_linear_symbol(u.grid, p.nu) * u.coeffs
    return u.replace(linear + ks_nonlinear(u.coeffs, u.grid, p))


@lru_cache(maxsize=32)
def etdrk4_coefficients(grid: GridSpec, dt: float, nu: float) -> Tuple[np.ndarray, ...]:
    """
    Exponential factors and phi-coefficients, evaluated by averaging over a circle of
    CONTOUR_POINTS points around each dt*lambda to avoid cancellation near zero.
    """
    lam = ks_linear_symbol(grid, nu)
    L = dt * lam
    E = np.exp(L)
    E2 = np.exp(L / 2.0)

    roots = np.exp(2j * np.pi * (np.arange(CONTOUR_POINTS) + 0.5) / CONTOUR_POINTS)
    LR = L[:, None] + roots[None, :]
    eLR = np.exp(LR)
    Q = dt * np.mean((np.exp(LR / 2.0) - 1.0) / LR, axis=1).real
    f1 = dt * np.mean((-4.0 - LR + eLR * (4.0 - 3.0 * LR + LR ** 2)) / LR ** 3, axis=1).real
    f2 = dt * np.mean((2.0 + LR + eLR * (LR - 2.0)) / LR ** 3, axis=1).real
    f3 = dt * np.mean((-4.0 - 3.0 * LR - LR ** 2 + eLR * (4.0 - LR)) / LR ** 3, axis=1).real

    for arr in (E, E2, Q, f1, f2, f3):
        arr.setflags(write=False)
    return E, E2, Q, f1, f2, f3


class KsEtdrk4Stepper:
    """ETDRK4 integrator for KS with an optional extra tendency (closure)"""

    def __init__(self, grid: GridSpec, dt: float, params: KsParams, extra_term: Optional[ExtraTerm] = None):
        _check_domain(grid, params)
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.grid = grid
        self.dt = dt
        self.params = params
        self.extra_term = extra_term
        self.E, self.E2, self.Q, self.f1, self.f2, self.f3 = etdrk4_coefficients(grid, dt, params.nu)

    def nonlinear(self, coeffs: np.ndarray) -> np.ndarray:
        out = ks_nonlinear(coeffs, self.grid, self.params)
        if self.extra_term is not None:
            out = out + self.extra_term(coeffs)
        return out

    def step(self, v: np.ndarray) -> np.ndarray:
        Nv = self.nonlinear(v)
        a = self.E2 * v + self.Q * Nv
        Na = self.nonlinear(a)
        b = self.E2 * v + self.Q * Na
        Nb = self.nonlinear(b)
        c = self.E2 * a + self.Q * (2.0 * Nb - Nv)
        Nc = self.nonlinear(c)
        return self.E * v + Nv * self.f1 + 2.0 * (Na + Nb) * self.f2 + Nc * self.f3


def check_state(coeffs: np.ndarray, time: float, step: int):
    """Blow-up guard: non-finite state or max|u| above BLOWUP_THRESHOLD"""
    bound = float(np.sum(np.abs(coeffs)))
    if not math.isfinite(bound):
        raise SolverBlowUpError("non-finite state", time, step)
    if bound > BLOWUP_THRESHOLD:
        peak = float(np.max(np.abs(fft_inverse(coeffs))))
        if peak > BLOWUP_THRESHOLD:
            raise SolverBlowUpError(f"max|u|={peak:.3e} exceeds {BLOWUP_THRESHOLD:.0e}", time, step)


def ks_etdrk4_step(u: SpectralField, dt: float, p: KsParams, step_index: int = 0) -> SpectralField:
    """One ETDRK4 step"""
    check_state(u.coeffs, step_index * dt, step_index)
    out = KsEtdrk4Stepper(u.grid, dt, p).step(u.coeffs)
    check_state(out, (step_index + 1) * dt, step_index + 1)
    return u.replace(out)


def ks_integrate(
    u0: RealField,
    cfg: SolverConfig,
    p: KsParams,
    extra_term: Optional[ExtraTerm] = None,
    provenance: str = "FRS",
) -> Trajectory:
    """Integrate KS to cfg.t_end with fixed dt, recording every cfg.record_every steps"""
    if u0.grid != cfg.grid:
        raise GridError("initial field is not on the solver grid")
    if cfg.dt is None:
        raise ValueError("KS integration needs a fixed dt")

    n_steps = int(round(cfg.t_end / cfg.dt))
    stepper = KsEtdrk4Stepper(cfg.grid, cfg.dt, p, extra_term)
    v = fft_forward(u0.check_finite().values)

    times = [0.0]
    states = [u0.values.copy()]
    for step in range(1, n_steps + 1):
        v = stepper.step(v)
        t = step * cfg.dt
        check_state(v, t, step)
        if step % cfg.record_every == 0:
            times.append(t)
            states.append(fft_inverse(v))

    logger.debug(f"KS {provenance}: {n_steps} steps on n={cfg.grid.n}, recorded {len(times)} states")
    return Trajectory(cfg.grid, np.array(times), np.stack(states), provenance)


# ----------------------------------------------------------------------
# truncated Galerkin oracle: modes k = -M..M stored at index k + M
# ----------------------------------------------------------------------

def spectral_to_modes(s: SpectralField, n_modes: int) -> np.ndarray:
    if n_modes > s.grid.nyquist - 1:
        raise ValueError(f"n_modes {n_modes} too large for n={s.grid.n}")
    k = np.arange(-n_modes, n_modes + 1)
    return s.coeffs[k % s.grid.n].copy()


def modes_to_spectral(z: np.ndarray, grid: GridSpec) -> SpectralField:
    n_modes = (len(z) - 1) // 2
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    k = np.arange(-n_modes, n_modes + 1)
    coeffs[k % grid.n] = z
    return SpectralField(grid, coeffs)


def ks_galerkin_rhs(z: np.ndarray, p: KsParams, n_modes: int) -> np.ndarray:
    """
    dz_k/dt = (q_k^2 - nu q_k^4) z_k - (i q_k / 2) sum_{j+l=k} z_j z_l over |j|, |l| <= n_modes,
    with q_k = 2 pi k / L.
    """
    z = np.asarray(z, dtype=np.complex128)
    if z.shape != (2 * n_modes + 1,):
        raise ValueError(f"expected {2 * n_modes + 1} modes, got shape {z.shape}")
    k = np.arange(-n_modes, n_modes + 1)
    q = 2.0 * math.pi * k / p.length
    linear = (q ** 2 - p.nu * q ** 4) * z
    if not p.nonlinear:
        return linear
    # direct O(M^2) convolution; entry m of the full result is wavenumber m - 2M
    conv = np.convolve(z, z)[n_modes:3 * n_modes + 1]
    return linear - 0.5j * q * conv


def ks_galerkin_integrate(z0: np.ndarray, dt: float, t_end: float, p: KsParams) -> np.ndarray:
    """Classical RK4 on the truncated mode ODE"""
    n_modes = (len(z0) - 1) // 2
    z = np.asarray(z0, dtype=np.complex128).copy()
    n_steps = int(round(t_end / dt))
    for _ in range(n_steps):
        k1 = ks_galerkin_rhs(z, p, n_modes)
        k2 = ks_galerkin_rhs(z + 0.5 * dt * k1, p, n_modes)
        k3 = ks_galerkin_rhs(z + 0.5 * dt * k2, p, n_modes)
        k4 = ks_galerkin_rhs(z + dt * k3, p, n_modes)
        z = z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return z
