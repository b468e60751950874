"""
chaostat - 2D Navier-Stokes (vorticity form)
Streamfunction velocity recovery, dealiased advection, Kolmogorov forcing and a
Strang split step with exact viscous factors and adaptive CFL time steps
"""

import logging
import math
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np

from chaostat.dynamics.kuramoto import check_state
from chaostat.dynamics.params import NsParams, SolverConfig, Trajectory
from chaostat.spectral.fields import GridSpec, RealField, SpectralField
from chaostat.spectral.transforms import dealias_mask, fft_forward, fft_inverse
from chaostat.utils.errors import GridError, NonZeroMeanError

logger = logging.getLogger(__name__)

ExtraTerm = Callable[[np.ndarray], np.ndarray]

SPEED_FLOOR = 1e-8
MEAN_TOL = 1e-10


def _check_domain(grid: GridSpec, p: NsParams):
    if grid.dim != 2:
        raise GridError(f"NS runs on 2D grids, got dim={grid.dim}")
    if not math.isclose(grid.length, p.length, rel_tol=1e-12):
        raise GridError(f"grid length {grid.length} differs from NS length {p.length}")


def _check_zero_mean(coeffs: np.ndarray):
    scale = max(1.0, float(np.max(np.abs(coeffs))))
    if abs(coeffs[0, 0]) > MEAN_TOL * scale:
        raise NonZeroMeanError(f"vorticity mean {abs(coeffs[0, 0]):.3e} is not zero")


@lru_cache(maxsize=32)
def inverse_laplacian(grid: GridSpec) -> np.ndarray:
    """1/|q|^2 with the mean mode set to 0"""
    qx, qy = grid.wavenumbers()
    q2 = qx ** 2 + qy ** 2
    q2[0, 0] = 1.0
    inv = 1.0 / q2
    inv[0, 0] = 0.0
    inv.setflags(write=False)
    return inv


@lru_cache(maxsize=32)
def laplacian_symbol(grid: GridSpec) -> np.ndarray:
    qx, qy = grid.wavenumbers()
    symbol = -(qx ** 2 + qy ** 2)
    symbol.setflags(write=False)
    return symbol


@lru_cache(maxsize=32)
def forcing_curl(grid: GridSpec, wavenumber: int) -> np.ndarray:
    """Spectral curl of (sin(k_f y 2pi/L), 0): -k_f (2pi/L) cos(k_f y 2pi/L)"""
    _, y = grid.coordinates()
    kf = wavenumber * 2.0 * math.pi / grid.length
    out = fft_forward(-kf * np.cos(kf * y))
    out.setflags(write=False)
    return out


def velocity_coeffs(w_hat: np.ndarray, grid: GridSpec) -> Tuple[np.ndarray, np.ndarray]:
    """(u, v) = (d_y psi, -d_x psi) with laplacian(psi) = -w"""
    qx, qy = grid.wavenumbers()
    psi = w_hat * inverse_laplacian(grid)
    return 1j * qy * psi, -1j * qx * psi


def velocity_from_vorticity(w: RealField) -> Tuple[RealField, RealField]:
    """Divergence-free velocity whose curl reproduces w"""
    if w.grid.dim != 2:
        raise GridError("velocity_from_vorticity needs a 2D field")
    w_hat = fft_forward(w.check_finite().values)
    _check_zero_mean(w_hat)
    u_hat, v_hat = velocity_coeffs(w_hat, w.grid)
    return RealField(w.grid, fft_inverse(u_hat)), RealField(w.grid, fft_inverse(v_hat))


def ns_advection_forcing(coeffs: np.ndarray, grid: GridSpec, p: NsParams) -> np.ndarray:
    """-u . grad w (dealiased) plus forcing curl; the mean mode is left untouched"""
    mask = dealias_mask(grid)
    w_hat = np.where(mask, coeffs, 0.0)
    qx, qy = grid.wavenumbers()
    u_hat, v_hat = velocity_coeffs(w_hat, grid)
    u = fft_inverse(u_hat)
    v = fft_inverse(v_hat)
    wx = fft_inverse(1j * qx * w_hat)
    wy = fft_inverse(1j * qy * w_hat)
    out = np.where(mask, -fft_forward(u * wx + v * wy), 0.0)
    if p.forcing_on:
        out = out + forcing_curl(grid, p.forcing_wavenumber)
    out[0, 0] = 0.0
    return out


def ns_rhs(w: SpectralField, p: NsParams) -> SpectralField:
    """dw/dt = -u . grad w + (1/Re) laplacian(w) + curl forcing"""
    _check_domain(w.grid, p)
    _check_zero_mean(w.coeffs)
    viscous = laplacian_symbol(w.grid) * w.coeffs / p.re
    return w.replace(viscous + ns_advection_forcing(w.coeffs, w.grid, p))


class NsSplitStepper:
    """Strang splitting: exact half viscous factor, Heun step for advection/forcing/extra, half viscous factor"""

    def __init__(self, grid: GridSpec, params: NsParams, extra_term: Optional[ExtraTerm] = None):
        _check_domain(grid, params)
        self.grid = grid
        self.params = params
        self.extra_term = extra_term
        self._lap = laplacian_symbol(grid)

    def explicit(self, coeffs: np.ndarray) -> np.ndarray:
        out = ns_advection_forcing(coeffs, self.grid, self.params)
        if self.extra_term is not None:
            extra = self.extra_term(coeffs)
            out = out + extra
            out[0, 0] = 0.0
        return out

    def step(self, coeffs: np.ndarray, dt: float) -> np.ndarray:
        half = np.exp(self._lap * (0.5 * dt / self.params.re))
        c = half * coeffs
        n1 = self.explicit(c)
        predictor = c + dt * n1
        n2 = self.explicit(predictor)
        c = c + 0.5 * dt * (n1 + n2)
        return half * c

    def cfl_dt(self, coeffs: np.ndarray, cfl_number: float) -> float:
        u_hat, v_hat = velocity_coeffs(coeffs, self.grid)
        speed = float(np.max(np.sqrt(fft_inverse(u_hat) ** 2 + fft_inverse(v_hat) ** 2)))
        return cfl_number * self.grid.dx / max(speed, SPEED_FLOOR)


def ns_split_step(w: SpectralField, dt: float, p: NsParams) -> SpectralField:
    """One split step of size dt"""
    _check_zero_mean(w.coeffs)
    return w.replace(NsSplitStepper(w.grid, p).step(w.coeffs, dt))


def ns_integrate(
    w0: RealField,
    cfg: SolverConfig,
    p: NsParams,
    extra_term: Optional[ExtraTerm] = None,
    provenance: str = "FRS",
) -> Trajectory:
    """
    Integrate to cfg.t_end recording every cfg.record_dt (default: only the end state).
    The step is the CFL step (capped by cfg.dt) or the fixed cfg.dt; the last step before
    a record time is shortened to land on it exactly.
    """
    if w0.grid != cfg.grid:
        raise GridError("initial field is not on the solver grid")
    stepper = NsSplitStepper(cfg.grid, p, extra_term)
    coeffs = fft_forward(w0.check_finite().values)
    _check_zero_mean(coeffs)
    coeffs[0, 0] = 0.0

    record_dt = cfg.record_dt if cfg.record_dt is not None else cfg.t_end
    n_records = int(math.floor(cfg.t_end / record_dt + 1e-9))
    record_times = [record_dt * (i + 1) for i in range(n_records)]
    if not record_times or record_times[-1] < cfg.t_end - 1e-12:
        record_times.append(cfg.t_end)

    times = [0.0]
    states = [fft_inverse(coeffs)]
    t = 0.0
    step = 0
    for target in record_times:
        while t < target - 1e-14:
            if cfg.cfl_number is not None:
                dt = stepper.cfl_dt(coeffs, cfg.cfl_number)
                if cfg.dt is not None:
                    dt = min(dt, cfg.dt)
            else:
                dt = cfg.dt
            if t + dt >= target - 1e-14:
                dt = target - t
                coeffs = stepper.step(coeffs, dt)
                t = target
            else:
                coeffs = stepper.step(coeffs, dt)
                t += dt
            step += 1
            check_state(coeffs, t, step)
        times.append(target)
        states.append(fft_inverse(coeffs))

    logger.debug(f"NS {provenance}: {step} steps on {cfg.grid.n}^2, recorded {len(times)} states")
    return Trajectory(cfg.grid, np.array(times), np.stack(states), provenance)
