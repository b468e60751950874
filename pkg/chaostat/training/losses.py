"""
chaostat - Training losses
Masked data loss against labelled frames, the PDE-residual loss on predicted frames,
and the relative L2 error used for test reporting.
"""

import logging
from functools import lru_cache
from typing import Dict, Optional, Tuple, Union

import numpy as np

from chaostat.autodiff import tensor as ad
from chaostat.autodiff.tensor import DiffArray, Tape
from chaostat.dynamics.navier_stokes import forcing_curl, inverse_laplacian
from chaostat.dynamics.params import KsParams, NsParams
from chaostat.models.fno import FnoConfig, FnoParams, encode_inputs, fno_apply, fno_predict
from chaostat.spectral.fields import GridSpec
from chaostat.spectral.transforms import dealias_mask, fft_inverse
from chaostat.training.datasets import PairDataset, PdeInputSet
from chaostat.utils.errors import GridError, NumericalError

logger = logging.getLogger(__name__)

Params = Union[KsParams, NsParams]


def _per_sample_rms(diff: DiffArray, weights: np.ndarray) -> DiffArray:
    """sqrt of the weighted mean of diff^2 over all non-batch axes, then mean over the batch"""
    sq = ad.mul(diff * diff, weights)
    per_sample = ad.reduce_sum(sq, axis=tuple(range(1, len(diff.shape))))
    return ad.mean(ad.sqrt(per_sample))


def loss_data(leaves: Dict[str, DiffArray], cfg: FnoConfig, batch: PairDataset) -> DiffArray:
    """Mean over the batch of per-sample space-time RMS errors on the labelled frames"""
    if len(batch) == 0:
        raise ValueError("data loss needs a non-empty batch")
    if batch.t_frames != cfg.t_frames:
        raise GridError(f"labels have {batch.t_frames} frames, the model predicts {cfg.t_frames}")
    tape = next(iter(leaves.values())).tape
    pred = fno_apply(leaves, tape.constant(encode_inputs(batch.inputs, cfg)), cfg)
    mask = batch.masks.reshape(batch.masks.shape + (1,) * cfg.spatial_dim).astype(np.float64)
    counts = batch.masks.sum(axis=1) * batch.grid.size
    weights = np.broadcast_to(mask / counts.reshape((-1,) + (1,) * (cfg.spatial_dim + 1)), pred.shape).copy()
    return _per_sample_rms(pred - batch.labels * mask, weights)


# ----------------------------------------------------------------------
# PDE residual
# ----------------------------------------------------------------------

def _spectral_apply(coeffs: DiffArray, symbol: np.ndarray, axes: Tuple[int, ...]) -> DiffArray:
    multiplier = np.broadcast_to(symbol, coeffs.shape).copy()
    return ad.real(ad.ifft(ad.mul(coeffs, multiplier), axes=axes))


@lru_cache(maxsize=16)
def _ks_symbols(grid: GridSpec, nu: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    q = grid.wavenumbers()[0]
    mask = dealias_mask(grid).astype(np.float64)
    linear = -q ** 2 + nu * q ** 4
    half_dx = 0.5j * q * mask
    return mask, linear.astype(np.complex128), half_dx


@lru_cache(maxsize=16)
def _ns_symbols(grid: GridSpec, re: float) -> Dict[str, np.ndarray]:
    qx, qy = grid.wavenumbers()
    mask = dealias_mask(grid).astype(np.float64)
    inv = inverse_laplacian(grid)
    return {
        "mask": mask,
        "u": 1j * qy * inv * mask,
        "v": -1j * qx * inv * mask,
        "dx": 1j * qx * mask,
        "dy": 1j * qy * mask,
        "viscous": (qx ** 2 + qy ** 2) / re + 0j,
    }


def _time_derivative(frames: DiffArray, dt: float) -> DiffArray:
    """Second-order differences along axis 1: central inside, one-sided at both ends"""
    n = frames.shape[1]
    interior = ad.scale(ad.take(frames, 1, 2, n) - ad.take(frames, 1, 0, n - 2), 0.5 / dt)
    f0, f1, f2 = (ad.take(frames, 1, i, i + 1) for i in range(3))
    first = ad.scale(ad.scale(f0, -3.0) + ad.scale(f1, 4.0) - f2, 0.5 / dt)
    l0, l1, l2 = (ad.take(frames, 1, n - 1 - i, n - i) for i in range(3))
    last = ad.scale(ad.scale(l0, 3.0) - ad.scale(l1, 4.0) + l2, 0.5 / dt)
    return ad.concat([first, interior, last], axis=1)


def pde_residual(frames: DiffArray, grid: GridSpec, params: Params, dt: float) -> DiffArray:
    """
    Residual of the PDE on frames (batch, F, *spatial) spaced dt apart:
    KS  u_t + (u^2/2)_x + u_xx + nu u_xxxx,
    NS  w_t + u . grad w - lap(w)/Re - curl f.
    Nonlinear terms are 2/3-dealiased.
    """
    if frames.shape[1] < 3:
        raise ValueError(f"PDE residual needs at least 3 frames, got {frames.shape[1]}")
    if tuple(frames.shape[2:]) != grid.shape:
        raise GridError(f"frames {frames.shape} are not on grid {grid.shape}")
    axes = tuple(range(2, 2 + grid.dim))
    u_t = _time_derivative(frames, dt)
    coeffs = ad.fft(frames, axes=axes)

    if isinstance(params, KsParams):
        mask, linear, half_dx = _ks_symbols(grid, params.nu)
        u = _spectral_apply(coeffs, mask, axes)
        flux = _spectral_apply(ad.fft(u * u, axes=axes), half_dx, axes)
        return u_t + flux + _spectral_apply(coeffs, linear, axes)

    s = _ns_symbols(grid, params.re)
    u = _spectral_apply(coeffs, s["u"], axes)
    v = _spectral_apply(coeffs, s["v"], axes)
    wx = _spectral_apply(coeffs, s["dx"], axes)
    wy = _spectral_apply(coeffs, s["dy"], axes)
    advection = _spectral_apply(ad.fft(u * wx + v * wy, axes=axes), s["mask"], axes)
    residual = u_t + advection + _spectral_apply(coeffs, s["viscous"], axes)
    if params.forcing_on:
        force = fft_inverse(np.asarray(forcing_curl(grid, params.forcing_wavenumber)))
        residual = residual - np.broadcast_to(force, residual.shape).copy()
    return residual


def loss_pde(leaves: Dict[str, DiffArray], cfg: FnoConfig, batch: PdeInputSet, params: Params) -> DiffArray:
    """Space-time RMS of the residual on [v0, predicted frames], averaged over the batch"""
    if cfg.t_frames < 3:
        raise ValueError(f"PDE loss needs T >= 3 frames, got {cfg.t_frames}")
    if len(batch) == 0:
        raise ValueError("PDE loss needs a non-empty batch")
    tape = next(iter(leaves.values())).tape
    pred = fno_apply(leaves, tape.constant(encode_inputs(batch.inputs, cfg)), cfg)
    return pde_loss_of_frames(ad.concat([tape.constant(batch.inputs[:, None]), pred], axis=1),
                              batch.grid, params, cfg.h / cfg.t_frames)


def pde_loss_of_frames(frames: DiffArray, grid: GridSpec, params: Params, dt: float) -> DiffArray:
    residual = pde_residual(frames, grid, params, dt)
    weights = np.full(residual.shape, 1.0 / np.prod(residual.shape[1:]))
    return _per_sample_rms(residual, weights)


def frames_residual_norm(frames: np.ndarray, grid: GridSpec, params: Params, dt: float) -> float:
    """Residual loss of plain frames (batch, F, *spatial), bypassing any model"""
    tape = Tape()
    return float(pde_loss_of_frames(tape.constant(np.asarray(frames, dtype=np.float64)), grid, params, dt).value)


# ----------------------------------------------------------------------
# evaluation helpers
# ----------------------------------------------------------------------

def evaluate_data_loss(params: FnoParams, batch: PairDataset) -> float:
    tape = Tape()
    return float(loss_data(ad.parameters_on(tape, params.arrays, trainable=()), params.config, batch).value)


def evaluate_pde_loss(params: FnoParams, batch: PdeInputSet, equation: Params) -> float:
    tape = Tape()
    return float(loss_pde(ad.parameters_on(tape, params.arrays, trainable=()), params.config, batch, equation).value)


def relative_l2_error(pred: np.ndarray, truth: np.ndarray, masks: Optional[np.ndarray] = None) -> float:
    """
    ||pred - truth|| / ||truth|| per frame, averaged over frames and items.
    Arrays are (items, frames, *spatial); masks (items, frames) selects frames.
    """
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise GridError(f"prediction shape {pred.shape} does not match truth {truth.shape}")
    axes = tuple(range(2, truth.ndim))
    num = np.sqrt(np.sum((pred - truth) ** 2, axis=axes))
    den = np.sqrt(np.sum(truth ** 2, axis=axes))
    selected = np.ones(den.shape, dtype=bool) if masks is None else np.asarray(masks, dtype=bool)
    if np.any(den[selected] == 0):
        raise NumericalError("relative error undefined: a truth frame has zero norm")
    return float(np.mean(num[selected] / den[selected]))


def holdout_relative_error(params: FnoParams, dataset: PairDataset) -> float:
    """One-step relative L2 error of the model on the labelled frames of a dataset"""
    pred = fno_predict(params, dataset.inputs)
    return relative_l2_error(pred, dataset.labels, dataset.masks)
