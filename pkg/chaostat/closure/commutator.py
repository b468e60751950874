"""
chaostat - Commutator targets and the single-state closure
A-priori closure targets (FA - AF)u, least-squares training of the single-state network,
and the lower bound that no single-state closure can beat when filtered states coincide.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from chaostat.autodiff import tensor as ad
from chaostat.autodiff.optim import AdamW
from chaostat.autodiff.tensor import Tape
from chaostat.dynamics.kuramoto import ks_rhs
from chaostat.dynamics.navier_stokes import ns_rhs
from chaostat.dynamics.params import KsParams, NsParams
from chaostat.models.single_state import (
    SingleStateConfig,
    SingleStateModel,
    init_single_state,
    single_state_apply,
)
from chaostat.spectral.fields import FilterSpec, GridSpec, RealField, SpectralField
from chaostat.spectral.transforms import fft_forward, fft_inverse, transfer_coefficients, truncation_mask
from chaostat.utils.errors import FilterError, GridError, TrainingDivergedError

logger = logging.getLogger(__name__)

Params = Union[KsParams, NsParams]

COARSE = "coarse"
FINE = "fine"
FILTER_MATCH_TOL = 1e-12


@dataclass(frozen=True)
class CommutatorSample:
    filtered_state: RealField
    target: RealField

    def __post_init__(self):
        if self.filtered_state.grid != self.target.grid:
            raise GridError("filtered state and commutator target must share the coarse grid")


def apply_operator(coeffs: np.ndarray, grid: GridSpec, params: Params) -> np.ndarray:
    """Right-hand side A of the PDE in spectral space (dealiased at this grid's resolution)"""
    if isinstance(params, KsParams):
        return ks_rhs(SpectralField(grid, coeffs), params).coeffs
    return ns_rhs(SpectralField(grid, coeffs), params).coeffs


def _check_filter(fine: GridSpec, filt: FilterSpec):
    if filt.target.dim != fine.dim or not math.isclose(filt.target.length, fine.length):
        raise FilterError("filter target grid must share dimension and length with the fine grid")
    if filt.cutoff > fine.nyquist:
        raise FilterError(f"cutoff {filt.cutoff} exceeds fine Nyquist {fine.nyquist}")


def _project(coeffs: np.ndarray, filt: FilterSpec) -> np.ndarray:
    return transfer_coefficients(coeffs, filt.target.n, filt.cutoff)


def commutator_target(u_fine: RealField, filt: FilterSpec, params: Params, second_term: str = COARSE) -> CommutatorSample:
    """
    F(A u) - F(A(F u)). The first A runs on the fine grid; the second on the coarse grid
    (default) or on the fine grid after re-embedding F u (second_term="fine").
    """
    _check_filter(u_fine.grid, filt)
    fine = u_fine.grid
    u_hat = fft_forward(u_fine.check_finite().values)
    first = _project(apply_operator(u_hat, fine, params), filt)
    bar_hat = _project(u_hat, filt)

    if second_term == COARSE:
        second = _project(apply_operator(bar_hat, filt.target, params), filt)
    elif second_term == FINE:
        embedded = transfer_coefficients(bar_hat, fine.n, filt.cutoff)
        second = _project(apply_operator(embedded, fine, params), filt)
    else:
        raise ValueError(f"second_term must be {COARSE!r} or {FINE!r}, got {second_term!r}")

    return CommutatorSample(
        filtered_state=RealField(filt.target, fft_inverse(bar_hat)),
        target=RealField(filt.target, fft_inverse(first - second)),
    )


def commutator_dataset(states: Sequence[RealField], filt: FilterSpec, params: Params,
                       second_term: str = COARSE) -> List[CommutatorSample]:
    return [commutator_target(u, filt, params, second_term) for u in states]


def _rms(values: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.abs(values) ** 2)))


# ----------------------------------------------------------------------
# single-state training
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SingleStateTrainConfig:
    epochs: int = 200
    lr: float = 1e-3
    weight_decay: float = 1e-4
    gamma: float = 0.7
    step_size: int = 100
    batch_size: int = 32
    validation_fraction: float = 0.2
    seed: int = 0
    width: int = 64
    n_layers: int = 4
    log_every: int = 50

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if not 0 <= self.validation_fraction < 1:
            raise ValueError(f"validation_fraction must lie in [0, 1), got {self.validation_fraction}")


def _mse(model_arrays: Dict[str, np.ndarray], x: np.ndarray, y: np.ndarray, cfg: SingleStateConfig) -> float:
    tape = Tape()
    leaves = ad.parameters_on(tape, model_arrays, trainable=())
    pred = single_state_apply(leaves, tape.constant(x), cfg).value
    return float(np.mean((pred - y) ** 2))


def train_single_state(dataset: Sequence[CommutatorSample], cfg: SingleStateTrainConfig) -> SingleStateModel:
    """Fit model(u_bar) to the commutator target by mean squared error with AdamW"""
    if not dataset:
        raise ValueError("cannot train a single-state closure on an empty dataset")
    grid = dataset[0].filtered_state.grid
    if any(s.filtered_state.grid != grid for s in dataset):
        raise GridError("all samples must share one coarse grid")

    x = np.stack([s.filtered_state.values for s in dataset])
    y = np.stack([s.target.values for s in dataset])
    rng = np.random.default_rng(cfg.seed)

    n_val = int(len(dataset) * cfg.validation_fraction) if len(dataset) >= 5 else 0
    order = rng.permutation(len(dataset))
    val_idx, train_idx = order[:n_val], order[n_val:]

    model_cfg = SingleStateConfig(width=cfg.width, n_layers=cfg.n_layers, spatial_dim=grid.dim, n=grid.n)
    model = init_single_state(model_cfg, cfg.seed)
    optimizer = AdamW(model.arrays, lr=cfg.lr, weight_decay=cfg.weight_decay, gamma=cfg.gamma, step_size=cfg.step_size)

    history: List[float] = []
    for epoch in range(cfg.epochs):
        perm = rng.permutation(train_idx)
        total, count = 0.0, 0
        for start in range(0, len(perm), cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            tape = Tape()
            leaves = ad.parameters_on(tape, optimizer.params)
            pred = single_state_apply(leaves, tape.constant(x[idx]), model_cfg)
            diff = pred - y[idx]
            loss = ad.mean(diff * diff)
            value = float(loss.value)
            if not math.isfinite(value):
                raise TrainingDivergedError("single-state loss is not finite", None, epoch)
            grads = tape.backward(loss)
            optimizer.step(grads)
            total += value * len(idx)
            count += len(idx)
        optimizer.end_epoch()
        history.append(total / count)
        if cfg.log_every and (epoch + 1) % cfg.log_every == 0:
            logger.info(f"📊 single-state epoch {epoch + 1}/{cfg.epochs}: train mse {history[-1]:.4e}")

    model = SingleStateModel(model_cfg, optimizer.params)
    train_loss = _mse(model.arrays, x[train_idx], y[train_idx], model_cfg)
    val_loss = _mse(model.arrays, x[val_idx], y[val_idx], model_cfg) if n_val else train_loss
    model.report = {"train_loss": train_loss, "val_loss": val_loss, "history": history}
    logger.info(f"✅ single-state closure trained: train mse {train_loss:.4e}, validation mse {val_loss:.4e}")
    return model


# ----------------------------------------------------------------------
# non-uniqueness lower bound
# ----------------------------------------------------------------------

@dataclass
class NonUniquenessReport:
    bound: float
    filtered_gap: float
    model_errors: Optional[Tuple[float, float]] = None

    @property
    def model_respects_bound(self) -> Optional[bool]:
        if self.model_errors is None:
            return None
        return max(self.model_errors) >= self.bound - 1e-10

    def to_dict(self) -> Dict:
        return {
            "bound": self.bound,
            "filtered_gap": self.filtered_gap,
            "model_errors": list(self.model_errors) if self.model_errors else None,
            "model_respects_bound": self.model_respects_bound,
        }


def nonuniqueness_pair(u1: RealField, filt: FilterSpec, seed: int = 0, amplitude: float = 0.5) -> RealField:
    """
    A second fine state with the same filtered image as u1: u1 plus a random perturbation living
    only on cutoff < |k|_inf <= min(2 cutoff, n/2 - 1), scaled to amplitude * RMS(u1).
    """
    _check_filter(u1.grid, filt)
    grid = u1.grid
    upper = min(2 * filt.cutoff, grid.nyquist - 1)
    if upper <= filt.cutoff:
        raise FilterError(f"fine grid n={grid.n} has no modes above cutoff {filt.cutoff}")
    rng = np.random.default_rng(seed)
    band = truncation_mask(grid, upper) & ~truncation_mask(grid, filt.cutoff)
    noise = fft_inverse(np.where(band, fft_forward(rng.standard_normal(grid.shape)), 0.0))
    scale = amplitude * _rms(u1.values) / max(_rms(noise), 1e-300)
    return RealField(grid, u1.values + scale * noise)


def nonuniqueness_demo(u1: RealField, u2: RealField, filt: FilterSpec, params: Params,
                       model: Optional[SingleStateModel] = None) -> NonUniquenessReport:
    """
    Two fine states with the same filtered image have commutators differing by F(A u1 - A u2),
    so any single-state closure errs by at least half that norm on one of them.
    """
    if u1.grid != u2.grid:
        raise GridError("both states must live on the same fine grid")
    _check_filter(u1.grid, filt)
    h1 = fft_forward(u1.values)
    h2 = fft_forward(u2.values)
    gap = float(np.max(np.abs(_project(h1 - h2, filt))))
    if gap > FILTER_MATCH_TOL:
        raise ValueError(f"filtered states differ by {gap:.3e}; the bound needs F u1 = F u2")

    diff = _project(apply_operator(h1, u1.grid, params) - apply_operator(h2, u2.grid, params), filt)
    bound = 0.5 * _rms(fft_inverse(diff))

    errors = None
    if model is not None:
        s1 = commutator_target(u1, filt, params)
        s2 = commutator_target(u2, filt, params)
        errors = tuple(_rms(model.predict(s.filtered_state.values) - s.target.values) for s in (s1, s2))
        logger.info(f"📊 closure errors {errors[0]:.4e}, {errors[1]:.4e} against bound {bound:.4e}")
    return NonUniquenessReport(bound, gap, errors)
