"""
chaostat - Single-state closure network
Pointwise lifting, periodic stencil convolutions and a pointwise projection, mapping a coarse
state to a coarse closure field of the same resolution. Every layer commutes with grid shifts.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from chaostat.autodiff import tensor as ad
from chaostat.autodiff.tensor import DiffArray, Tape
from chaostat.spectral.fields import RealField
from chaostat.utils.errors import GridError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SingleStateConfig:
    width: int = 64
    n_layers: int = 4
    spatial_dim: int = 1
    n: int = 128

    def __post_init__(self):
        if self.spatial_dim not in (1, 2):
            raise ValueError(f"spatial_dim must be 1 or 2, got {self.spatial_dim}")
        if min(self.width, self.n_layers) < 1:
            raise ValueError("width and n_layers must be positive")

    @property
    def offsets(self) -> List[Tuple[int, ...]]:
        """Stencil offsets: five taps along the line in 1D, the five-point cross in 2D"""
        if self.spatial_dim == 1:
            return [(s,) for s in (-2, -1, 0, 1, 2)]
        return [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]

    @property
    def spatial_shape(self) -> Tuple[int, ...]:
        return (self.n,) * self.spatial_dim

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> "SingleStateConfig":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__ if k in data})


@dataclass
class SingleStateModel:
    config: SingleStateConfig
    arrays: Dict[str, np.ndarray] = field(repr=False)
    report: Dict = field(default_factory=dict)

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.arrays.values())

    def predict(self, u_bar: np.ndarray) -> np.ndarray:
        """(batch, *spatial) or (*spatial) coarse states -> closure fields of the same shape"""
        single = u_bar.ndim == self.config.spatial_dim
        batch = u_bar[None] if single else u_bar
        tape = Tape()
        leaves = ad.parameters_on(tape, self.arrays, trainable=())
        out = single_state_apply(leaves, tape.constant(np.asarray(batch, dtype=np.float64)), self.config).value
        return out[0] if single else out

    def __call__(self, u_bar: RealField) -> RealField:
        return RealField(u_bar.grid, self.predict(u_bar.values))


def init_single_state(cfg: SingleStateConfig, seed: int) -> SingleStateModel:
    rng = np.random.default_rng(seed)
    taps = len(cfg.offsets)

    def uniform(shape, fan_in):
        bound = 1.0 / math.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    arrays = {"lift.w": uniform((1, cfg.width), 1), "lift.b": uniform((cfg.width,), 1)}
    for layer in range(cfg.n_layers):
        arrays[f"conv{layer}.w"] = uniform((taps, cfg.width, cfg.width), taps * cfg.width)
        arrays[f"conv{layer}.b"] = uniform((cfg.width,), taps * cfg.width)
    arrays["proj.w"] = uniform((cfg.width, 1), cfg.width)
    arrays["proj.b"] = np.zeros(1)
    return SingleStateModel(cfg, arrays)


def _affine(x: DiffArray, w: DiffArray, b: DiffArray) -> DiffArray:
    y = ad.matmul(x, w)
    return y + ad.broadcast(b, y.shape)


def _periodic_conv(h: DiffArray, w: DiffArray, b: DiffArray, cfg: SingleStateConfig) -> DiffArray:
    out = None
    for tap, offset in enumerate(cfg.offsets):
        shifted = h
        for axis, shift in enumerate(offset, start=1):
            shifted = ad.roll(shifted, shift, axis)
        term = ad.matmul(shifted, ad.reshape(ad.take(w, 0, tap, tap + 1), w.shape[1:]))
        out = term if out is None else out + term
    return out + ad.broadcast(b, out.shape)


def single_state_apply(leaves: Dict[str, DiffArray], u_bar: DiffArray, cfg: SingleStateConfig) -> DiffArray:
    if u_bar.shape[1:] != cfg.spatial_shape:
        raise GridError(f"single-state model expects coarse shape {cfg.spatial_shape}, got {u_bar.shape[1:]}")
    h = _affine(ad.reshape(u_bar, u_bar.shape + (1,)), leaves["lift.w"], leaves["lift.b"])
    for layer in range(cfg.n_layers):
        h = ad.gelu(_periodic_conv(h, leaves[f"conv{layer}.w"], leaves[f"conv{layer}.b"], cfg))
    out = _affine(h, leaves["proj.w"], leaves["proj.b"])
    return ad.reshape(out, out.shape[:-1])
