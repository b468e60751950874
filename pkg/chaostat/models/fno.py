"""
chaostat - Fourier Neural Operator
Lifting, spectral + pointwise layers, two-stage projection, evaluated on the autodiff tape.
Inputs are (batch, T, *spatial, 2) with channels [v0 repeated over T slots, slot time j/T].
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from chaostat.autodiff import tensor as ad
from chaostat.autodiff.tensor import DiffArray, Tape
from chaostat.dynamics.params import Trajectory
from chaostat.spectral.fields import GridSpec, RealField
from chaostat.utils.errors import GridError, RolloutError

logger = logging.getLogger(__name__)

IN_CHANNELS = 2


@dataclass(frozen=True)
class FnoConfig:
    n_layers: int = 4
    width: int = 32
    proj_width: int = 64
    modes_kept: int = 16
    t_frames: int = 16
    spatial_dim: int = 1
    h: float = 0.1

    def __post_init__(self):
        if self.spatial_dim not in (1, 2):
            raise ValueError(f"spatial_dim must be 1 or 2, got {self.spatial_dim}")
        if self.t_frames < 2:
            raise ValueError(f"t_frames must be >= 2, got {self.t_frames}")
        if min(self.n_layers, self.width, self.proj_width, self.modes_kept) < 1:
            raise ValueError("n_layers, width, proj_width and modes_kept must be positive")
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")

    @property
    def frame_times(self) -> np.ndarray:
        """Times j*h/T, j = 1..T, approximated by the output slots"""
        return self.h * np.arange(1, self.t_frames + 1) / self.t_frames

    def spectral_shape(self) -> Tuple[int, ...]:
        k = self.modes_kept
        modes = (k,) if self.spatial_dim == 1 else (2 * k - 1, k)
        return modes + (self.width, self.width)

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> "FnoConfig":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__ if k in data})


@dataclass
class FnoParams:
    """Named weight arrays; complex spectral weights are stored as (re, im) pairs"""

    config: FnoConfig
    arrays: Dict[str, np.ndarray] = field(repr=False)

    def copy(self) -> "FnoParams":
        return FnoParams(self.config, {k: v.copy() for k, v in self.arrays.items()})

    def zeros_like(self) -> "FnoParams":
        return FnoParams(self.config, {k: np.zeros_like(v) for k, v in self.arrays.items()})

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.arrays.values())

    def n_parameters(self) -> int:
        return int(sum(v.size for v in self.arrays.values()))


def parameter_shapes(cfg: FnoConfig) -> Dict[str, Tuple[int, ...]]:
    shapes = {"lift.w": (IN_CHANNELS, cfg.width), "lift.b": (cfg.width,)}
    for layer in range(cfg.n_layers):
        shapes[f"layer{layer}.w"] = (cfg.width, cfg.width)
        shapes[f"layer{layer}.b"] = (cfg.width,)
        shapes[f"layer{layer}.r_re"] = cfg.spectral_shape()
        shapes[f"layer{layer}.r_im"] = cfg.spectral_shape()
    shapes["proj1.w"] = (cfg.width, cfg.proj_width)
    shapes["proj1.b"] = (cfg.proj_width,)
    shapes["proj2.w"] = (cfg.proj_width, 1)
    shapes["proj2.b"] = (1,)
    return shapes


def init_params(cfg: FnoConfig, seed: int) -> FnoParams:
    """Uniform init: U(+-1/sqrt(fan_in)) for pointwise maps, U(0, 1/(width*modes)) for spectral weights"""
    rng = np.random.default_rng(seed)
    arrays: Dict[str, np.ndarray] = {}
    spectral_gain = 1.0 / (cfg.width * cfg.modes_kept)
    for name, shape in parameter_shapes(cfg).items():
        if ".r_" in name:
            arrays[name] = spectral_gain * rng.random(shape)
        else:
            fan_in = {"lift": IN_CHANNELS, "proj1": cfg.width, "proj2": cfg.proj_width}.get(name.split(".")[0], cfg.width)
            bound = 1.0 / math.sqrt(fan_in)
            arrays[name] = rng.uniform(-bound, bound, size=shape)
    return FnoParams(cfg, arrays)


def check_resolution(cfg: FnoConfig, n: int):
    if n < 2 * cfg.modes_kept:
        raise GridError(f"resolution n={n} is below 2*modes_kept={2 * cfg.modes_kept}")


def encode_inputs(v0: np.ndarray, cfg: FnoConfig) -> np.ndarray:
    """(batch, *spatial) initial states -> (batch, T, *spatial, 2) network input"""
    v0 = np.asarray(v0, dtype=np.float64)
    if v0.ndim != cfg.spatial_dim + 1:
        raise GridError(f"expected (batch, *spatial) with {cfg.spatial_dim} spatial axes, got {v0.shape}")
    check_resolution(cfg, v0.shape[1])
    spatial = v0.shape[1:]
    batch, t = v0.shape[0], cfg.t_frames
    slots = np.broadcast_to(v0[:, None], (batch, t) + spatial)
    times = np.broadcast_to((np.arange(1, t + 1) / t).reshape((1, t) + (1,) * len(spatial)), (batch, t) + spatial)
    return np.stack([slots, times], axis=-1)


def _affine(x: DiffArray, w: DiffArray, b: DiffArray) -> DiffArray:
    y = ad.matmul(x, w)
    return y + ad.broadcast(b, y.shape)


def _zeros(tape: Tape, like_shape: Tuple[int, ...], axis: int, size: int) -> DiffArray:
    shape = list(like_shape)
    shape[axis] = size
    return tape.constant(np.zeros(shape, dtype=np.complex128))


def _mode_weights(shape: Tuple[int, ...], axis: int, n: int) -> np.ndarray:
    """1 on the zero mode, 2 on positive modes along the half-spectrum axis"""
    w = np.full(n, 2.0)
    w[0] = 1.0
    view = [1] * len(shape)
    view[axis] = n
    return np.broadcast_to(w.reshape(view), shape).copy()


def spectral_conv(h: DiffArray, r_re: DiffArray, r_im: DiffArray, cfg: FnoConfig) -> DiffArray:
    """
    Real output of sum over retained modes of R_k . H_k exp(i q.x), where H is the
    transform of h over the spatial axes. Only non-negative modes of the last spatial
    axis are stored; their conjugates are accounted for by doubling and taking the real part.
    """
    tape = h.tape
    k = cfg.modes_kept
    r = ad.make_complex(r_re, r_im)
    if cfg.spatial_dim == 1:
        n = h.shape[2]
        coeffs = ad.fft(h, axes=(2,))
        kept = ad.take(coeffs, 2, 0, k)
        mixed = ad.contract(kept, r, "btxc,xcd->btxd")
        mixed = ad.mul(mixed, _mode_weights(mixed.shape, 2, k))
        full = ad.concat([mixed, _zeros(tape, mixed.shape, 2, n - k)], axis=2)
        return ad.real(ad.ifft(full, axes=(2,)))

    n = h.shape[2]
    coeffs = ad.fft(h, axes=(2, 3))
    low_y = ad.take(coeffs, 3, 0, k)
    kept = ad.concat([ad.take(low_y, 2, 0, k), ad.take(low_y, 2, n - k + 1, n)], axis=2)
    mixed = ad.contract(kept, r, "btxyc,xycd->btxyd")
    mixed = ad.mul(mixed, _mode_weights(mixed.shape, 3, k))
    rows = ad.concat(
        [ad.take(mixed, 2, 0, k), _zeros(tape, mixed.shape, 2, n - 2 * k + 1), ad.take(mixed, 2, k, 2 * k - 1)],
        axis=2,
    )
    full = ad.concat([rows, _zeros(tape, rows.shape, 3, n - k)], axis=3)
    return ad.real(ad.ifft(full, axes=(2, 3)))


def fno_apply(leaves: Dict[str, DiffArray], x: DiffArray, cfg: FnoConfig) -> DiffArray:
    """
    Network on an encoded input (batch, T, *spatial, 2) -> (batch, T, *spatial).

    The same weights run at any resolution with n >= 2 * modes_kept. With one spectral layer,
    grid samples of one band-limited input agree across resolutions up to round-off. With
    more layers the GELU between them generates modes above the kept band; those modes alias
    differently on each grid, so outputs at two resolutions only agree approximately.
    """
    if x.shape[-1] != IN_CHANNELS or len(x.shape) != cfg.spatial_dim + 3:
        raise GridError(f"encoded input must be (batch, T, *spatial, {IN_CHANNELS}), got {x.shape}")
    check_resolution(cfg, x.shape[2])
    h = _affine(x, leaves["lift.w"], leaves["lift.b"])
    for layer in range(cfg.n_layers):
        spectral = spectral_conv(h, leaves[f"layer{layer}.r_re"], leaves[f"layer{layer}.r_im"], cfg)
        h = spectral + _affine(h, leaves[f"layer{layer}.w"], leaves[f"layer{layer}.b"])
        if layer < cfg.n_layers - 1:
            h = ad.gelu(h)
    p = ad.gelu(_affine(h, leaves["proj1.w"], leaves["proj1.b"]))
    out = _affine(p, leaves["proj2.w"], leaves["proj2.b"])
    return ad.reshape(out, out.shape[:-1])


def fno_predict(params: FnoParams, v0: np.ndarray) -> np.ndarray:
    """Batched forward on plain arrays: (batch, *spatial) -> (batch, T, *spatial)"""
    tape = Tape()
    leaves = ad.parameters_on(tape, params.arrays, trainable=())
    x = tape.constant(encode_inputs(v0, params.config))
    return fno_apply(leaves, x, params.config).value


def fno_forward(params: FnoParams, v0: RealField) -> List[RealField]:
    """T frames approximating S(j h / T) v0 for j = 1..T, at the resolution of v0"""
    if v0.grid.dim != params.config.spatial_dim:
        raise GridError(f"FNO is {params.config.spatial_dim}D, field is {v0.grid.dim}D")
    frames = fno_predict(params, v0.check_finite().values[None])[0]
    return [RealField(v0.grid, f) for f in frames]


def rollout(params: FnoParams, v0: RealField, n_steps: int, record_every: int = 1) -> Trajectory:
    """Feed the last frame back as input; states recorded at multiples of h"""
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    cfg = params.config
    state = v0.check_finite().values
    times, states = [], []
    for step in range(1, n_steps + 1):
        state = fno_predict(params, state[None])[0, -1]
        if not np.all(np.isfinite(state)):
            raise RolloutError("non-finite state", step)
        if step % record_every == 0:
            times.append(step * cfg.h)
            states.append(state)
    logger.debug(f"FNO rollout: {n_steps} steps of h={cfg.h} on n={v0.grid.n}")
    return Trajectory(v0.grid, np.array(times), np.stack(states), "FNO")
