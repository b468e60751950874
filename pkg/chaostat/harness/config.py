"""
chaostat - Experiment configuration
TOML files mapped onto nested dataclasses; unknown keys are rejected by dotted name and
`key=value` overrides are applied before validation.
"""

import dataclasses
import hashlib
import json
import logging
import math
import os
import sys
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - Python 3.10 fallback
    import tomli as tomllib

from chaostat.closure.commutator import COARSE, FINE, SingleStateTrainConfig
from chaostat.dynamics.params import KsParams, NsParams, SolverConfig
from chaostat.models.fno import FnoConfig
from chaostat.spectral.fields import FilterSpec, GridSpec
from chaostat.training.multistage import LambdaSchedule, StageSchedule
from chaostat.utils.errors import ConfigError

logger = logging.getLogger(__name__)

EQUATIONS = ("ks", "ns")


@dataclass
class KsSection:
    nu: float = 0.01
    length_over_pi: float = 6.0


@dataclass
class NsSection:
    re: float = 100.0
    length_over_pi: float = 2.0
    forcing_wavenumber: int = 4


@dataclass
class GridSection:
    fine_n: int = 256
    coarse_n: int = 128
    cutoff: int = 42


@dataclass
class SolverSection:
    fine_dt: float = 5e-4
    coarse_dt: float = 6.25e-4
    cfl_number: Optional[float] = None


@dataclass
class DatasetSection:
    cgs_trajectories: int = 10
    cgs_snapshots: int = 60
    cgs_start: float = 21.0
    cgs_stride: float = 1.0
    cgs_labels: int = 1
    frs_trajectories: int = 1
    frs_snapshots: int = 21
    frs_start: float = 22.0
    frs_stride: float = 2.0
    frs_labels: int = 4
    test_trajectories: int = 1
    test_snapshots: int = 10
    pde_noise: float = 0.1
    pde_copies: int = 1
    init_modes: int = 8
    init_amplitude: float = 1.0


@dataclass
class FnoSection:
    n_layers: int = 4
    width: int = 32
    proj_width: int = 64
    modes_kept: int = 16
    t_frames: int = 16
    h: float = 0.1


@dataclass
class TrainSection:
    n1: int = 100
    n2: int = 25
    n3: int = 150
    lr: float = 5e-2
    gamma: float = 0.7
    step_size: int = 100
    batch_size_cgs: int = 32
    batch_size_frs: int = 32
    batch_size_stage3_data: int = 4
    batch_size_stage3_pde: int = 4
    lambda1_initial: float = 1.0
    lambda1_factor: float = 0.5
    lambda1_every: int = 100
    lambda1_until: Optional[int] = None
    lambda2_initial: float = 1.0
    lambda2_divisor: float = 1.7
    lambda2_every: int = 500
    log_every: int = 10


@dataclass
class ClosureSection:
    eddy_coeff: float = 0.01
    tune_eddy: bool = False
    smagorinsky_cs: float = 0.17
    second_term: str = COARSE
    commutator_snapshots: int = 200
    single_state_epochs: int = 200
    single_state_lr: float = 1e-3
    single_state_weight_decay: float = 1e-4
    single_state_gamma: float = 0.7
    single_state_step_size: int = 100
    single_state_batch: int = 32
    single_state_width: int = 64
    single_state_layers: int = 4


@dataclass
class StatsSection:
    n_traj: int = 10
    burn_in: float = 20.0
    horizon: float = 60.0
    record_interval: float = 0.1
    bins: int = 64
    tracked_cutoff: Optional[int] = None
    with_w1: bool = False
    gradient_dissipation: bool = False


@dataclass
class BenchSection:
    repeats: int = 3
    horizon: Optional[float] = None


@dataclass
class ExperimentConfig:
    equation: str = "ks"
    seed: int = 0
    out: str = "runs/ks_desk"
    ks: KsSection = field(default_factory=KsSection)
    ns: NsSection = field(default_factory=NsSection)
    grid: GridSection = field(default_factory=GridSection)
    solver: SolverSection = field(default_factory=SolverSection)
    dataset: DatasetSection = field(default_factory=DatasetSection)
    fno: FnoSection = field(default_factory=FnoSection)
    train: TrainSection = field(default_factory=TrainSection)
    closure: ClosureSection = field(default_factory=ClosureSection)
    stats: StatsSection = field(default_factory=StatsSection)
    bench: BenchSection = field(default_factory=BenchSection)

    # ------------------------------------------------------------------
    # derived objects
    # ------------------------------------------------------------------

    @property
    def dim(self) -> int:
        return 1 if self.equation == "ks" else 2

    def params(self) -> Union[KsParams, NsParams]:
        if self.equation == "ks":
            return KsParams(nu=self.ks.nu, length=self.ks.length_over_pi * math.pi)
        return NsParams(re=self.ns.re, length=self.ns.length_over_pi * math.pi,
                        forcing_wavenumber=self.ns.forcing_wavenumber)

    @property
    def length(self) -> float:
        return self.params().length

    def fine_grid(self) -> GridSpec:
        return GridSpec(self.dim, self.grid.fine_n, self.length)

    def coarse_grid(self) -> GridSpec:
        return GridSpec(self.dim, self.grid.coarse_n, self.length)

    def filter_spec(self) -> FilterSpec:
        return FilterSpec(self.grid.cutoff, self.coarse_grid())

    def tracked_cutoff(self) -> int:
        return self.stats.tracked_cutoff or self.grid.cutoff

    def dissipation_coefficient(self) -> float:
        return self.ks.nu if self.equation == "ks" else 1.0 / self.ns.re

    def record_every(self, dt: float, interval: float) -> int:
        steps = interval / dt
        if abs(steps - round(steps)) > 1e-9 * steps:
            raise ConfigError(f"record interval {interval} is not a multiple of dt {dt}")
        return int(round(steps))

    def solver_config(self, fine: bool, t_end: float, interval: float) -> SolverConfig:
        """Solver settings recording every `interval` time units"""
        grid = self.fine_grid() if fine else self.coarse_grid()
        dt = self.solver.fine_dt if fine else self.solver.coarse_dt
        if self.equation == "ks":
            return SolverConfig(grid, t_end, dt=dt, record_every=self.record_every(dt, interval))
        return SolverConfig(grid, t_end, dt=dt, cfl_number=self.solver.cfl_number, record_dt=interval)

    def fno_config(self) -> FnoConfig:
        f = self.fno
        return FnoConfig(n_layers=f.n_layers, width=f.width, proj_width=f.proj_width, modes_kept=f.modes_kept,
                         t_frames=f.t_frames, spatial_dim=self.dim, h=f.h)

    def stage_schedule(self) -> StageSchedule:
        t = self.train
        return StageSchedule(
            n1=t.n1, n2=t.n2, n3=t.n3, lr=t.lr, gamma=t.gamma, step_size=t.step_size,
            batch_size_cgs=t.batch_size_cgs, batch_size_frs=t.batch_size_frs,
            batch_size_stage3_data=t.batch_size_stage3_data, batch_size_stage3_pde=t.batch_size_stage3_pde,
            lambda1=LambdaSchedule(t.lambda1_initial, t.lambda1_factor, t.lambda1_every, t.lambda1_until),
            lambda2=LambdaSchedule(t.lambda2_initial, 1.0 / t.lambda2_divisor, t.lambda2_every),
            seed=self.seed, log_every=t.log_every,
        )

    def single_state_config(self) -> SingleStateTrainConfig:
        c = self.closure
        return SingleStateTrainConfig(
            epochs=c.single_state_epochs, lr=c.single_state_lr, weight_decay=c.single_state_weight_decay,
            gamma=c.single_state_gamma, step_size=c.single_state_step_size, batch_size=c.single_state_batch,
            seed=self.seed, width=c.single_state_width, n_layers=c.single_state_layers,
        )

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form; the output location is not part of it"""
        data = self.to_dict()
        data.pop("out", None)
        raw = json.dumps(data, sort_keys=True, separators=(",", ":")).encode("utf-8")
        return hashlib.sha256(raw).hexdigest()

    def validate(self):
        if self.equation not in EQUATIONS:
            raise ConfigError(f"equation must be one of {EQUATIONS}, got {self.equation!r}", "equation")
        if self.grid.cutoff > self.grid.fine_n // 2:
            raise ConfigError(f"cutoff {self.grid.cutoff} exceeds fine Nyquist {self.grid.fine_n // 2}", "grid.cutoff")
        if self.grid.cutoff > self.grid.coarse_n // 2:
            raise ConfigError(f"cutoff {self.grid.cutoff} exceeds coarse Nyquist {self.grid.coarse_n // 2}", "grid.cutoff")
        if self.closure.second_term not in (COARSE, FINE):
            raise ConfigError(f"second_term must be {COARSE!r} or {FINE!r}", "closure.second_term")
        for key in ("cgs_labels", "frs_labels"):
            if self.fno.t_frames % getattr(self.dataset, key) != 0:
                raise ConfigError(f"{key} must divide fno.t_frames", f"dataset.{key}")
        if min(self.dataset.cgs_trajectories, self.dataset.frs_trajectories, self.dataset.test_trajectories) < 1:
            raise ConfigError("every dataset part needs at least one trajectory", "dataset")
        if not self.stats.horizon > self.stats.burn_in:
            raise ConfigError("stats.horizon must exceed stats.burn_in", "stats.horizon")
        if self.equation == "ns" and self.solver.cfl_number is None and self.solver.coarse_dt is None:
            raise ConfigError("NS needs solver.cfl_number or a fixed dt", "solver.cfl_number")
        try:
            self.fine_grid(), self.coarse_grid(), self.filter_spec(), self.fno_config(), self.stage_schedule()
        except ValueError as e:
            raise ConfigError(str(e))
        out = Path(self.out)
        parent = out if out.exists() else out.parent
        if parent.exists() and not os.access(parent, os.W_OK):
            raise ConfigError(f"output directory {out} is not writable", "out")


# ----------------------------------------------------------------------
# loading
# ----------------------------------------------------------------------

def _section_type(hint) -> Optional[type]:
    return hint if dataclasses.is_dataclass(hint) else None


def _coerce(value: Any, hint, key: str) -> Any:
    origin = typing.get_origin(hint)
    if origin is Union:
        args = [a for a in typing.get_args(hint) if a is not type(None)]
        return None if value is None else _coerce(value, args[0], key)
    if hint is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if hint in (int, float, str, bool) and not isinstance(value, hint):
        raise ConfigError(f"{key} must be {hint.__name__}, got {type(value).__name__}", key)
    if hint is int and isinstance(value, bool):
        raise ConfigError(f"{key} must be int, got bool", key)
    return value


def _build(cls, data: Dict[str, Any], prefix: str = ""):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        dotted = f"{prefix}{key}"
        if key not in names:
            raise ConfigError(f"unknown configuration key: {dotted}", dotted)
        section = _section_type(hints[key])
        if section is not None:
            if not isinstance(value, dict):
                raise ConfigError(f"{dotted} must be a table", dotted)
            kwargs[key] = _build(section, value, f"{dotted}.")
        else:
            kwargs[key] = _coerce(value, hints[key], dotted)
    return cls(**kwargs)


def parse_override(text: str) -> (str, Any):
    """'a.b.c=value' with value read as a TOML literal, or a bare string when that fails"""
    if "=" not in text:
        raise ConfigError(f"override must look like key=value, got {text!r}")
    key, raw = text.split("=", 1)
    key = key.strip()
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key, value


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    for text in overrides:
        key, value = parse_override(text)
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot override inside non-table key {key}", key)
        node[parts[-1]] = value
        logger.debug(f"override {key} = {value!r}")
    return data


def resolve_config_path(path: Union[str, Path]) -> Path:
    """Explicit paths win; bare file names are looked up in CHAOSTAT_CONFIG_DIR (default configs/)"""
    path = Path(path)
    if path.exists():
        return path
    candidate = Path(os.getenv("CHAOSTAT_CONFIG_DIR", "configs")) / path.name
    if candidate.exists():
        return candidate
    raise ConfigError(f"config file not found: {path}")


def config_from_dict(data: Dict[str, Any]) -> ExperimentConfig:
    cfg = _build(ExperimentConfig, data)
    cfg.validate()
    return cfg


def load_config(path: Optional[Union[str, Path]] = None, overrides: Sequence[str] = (),
                seed: Optional[int] = None, out: Optional[str] = None) -> ExperimentConfig:
    data: Dict[str, Any] = {}
    if path is not None:
        resolved = resolve_config_path(path)
        try:
            with open(resolved, "rb") as f:
                data = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"cannot parse {resolved}: {e}")
        logger.info(f"📄 loaded config {resolved}")
    apply_overrides(data, overrides)
    if seed is not None:
        data["seed"] = seed
    if out is not None:
        data["out"] = out
    return config_from_dict(data)
