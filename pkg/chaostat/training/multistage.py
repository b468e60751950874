"""
chaostat - Multi-stage operator training
Stage 1 fits coarse-simulation pairs, stage 2 mixes in fully resolved pairs with a decaying
weight on the coarse data, stage 3 adds the PDE-residual loss on unlabelled inputs.
"""

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

from chaostat.autodiff import tensor as ad
from chaostat.autodiff.optim import Adam
from chaostat.autodiff.tensor import Tape
from chaostat.dynamics.params import KsParams, NsParams
from chaostat.models.fno import FnoParams
from chaostat.training.datasets import PairDataset, PdeInputSet, iterate_batches
from chaostat.training.losses import holdout_relative_error, loss_data, loss_pde
from chaostat.utils.errors import TrainingDivergedError

logger = logging.getLogger(__name__)

Params = Union[KsParams, NsParams]

ABLATIONS = ("full", "no_cgs_pretraining", "no_data_pretraining")


@dataclass(frozen=True)
class LambdaSchedule:
    """initial * factor ** (t // every) while t <= until (no cut-off when until is None), else 0"""

    initial: float = 1.0
    factor: float = 0.5
    every: int = 100
    until: Optional[int] = None

    def __post_init__(self):
        if self.initial < 0:
            raise ValueError(f"lambda must be non-negative, got {self.initial}")
        if not 0 < self.factor <= 1:
            raise ValueError(f"decay factor must lie in (0, 1], got {self.factor}")
        if self.every < 1:
            raise ValueError(f"decay interval must be >= 1, got {self.every}")

    def value(self, epoch: int) -> float:
        if self.until is not None and epoch > self.until:
            return 0.0
        return self.initial * self.factor ** (epoch // self.every)

    @classmethod
    def halving(cls, every: int = 100) -> "LambdaSchedule":
        return cls(1.0, 0.5, every)

    @classmethod
    def indicator(cls, until: int, every: int = 100) -> "LambdaSchedule":
        return cls(1.0, 0.5, every, until)

    @classmethod
    def divided_by(cls, divisor: float, every: int) -> "LambdaSchedule":
        return cls(1.0, 1.0 / divisor, every)


@dataclass(frozen=True)
class StageSchedule:
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
    lambda1: LambdaSchedule = field(default_factory=LambdaSchedule.halving)
    lambda2: LambdaSchedule = field(default_factory=lambda: LambdaSchedule.divided_by(1.7, 500))
    seed: int = 0
    log_every: int = 10

    def __post_init__(self):
        if min(self.n1, self.n2, self.n3) < 0:
            raise ValueError("stage epoch counts must be non-negative")

    def ablation(self, name: str) -> "StageSchedule":
        if name not in ABLATIONS:
            raise ValueError(f"unknown ablation {name!r}; expected one of {ABLATIONS}")
        if name == "no_cgs_pretraining":
            return replace(self, n1=0)
        if name == "no_data_pretraining":
            return replace(self, n1=0, n2=0)
        return self

    @classmethod
    def full_ks(cls) -> "StageSchedule":
        return cls(n1=1000, n2=250, n3=1487, lr=5e-2, gamma=0.7, step_size=100,
                   batch_size_cgs=32, batch_size_frs=32, batch_size_stage3_data=4, batch_size_stage3_pde=4,
                   lambda1=LambdaSchedule.halving(100), lambda2=LambdaSchedule.divided_by(1.7, 500))

    @classmethod
    def full_ns(cls) -> "StageSchedule":
        return cls(n1=60, n2=53, n3=1530, lr=4e-3, gamma=0.6, step_size=50,
                   batch_size_cgs=32, batch_size_frs=8, batch_size_stage3_data=8, batch_size_stage3_pde=8,
                   lambda1=LambdaSchedule.indicator(20, 100), lambda2=LambdaSchedule.divided_by(1.8, 60))

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class TrainingData:
    cgs: Optional[PairDataset] = None
    frs: Optional[PairDataset] = None
    pde: Optional[PdeInputSet] = None
    test: Optional[PairDataset] = None


@dataclass
class LossRecord:
    stage: int
    epoch: int
    lr: float
    weight: float
    loss: float
    terms: Dict[str, float]

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class LossReport:
    records: List[LossRecord] = field(default_factory=list)
    stage_test_errors: Dict[int, float] = field(default_factory=dict)

    def last(self, stage: int) -> Optional[LossRecord]:
        matching = [r for r in self.records if r.stage == stage]
        return matching[-1] if matching else None

    def to_dict(self) -> Dict:
        return {
            "records": [r.to_dict() for r in self.records],
            "stage_test_errors": {str(k): v for k, v in self.stage_test_errors.items()},
        }


Checkpoint = Callable[[int, FnoParams, LossReport], None]


class _Trainer:
    """One Adam optimizer with a step learning rate carried across all stages"""

    def __init__(self, params: FnoParams, schedule: StageSchedule):
        self.config = params.config
        self.schedule = schedule
        self.optimizer = Adam(params.arrays, lr=schedule.lr, gamma=schedule.gamma, step_size=schedule.step_size)
        self.rng = np.random.default_rng(schedule.seed)
        self.report = LossReport()

    @property
    def params(self) -> FnoParams:
        return FnoParams(self.config, self.optimizer.params)

    def _batches(self, n: int, size: int) -> Iterator[np.ndarray]:
        return iterate_batches(n, min(size, n), self.rng)

    def run_stage(
        self,
        stage: int,
        epochs: int,
        primary: Tuple[str, object, int],
        secondary: Optional[Tuple[str, object, int]],
        loss_fn: Callable[[Dict, Dict[str, object], int], Tuple[ad.DiffArray, Dict[str, float]]],
        weight_fn: Callable[[int], float],
    ):
        if epochs == 0:
            return
        name_a, data_a, size_a = primary
        streams = {name_a: (data_a, self._batches(len(data_a), size_a))}
        steps = math.ceil(len(data_a) / min(size_a, len(data_a)))
        if secondary is not None:
            name_b, data_b, size_b = secondary
            streams[name_b] = (data_b, self._batches(len(data_b), size_b))
            steps = max(steps, math.ceil(len(data_b) / min(size_b, len(data_b))))

        for epoch in range(epochs):
            weight = weight_fn(epoch)
            totals: Dict[str, float] = {}
            loss_sum = 0.0
            for _ in range(steps):
                batch = {name: data.subset(next(it)) for name, (data, it) in streams.items()}
                tape = Tape()
                leaves = ad.parameters_on(tape, self.optimizer.params)
                loss, terms = loss_fn(leaves, batch, epoch)
                value = float(loss.value)
                if not math.isfinite(value):
                    raise TrainingDivergedError("training loss is not finite", stage, epoch)
                self.optimizer.step(tape.backward(loss))
                loss_sum += value
                for key, term in terms.items():
                    totals[key] = totals.get(key, 0.0) + term
            record = LossRecord(stage, epoch, self.optimizer.lr, weight, loss_sum / steps,
                                {k: v / steps for k, v in totals.items()})
            self.report.records.append(record)
            self.optimizer.end_epoch()
            if self.schedule.log_every and (epoch + 1) % self.schedule.log_every == 0:
                logger.info(f"📊 stage {stage} epoch {epoch + 1}/{epochs}: loss {record.loss:.4e} (weight {weight:.3g})")


def train_supervised(params: FnoParams, dataset: PairDataset, schedule: StageSchedule, epochs: int) -> Tuple[FnoParams, LossReport]:
    """Plain data-loss regression on one dataset"""
    trainer = _Trainer(params, schedule)
    cfg = params.config

    def loss_fn(leaves, batch, epoch):
        loss = loss_data(leaves, cfg, batch["data"])
        return loss, {"data": float(loss.value)}

    trainer.run_stage(1, epochs, ("data", dataset, schedule.batch_size_cgs), None, loss_fn, lambda e: 1.0)
    return trainer.params, trainer.report


def train_multistage(
    params: FnoParams,
    data: TrainingData,
    schedule: StageSchedule,
    equation: Params,
    checkpoint: Optional[Checkpoint] = None,
) -> Tuple[FnoParams, LossReport]:
    """
    Stage 1: J_data(D_c).  Stage 2: lambda1(t) J_data(D_c) + J_data(D_f).
    Stage 3: lambda2(t) J_data(D_f) + J_pde(D_p).  t is the epoch within the stage.
    """
    cfg = params.config
    if schedule.n1 and data.cgs is None:
        raise ValueError("stage 1 needs the coarse-simulation dataset")
    if schedule.n2 and (data.cgs is None or data.frs is None):
        raise ValueError("stage 2 needs both the coarse and the fully resolved datasets")
    if schedule.n3 and (data.frs is None or data.pde is None):
        raise ValueError("stage 3 needs the fully resolved dataset and PDE inputs")

    trainer = _Trainer(params, schedule)
    logger.info(f"🚀 multi-stage training: N1={schedule.n1} N2={schedule.n2} N3={schedule.n3}, "
                f"{params.n_parameters()} parameters")

    def stage1(leaves, batch, epoch):
        loss = loss_data(leaves, cfg, batch["cgs"])
        return loss, {"cgs": float(loss.value)}

    def stage2(leaves, batch, epoch):
        cgs = loss_data(leaves, cfg, batch["cgs"])
        frs = loss_data(leaves, cfg, batch["frs"])
        return ad.scale(cgs, schedule.lambda1.value(epoch)) + frs, {"cgs": float(cgs.value), "frs": float(frs.value)}

    def stage3(leaves, batch, epoch):
        frs = loss_data(leaves, cfg, batch["frs"])
        pde = loss_pde(leaves, cfg, batch["pde"], equation)
        return ad.scale(frs, schedule.lambda2.value(epoch)) + pde, {"frs": float(frs.value), "pde": float(pde.value)}

    stages = [
        (1, schedule.n1, lambda: (("cgs", data.cgs, schedule.batch_size_cgs), None), stage1, lambda e: 1.0),
        (2, schedule.n2, lambda: (("cgs", data.cgs, schedule.batch_size_cgs), ("frs", data.frs, schedule.batch_size_frs)),
         stage2, schedule.lambda1.value),
        (3, schedule.n3, lambda: (("pde", data.pde, schedule.batch_size_stage3_pde), ("frs", data.frs, schedule.batch_size_stage3_data)),
         stage3, schedule.lambda2.value),
    ]
    for stage, epochs, streams, loss_fn, weight_fn in stages:
        if epochs == 0:
            continue
        primary, secondary = streams()
        trainer.run_stage(stage, epochs, primary, secondary, loss_fn, weight_fn)
        current = trainer.params
        if data.test is not None and len(data.test):
            error = holdout_relative_error(current, data.test)
            trainer.report.stage_test_errors[stage] = error
            logger.info(f"✅ stage {stage} done: test relative L2 error {error:.4f}")
        else:
            logger.info(f"✅ stage {stage} done")
        if checkpoint is not None:
            checkpoint(stage, current, trainer.report)

    return trainer.params, trainer.report
