"""
chaostat - Training commands
"""

import logging
from pathlib import Path

from chaostat.closure.commutator import commutator_dataset, train_single_state
from chaostat.commands.registry import CommandRegistry, closure_weights_path, fno_weights_path, output_dir
from chaostat.harness.containers import save_model
from chaostat.harness.datagen import load_dataset
from chaostat.harness.runs import derive_seed
from chaostat.harness.summary import write_json
from chaostat.models.fno import init_params
from chaostat.spectral.fields import RealField
from chaostat.training.losses import holdout_relative_error
from chaostat.training.multistage import ABLATIONS, train_multistage

logger = logging.getLogger(__name__)


def train_closure(args, cfg):
    loaded = load_dataset(Path(cfg.out))
    if loaded.fine_states is None:
        raise FileNotFoundError("dataset holds no fully resolved snapshots to build commutator targets from")
    states = [RealField(loaded.fine_grid, v) for v in loaded.fine_states[:cfg.closure.commutator_snapshots]]
    samples = commutator_dataset(states, cfg.filter_spec(), cfg.params(), cfg.closure.second_term)
    logger.info(f"📊 {len(samples)} commutator samples ({cfg.closure.second_term} second term)")

    model = train_single_state(samples, cfg.single_state_config())
    save_model(closure_weights_path(cfg), model)
    write_json(output_dir(cfg, "models") / "closure_report.json", model.report)


def train_fno(args, cfg):
    loaded = load_dataset(Path(cfg.out))
    schedule = cfg.stage_schedule().ablation(args.ablation)
    params = init_params(cfg.fno_config(), derive_seed(cfg.seed, "fno"))
    models = output_dir(cfg, "models")
    suffix = "" if args.ablation == "full" else f"_{args.ablation}"

    def checkpoint(stage, current, report):
        save_model(models / f"fno{suffix}_stage{stage}.chw", current)
        write_json(models / f"loss_log{suffix}.json", report.to_dict())

    params, report = train_multistage(params, loaded.data, schedule, cfg.params(), checkpoint)
    path = fno_weights_path(cfg) if not suffix else models / f"fno{suffix}.chw"
    save_model(path, params)
    write_json(models / f"loss_log{suffix}.json", report.to_dict())
    if loaded.data.test is not None:
        logger.info(f"✅ final one-step test relative L2 error {holdout_relative_error(params, loaded.data.test):.4f}")


def setup(registry: CommandRegistry):
    registry.add_command("train-closure", train_closure, "fit the single-state closure to commutator targets")
    fno = registry.add_command("train-fno", train_fno, "multi-stage physics-informed FNO training")
    fno.add_argument("--ablation", choices=ABLATIONS, default="full")
