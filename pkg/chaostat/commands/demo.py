"""
chaostat - Non-uniqueness demonstration
Two fine states sharing one filtered image, the error floor they impose on any single-state
closure, and what a trained closure actually reaches on them.
"""

import dataclasses
import logging

from chaostat.closure.commutator import commutator_dataset, nonuniqueness_demo, nonuniqueness_pair, train_single_state
from chaostat.commands.registry import CommandRegistry, output_dir
from chaostat.harness.runs import derive_seed, initial_state, run_frs
from chaostat.harness.summary import write_json

logger = logging.getLogger(__name__)


def demo_nonuniqueness(args, cfg):
    filt = cfg.filter_spec()
    params = cfg.params()
    t_end = cfg.dataset.frs_start
    u1 = run_frs(cfg, initial_state(cfg, "demo", 0), t_end, t_end).state_at(-1)
    u2 = nonuniqueness_pair(u1, filt, derive_seed(cfg.seed, "demo", 1), args.amplitude)

    train_cfg = dataclasses.replace(cfg.single_state_config(), weight_decay=0.0, validation_fraction=0.0)
    model = train_single_state(commutator_dataset([u1, u2], filt, params, cfg.closure.second_term), train_cfg)
    report = nonuniqueness_demo(u1, u2, filt, params, model)

    logger.info(f"📊 lower bound {report.bound:.6e} | trained closure errors "
                f"{report.model_errors[0]:.6e}, {report.model_errors[1]:.6e}")
    if report.model_respects_bound:
        logger.info("✅ the trained closure stays above the bound")
    else:
        logger.warning("⚠️ trained closure error fell below the bound")
    write_json(output_dir(cfg, "demo") / "nonuniqueness.json", report.to_dict())


def setup(registry: CommandRegistry):
    demo = registry.add_command("demo-nonuniqueness", demo_nonuniqueness,
                                "error floor of single-state closures on states with equal filtered images")
    demo.add_argument("--amplitude", type=float, default=0.5,
                      help="RMS of the sub-filter perturbation relative to the base state")
