"""
chaostat - Simulation commands
run-frs and run-cgs integrate the statistics ensemble and store each trajectory
"""

import logging

from chaostat.closure.terms import ClosureSpec
from chaostat.commands.registry import CommandRegistry, closure_weights_path, output_dir
from chaostat.harness.containers import load_model, save_trajectory
from chaostat.harness.pipeline import CGS_CLASSICAL, CGS_NONE, CGS_SINGLE_STATE, Evaluator
from chaostat.harness.runs import classical_closure
from chaostat.harness.summary import write_json

logger = logging.getLogger(__name__)

CLOSURE_CHOICES = {"none": CGS_NONE, "classical": CGS_CLASSICAL, "single-state": CGS_SINGLE_STATE}


def _store(cfg, run, name: str):
    directory = output_dir(cfg, "trajectories", name)
    params = cfg.params().to_dict()
    for i, traj in enumerate(run.trajectories):
        save_trajectory(directory / f"traj_{i:04d}.chs", traj, cfg.equation, params)
    write_json(directory / "timing.json", {"method": run.method, "seconds_per_trajectory": run.seconds_per_trajectory,
                                            "n_traj": len(run.trajectories)})
    logger.info(f"💾 {len(run.trajectories)} {run.method} trajectories written to {directory}")


def run_frs(args, cfg):
    _store(cfg, Evaluator(cfg).frs(), "frs")


def run_cgs(args, cfg):
    method = CLOSURE_CHOICES[args.closure]
    if args.closure == "none":
        closure = ClosureSpec.none()
    elif args.closure == "classical":
        closure = classical_closure(cfg)
    else:
        closure = ClosureSpec.learned(load_model(args.model or closure_weights_path(cfg), expect="single_state"))
    logger.info(f"🚀 coarse ensemble with closure {closure.label}")
    _store(cfg, Evaluator(cfg).cgs(method, closure), f"cgs_{args.closure}")


def setup(registry: CommandRegistry):
    registry.add_command("run-frs", run_frs, "fully resolved statistics ensemble (filtered to the coarse grid)")
    cgs = registry.add_command("run-cgs", run_cgs, "coarse-grid statistics ensemble with a closure")
    cgs.add_argument("--closure", choices=sorted(CLOSURE_CHOICES), default="none")
    cgs.add_argument("--model", help="single-state closure weights (default: <out>/models/closure.chw)")
