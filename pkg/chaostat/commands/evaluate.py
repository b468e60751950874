"""
chaostat - Evaluation commands
rollout, stats and bench
"""

import logging
import time
from pathlib import Path
from typing import Callable, Dict, List

import numpy as np

from chaostat.closure.terms import ClosureSpec
from chaostat.commands.registry import CommandRegistry, closure_weights_path, fno_weights_path, output_dir
from chaostat.harness.containers import load_model, save_trajectory
from chaostat.harness.datagen import find_manifest
from chaostat.harness.pipeline import CGS_CLASSICAL, CGS_NONE, CGS_SINGLE_STATE, FNO, FRS, METHODS, run_pipeline
from chaostat.harness.runs import classical_closure, coarse_state, initial_state, run_cgs, run_fno, run_frs
from chaostat.harness.summary import write_csv, write_json, write_reports
from chaostat.utils.errors import UsageError

logger = logging.getLogger(__name__)


def _optional_model(path: Path, kind: str):
    if not path.exists():
        logger.warning(f"⚠️ no {kind} weights at {path}")
        return None
    return load_model(path, expect=kind)


def rollout(args, cfg):
    params = load_model(args.model or fno_weights_path(cfg), expect="fno")
    v0 = coarse_state(cfg, initial_state(cfg, "stats", args.index))
    traj = run_fno(cfg, params, v0, args.steps * params.config.h, params.config.h)
    peak = float(np.max(np.abs(traj.values)))
    path = save_trajectory(output_dir(cfg, "rollouts") / f"rollout_{args.index:04d}.chs", traj,
                           cfg.equation, cfg.params().to_dict())
    logger.info(f"✅ {args.steps} rollout steps, max |u| {peak:.3f}, written to {path}")


def stats(args, cfg):
    manifest = find_manifest(Path(cfg.out))
    logger.info(f"📂 using dataset {manifest}")
    methods = args.methods.split(",") if args.methods else list(METHODS)
    fno = _optional_model(fno_weights_path(cfg), "fno")
    closure = _optional_model(closure_weights_path(cfg), "single_state")
    result = run_pipeline(cfg, fno, closure, methods)
    out = output_dir(cfg, "stats")
    write_reports(out, result.ordered_reports(), result.failures)
    if result.eddy_scores is not None:
        write_json(out / "eddy_scores.json", {f"{k:g}": v for k, v in result.eddy_scores.items()})
    for r in result.ordered_reports():
        logger.info(f"📊 {r.method:18s} Avg. TV {r.avg_tv:.4f}  Max. TV {r.max_tv:.4f}  "
                    f"{r.runtime_seconds or 0.0:.2f} s/trajectory")


def _bench_jobs(cfg) -> Dict[str, Callable[[], object]]:
    horizon = cfg.bench.horizon or cfg.stats.horizon
    interval = cfg.stats.record_interval
    u0 = initial_state(cfg, "stats", 0)
    v0 = coarse_state(cfg, u0)
    jobs = {
        FRS: lambda: run_frs(cfg, u0, horizon, interval),
        CGS_NONE: lambda: run_cgs(cfg, v0, ClosureSpec.none(), horizon, interval),
        CGS_CLASSICAL: lambda: run_cgs(cfg, v0, classical_closure(cfg), horizon, interval),
    }
    closure = _optional_model(closure_weights_path(cfg), "single_state")
    if closure is not None:
        jobs[CGS_SINGLE_STATE] = lambda: run_cgs(cfg, v0, ClosureSpec.learned(closure), horizon, interval)
    fno = _optional_model(fno_weights_path(cfg), "fno")
    if fno is not None:
        jobs[FNO] = lambda: run_fno(cfg, fno, v0, horizon, interval)
    return jobs


def bench(args, cfg):
    """Wall-clock of one trajectory per method, best and median over repeats; I/O excluded"""
    if cfg.bench.repeats < 1:
        raise UsageError("bench.repeats must be >= 1")
    rows: List[Dict] = []
    for method, job in _bench_jobs(cfg).items():
        timings = []
        try:
            for _ in range(cfg.bench.repeats):
                start = time.perf_counter()
                job()
                timings.append(time.perf_counter() - start)
        except Exception as e:
            logger.error(f"❌ bench {method} failed: {e}")
            rows.append({"method": method, "error": str(e)})
            continue
        row = {"method": method, "repeats": len(timings), "best_seconds": min(timings),
               "median_seconds": float(np.median(timings)), "seconds": timings}
        rows.append(row)
        logger.info(f"⏱️ {method}: median {row['median_seconds']:.3f} s over {len(timings)} runs")
    out = output_dir(cfg, "bench")
    write_json(out / "bench.json", rows)
    write_csv(out / "bench.csv", rows, ("method", "repeats", "best_seconds", "median_seconds", "error"))


def setup(registry: CommandRegistry):
    roll = registry.add_command("rollout", rollout, "autoregressive FNO rollout from a statistics initial state")
    roll.add_argument("--steps", type=int, default=100)
    roll.add_argument("--index", type=int, default=0, help="which statistics initial state to start from")
    roll.add_argument("--model", help="FNO weights (default: <out>/models/fno.chw)")
    st = registry.add_command("stats", stats, "compare every method against the fully resolved reference")
    st.add_argument("--methods", help=f"comma-separated subset of {','.join(METHODS)}")
    registry.add_command("bench", bench, "per-trajectory wall-clock of each method")
