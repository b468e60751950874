from chaostat.harness.config import ConfigError, ExperimentConfig, load_config, parse_override
from chaostat.harness.containers import (
    load_model,
    load_snapshot,
    load_trajectory,
    save_model,
    save_snapshot,
    save_trajectory,
)
from chaostat.harness.datagen import gen_dataset, load_dataset
from chaostat.harness.pipeline import METHODS, PipelineResult, run_pipeline
from chaostat.harness.summary import cost_error_summary, write_reports
from chaostat.utils.worker_pool import WorkerPool

__all__ = [
    "METHODS",
    "ConfigError",
    "ExperimentConfig",
    "PipelineResult",
    "WorkerPool",
    "cost_error_summary",
    "gen_dataset",
    "load_config",
    "load_dataset",
    "load_model",
    "load_snapshot",
    "load_trajectory",
    "parse_override",
    "run_pipeline",
    "save_model",
    "save_snapshot",
    "save_trajectory",
    "write_reports",
]
