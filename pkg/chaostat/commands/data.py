"""
chaostat - Dataset command
"""

import logging

from chaostat.commands.registry import CommandRegistry
from chaostat.harness.datagen import gen_dataset

logger = logging.getLogger(__name__)


def gen_data(args, cfg):
    result = gen_dataset(cfg)
    logger.info(f"📊 manifest {result.manifest_path} sha256 {result.digest}")


def setup(registry: CommandRegistry):
    registry.add_command("gen-data", gen_data, "run the dataset schedule and write containers plus a manifest")
