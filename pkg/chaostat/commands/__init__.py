from chaostat.commands.registry import CliParser, CommandRegistry

COMMAND_MODULES = [
    "chaostat.commands.data",
    "chaostat.commands.simulate",
    "chaostat.commands.train",
    "chaostat.commands.evaluate",
    "chaostat.commands.demo",
]

__all__ = ["COMMAND_MODULES", "CliParser", "CommandRegistry"]
