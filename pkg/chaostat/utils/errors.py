"""
chaostat - Error hierarchy
Usage errors map to CLI exit code 1, numerical failures to exit code 2
"""

from typing import Optional


class ChaostatError(Exception):
    """Base class for every error raised by chaostat"""


class UsageError(ChaostatError):
    """Bad input from the operator: config, paths, arguments"""


class ConfigError(UsageError):
    """Invalid or unknown configuration key"""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class ManifestError(UsageError):
    """Dataset manifest missing or inconsistent with the files it references"""


class NumericalError(ChaostatError):
    """A computation produced unusable numbers"""


class NonFiniteError(NumericalError, ValueError):
    """NaN or infinity where finite values are required"""


class HermitianSymmetryError(NumericalError, ValueError):
    """Spectral coefficients do not describe a real field"""


class SolverBlowUpError(NumericalError):
    """Time integration left the admissible range"""

    def __init__(self, message: str, time: float, step: int):
        super().__init__(f"{message} (t={time:.6g}, step={step})")
        self.time = time
        self.step = step
        self.seed: Optional[int] = None


class TrainingDivergedError(NumericalError):
    """Loss became NaN during optimization"""

    def __init__(self, message: str, stage: Optional[int], epoch: int):
        where = f"stage {stage}, epoch {epoch}" if stage is not None else f"epoch {epoch}"
        super().__init__(f"{message} ({where})")
        self.stage = stage
        self.epoch = epoch


class RolloutError(NumericalError):
    """Autoregressive rollout produced non-finite states"""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (rollout step {step})")
        self.step = step


class GridError(ValueError):
    """Grid specification or field layout is invalid"""


class FilterError(ValueError):
    """Filter cutoff incompatible with the grids involved"""


class ShapeError(ValueError):
    """Autodiff operands have incompatible shapes"""


class NonZeroMeanError(ValueError):
    """Vorticity field with a non-zero spatial mean"""
