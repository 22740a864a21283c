"""
Exception hierarchy for the multi-index DLMC library.

Every failure the library raises derives from MimcError so the CLI can map
it to an exit code in one place.
"""

from typing import List, Optional


class MimcError(Exception):
    """Base class for all library errors"""


class ConfigurationError(MimcError):
    """Inconsistent inputs: law/path grid mismatch, bad config values"""


class HierarchyError(ConfigurationError):
    """Coarsening or group splitting asked for a non-divisible size"""


class SimulationDivergedError(MimcError):
    """A particle or decoupled path produced a non-finite value"""

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class UnsupportedDimensionError(MimcError):
    """The control PDE is only solved for one-dimensional states"""


class KBESolverError(MimcError):
    """The backward equation solve failed or left the admissible range"""


class DegenerateRatesError(MimcError):
    """A normaliser or ratio in the rate formulas is zero"""


class InadmissibleRatesError(MimcError):
    """Rates violate the index-set admissibility inequalities"""

    def __init__(self, violations: List[str]):
        super().__init__("inadmissible rates: " + "; ".join(violations))
        self.violations = list(violations)


class AllocationError(MimcError):
    """Sample allocation cannot be formed (e.g. zero quantity of interest)"""


class RateFitError(MimcError):
    """Too few usable pilot points for a least-squares rate fit"""
