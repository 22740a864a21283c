# modules/__init__.py
"""
Modules Package - Numerical Engine
Multi-index double loop Monte Carlo with importance sampling for
McKean-Vlasov SDEs
"""

from .errors import (
    MimcError,
    ConfigurationError,
    HierarchyError,
    SimulationDivergedError,
    UnsupportedDimensionError,
    KBESolverError,
    DegenerateRatesError,
    InadmissibleRatesError,
    AllocationError,
    RateFitError,
)
from .models import ModelSpec, Observable, make_kuramoto, make_mollified_observable, constant_observable
from .randomness import StreamKey, StreamRole, draw_bundle, draw_paths
from .particle_system import EmpiricalLaw, simulate_law, dump_law
from .decoupled import simulate_decoupled
from .control import GridSpec, ControlField, solve_kbe, control_from_value, load_control, save_control
from .mixed_difference import Hierarchy, MultiIndex, Quantity, estimate_stats, variance_ratio
from .index_sets import RateSet, build_index_set, boundary, compute_weights, complexity_constants
from .allocation import optimal_samples
from .rates import fit_rates, pilot_grid
from .adaptive import (
    AdaptiveSettings,
    PilotSettings,
    EstimatorReport,
    run_adaptive,
    run_multilevel,
    run_dlmc_single,
    extrapolate_variances,
)

__all__ = [
    'MimcError',
    'ConfigurationError',
    'HierarchyError',
    'SimulationDivergedError',
    'UnsupportedDimensionError',
    'KBESolverError',
    'DegenerateRatesError',
    'InadmissibleRatesError',
    'AllocationError',
    'RateFitError',
    'ModelSpec',
    'Observable',
    'make_kuramoto',
    'make_mollified_observable',
    'constant_observable',
    'StreamKey',
    'StreamRole',
    'draw_bundle',
    'draw_paths',
    'EmpiricalLaw',
    'simulate_law',
    'dump_law',
    'simulate_decoupled',
    'GridSpec',
    'ControlField',
    'solve_kbe',
    'control_from_value',
    'load_control',
    'save_control',
    'Hierarchy',
    'MultiIndex',
    'Quantity',
    'estimate_stats',
    'variance_ratio',
    'RateSet',
    'build_index_set',
    'boundary',
    'compute_weights',
    'complexity_constants',
    'optimal_samples',
    'fit_rates',
    'pilot_grid',
    'AdaptiveSettings',
    'PilotSettings',
    'EstimatorReport',
    'run_adaptive',
    'run_multilevel',
    'run_dlmc_single',
    'extrapolate_variances',
]

__version__ = '1.0.0'
__author__ = 'mimc-mvsde contributors'
