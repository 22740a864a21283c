"""
Run Configuration Validation - Quality Assurance

Checks a resolved RunConfig before any simulation starts:
- Model coefficients and observable
- Discretization hierarchy
- Control PDE grid
- Pilot sample sizes and fit range
- Error split, confidence level and budget
"""

from typing import Dict, List, Tuple
import logging
import math

from components.config import MODES, OBSERVABLES, RunConfig

logger = logging.getLogger(__name__)


class RunConfigValidator:
    """
    Validates a run configuration for consistency and feasibility
    """

    # Hierarchy
    TAU_MAX = 8                    # coarsening factor beyond this is unusual
    P0_WARN = 1000                 # P0 this large makes the pilot expensive

    # Control grid
    GRID_CELLS_MIN = 50            # coarser grids give a rough control
    GRID_HALFWIDTH_MIN = 4.0       # domain should cover the threshold comfortably
    CLIP_WARN = 50.0               # large clips allow extreme likelihoods

    # Error budget
    TOL_MAX = 0.5                  # beyond 50% a relative tolerance is meaningless
    TOL_WARN = 0.01                # below 1% runs get very long at desk scale
    NU_MAX = 0.5

    def __init__(self, label: str = ""):
        """
        Args:
            label: config path or name (for logging)
        """
        self.label = label
        self.errors = []
        self.warnings = []

    def validate_all(self, config: RunConfig) -> Tuple[bool, List[str], List[str]]:
        """
        Run every check on the configuration

        Returns:
            Tuple: (is_valid, errors_list, warnings_list)
        """
        self.errors = []
        self.warnings = []

        self._validate_model(config)
        self._validate_hierarchy(config)
        self._validate_control_grid(config)
        self._validate_pilot(config)
        self._validate_adaptive(config)

        is_valid = len(self.errors) == 0

        logger.info(f"\nValidation Summary for {self.label or 'run config'}:")
        logger.info(f"  Status: {'✓ VALID' if is_valid else '✗ INVALID'}")
        logger.info(f"  Errors:   {len(self.errors)}")
        logger.info(f"  Warnings: {len(self.warnings)}")

        return is_valid, self.errors, self.warnings

    def _validate_model(self, config: RunConfig) -> None:
        logger.info("\n[1/5] MODEL CHECKS")
        m = config.model

        if not (m.sigma >= 0 and math.isfinite(m.sigma)):
            self.errors.append(f"sigma must be >= 0, got {m.sigma}")
        else:
            logger.info(f"  ✓ sigma: {m.sigma:g}")

        if not (m.horizon > 0 and math.isfinite(m.horizon)):
            self.errors.append(f"horizon T must be positive, got {m.horizon}")
        if not math.isfinite(m.coupling):
            self.errors.append(f"coupling must be finite, got {m.coupling}")

        if m.init_variance < 0:
            self.errors.append(f"initial variance must be >= 0, got {m.init_variance}")
        if m.xi_halfwidth < 0:
            self.errors.append(f"xi half-width must be >= 0, got {m.xi_halfwidth}")

        if m.observable not in OBSERVABLES:
            self.errors.append(f"observable '{m.observable}' unknown, expected one of {OBSERVABLES}")
        elif m.observable == "mollified":
            logger.info(f"  ✓ Observable: mollified indicator at K={m.K:g}")
            if m.K <= m.init_mean:
                self.warnings.append(f"threshold K={m.K:g} is not above the initial mean; the event is not rare")
        else:
            logger.info(f"  ✓ Observable: constant {m.constant_value:g}")
            if m.constant_value == 0:
                self.errors.append("constant observable of 0 has no relative error")

    def _validate_hierarchy(self, config: RunConfig) -> None:
        logger.info("\n[2/5] HIERARCHY CHECKS")
        h = config.hierarchy
        count = len(self.errors)

        if h.P0 < 1 or h.N0 < 1:
            self.errors.append(f"P0 and N0 must be >= 1, got P0={h.P0}, N0={h.N0}")
        if h.tau < 2:
            self.errors.append(f"tau must be >= 2, got {h.tau}")
        elif h.tau > self.TAU_MAX:
            self.warnings.append(f"tau={h.tau} is large; levels grow very fast")
        if h.P0 > self.P0_WARN:
            self.warnings.append(f"P0={h.P0} makes every outer sample expensive")
        if len(self.errors) == count:
            logger.info(f"  ✓ P_a = {h.P0}*{h.tau}^a1, N_a = {h.N0}*{h.tau}^a2")

    def _validate_control_grid(self, config: RunConfig) -> None:
        logger.info("\n[3/5] CONTROL GRID CHECKS")
        g = config.control_grid

        if not g.x_min < g.x_max:
            self.errors.append(f"control grid needs x_min < x_max, got [{g.x_min}, {g.x_max}]")
        elif min(-g.x_min, g.x_max) < self.GRID_HALFWIDTH_MIN:
            self.warnings.append(f"control grid [{g.x_min}, {g.x_max}] is narrow")
        if g.n_cells < 8:
            self.errors.append(f"control grid needs at least 8 cells, got {g.n_cells}")
        elif g.n_cells < self.GRID_CELLS_MIN:
            self.warnings.append(f"control grid has only {g.n_cells} cells")
        if g.n_tsteps < 1:
            self.errors.append(f"control grid needs at least one time step, got {g.n_tsteps}")
        if g.clip <= 0:
            self.errors.append(f"control clip must be positive, got {g.clip}")
        elif g.clip > self.CLIP_WARN:
            self.warnings.append(f"control clip {g.clip:g} is large")
        if g.floor <= 0:
            self.errors.append(f"value floor must be positive, got {g.floor}")
        if g.law_particles < 2 or g.law_steps < 1:
            self.errors.append(f"offline law needs >= 2 particles and >= 1 step, "
                               f"got P={g.law_particles}, N={g.law_steps}")
        else:
            logger.info(f"  ✓ Offline law: P={g.law_particles}, N={g.law_steps}")

    def _validate_pilot(self, config: RunConfig) -> None:
        logger.info("\n[4/5] PILOT CHECKS")
        p = config.pilot

        for name in ("mean_samples", "variance_samples", "rate_samples"):
            pair = getattr(p, name)
            if len(pair) != 2 or min(pair) < 1:
                self.errors.append(f"pilot {name} must be two counts >= 1, got {list(pair)}")
            elif min(pair) < 2:
                self.warnings.append(f"pilot {name}={list(pair)} cannot estimate both variances")
        if p.axis_range - p.fit_first_level + 1 < 3:
            self.errors.append(f"rate fit needs at least 3 levels, range is "
                               f"{p.fit_first_level}..{p.axis_range}")
        else:
            logger.info(f"  ✓ Rate fit over levels {p.fit_first_level}..{p.axis_range}")

    def _validate_adaptive(self, config: RunConfig) -> None:
        logger.info("\n[5/5] ERROR BUDGET CHECKS")
        a = config.adaptive

        if a.mode not in MODES:
            self.errors.append(f"mode '{a.mode}' unknown, expected one of {MODES}")
        if not 0 < a.tol_r <= self.TOL_MAX:
            self.errors.append(f"tol_r must lie in (0, {self.TOL_MAX}], got {a.tol_r}")
        elif a.tol_r < self.TOL_WARN:
            self.warnings.append(f"tol_r={a.tol_r:g} is very tight for a desk-scale run")
        else:
            logger.info(f"  ✓ tol_r: {a.tol_r:.1%}")
        if not 0 < a.theta < 1:
            self.errors.append(f"theta must lie in (0, 1), got {a.theta}")
        if not 0 < a.nu <= self.NU_MAX:
            self.errors.append(f"nu must lie in (0, {self.NU_MAX}], got {a.nu}")
        if a.L0 < 2:
            self.errors.append(f"L0 must be >= 2, got {a.L0}")
        if a.growth <= 1:
            self.errors.append(f"L growth factor must exceed 1, got {a.growth}")
        if a.max_model_cost <= 0:
            self.errors.append(f"budget cap must be positive, got {a.max_model_cost}")
        if config.threads == 0:
            self.errors.append("threads must be nonzero (negative counts follow joblib)")


def validate_run_config(config: RunConfig, label: str = "") -> Tuple[bool, Dict]:
    """
    Convenience function to validate a resolved run configuration

    Returns:
        Tuple: (is_valid, validation_report)
    """

    validator = RunConfigValidator(label)
    is_valid, errors, warnings = validator.validate_all(config)

    report = {
        'is_valid': is_valid,
        'errors': errors,
        'warnings': warnings,
        'summary': f"{len(errors)} errors, {len(warnings)} warnings"
    }

    return is_valid, report


# Example usage
if __name__ == "__main__":
    from dataclasses import replace

    logging.basicConfig(level=logging.INFO, format="%(message)s")

    print("=" * 70)
    print("VALIDATING DEFAULT KURAMOTO STUDY")
    print("=" * 70)
    ok, report = validate_run_config(RunConfig(), "defaults")
    print(f"\nValidation Result: {'✓ PASS' if ok else '✗ FAIL'}")

    print("\n" + "=" * 70)
    print("VALIDATING A BROKEN CONFIG")
    print("=" * 70)
    broken = RunConfig()
    broken = replace(broken, adaptive=replace(broken.adaptive, theta=1.5, tol_r=0.0))
    ok, report = validate_run_config(broken, "broken")
    print(f"\nValidation Result: {'✓ PASS' if ok else '✗ FAIL'}")
    for error in report['errors']:
        print(f"  ✗ {error}")
    for warning in report['warnings']:
        print(f"  ⚠ {warning}")
