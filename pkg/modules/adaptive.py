"""
Adaptive multi-index DLMC driver with importance sampling.

Input from pilots is a RateSet.  The driver then
  1. estimates G_bar at (0, 0) with the (M_bar1, M_bar2) pilot,
  2. measures V1, V2 on the seeded {0,1,2}^2 block with (M_tilde1, M_tilde2),
  3. grows I(L) from L = L0 by a factor ``growth`` per step; for every new
     set it extrapolates the variances, allocates samples, re-estimates all
     mixed differences with fresh streams and updates G_bar,
  4. stops once the boundary bias estimate is within (1 - theta) TOL_r.

The multilevel and single-level estimators share the same allocation and
report machinery and serve as baselines.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, NamedTuple, Optional, Tuple

from .allocation import Allocation, allocation_variance, confidence_constant, optimal_samples, work_model
from .control import ControlField
from .errors import InadmissibleRatesError, MimcError
from .index_sets import IndexSet, RateSet, boundary, build_index_set, compute_weights
from .mixed_difference import (Hierarchy, MixedDiffStats, MultiIndex, Quantity, as_multi_index,
                               estimate_stats)
from .models import ModelSpec, Observable
from .randomness import StreamKey, StreamRole

logger = logging.getLogger(__name__)

# iteration slots of the PILOT stream role
MEAN_PILOT_SLOT = 0
VARIANCE_PILOT_SLOT = 1

SEED_BLOCK = 2


@dataclass(frozen=True)
class PilotSettings:
    mean_samples: Tuple[int, int] = (1000, 100)      # (M_bar1, M_bar2)
    variance_samples: Tuple[int, int] = (25, 100)    # (M_tilde1, M_tilde2)


@dataclass(frozen=True)
class AdaptiveSettings:
    L0: float = 2.0
    growth: float = math.exp(0.25)
    max_model_cost: float = 1e12
    max_iterations: int = 60
    antithetic: bool = True
    gamma1: float = 1.0
    gamma2: float = 1.0


class IterationRecord(NamedTuple):
    iteration: int
    L: float
    set_size: int
    g_bar: float
    rel_bias: float
    model_cost: float

    def as_dict(self) -> dict:
        return self._asdict()


@dataclass
class EstimatorReport:
    estimate: float
    tol_r: float
    rel_bias_est: float
    rel_stat_err_est: float
    final_L: float
    index_set: IndexSet
    allocation: Optional[Allocation]
    total_model_cost: float
    wall_time: float
    per_alpha_stats: Dict[MultiIndex, MixedDiffStats]
    seed: int
    iterations: int
    converged: bool
    mode: str = "adaptive"
    theta: float = 0.5
    nu: float = 0.05
    rel_stat_err_realized: float = float("nan")
    planned_variances: Dict[MultiIndex, Tuple[float, float]] = field(default_factory=dict)
    history: List[IterationRecord] = field(default_factory=list)

    @property
    def max_levels(self) -> Tuple[int, int]:
        return self.index_set.max_levels

    def as_dict(self, include_timing: bool = False) -> dict:
        return {
            "mode": self.mode,
            "estimate": self.estimate,
            "tol_r": self.tol_r,
            "theta": self.theta,
            "nu": self.nu,
            "rel_bias_est": self.rel_bias_est,
            "rel_stat_err_est": self.rel_stat_err_est,
            "rel_stat_err_realized": self.rel_stat_err_realized,
            "converged": self.converged,
            "final_L": self.final_L,
            "iterations": self.iterations,
            "seed": self.seed,
            "total_model_cost": self.total_model_cost,
            "wall_time": self.wall_time if include_timing else None,
            "max_levels": list(self.max_levels),
            "index_set": self.index_set.as_list(),
            "allocation": self.allocation.as_list() if self.allocation else [],
            "history": [h.as_dict() for h in self.history],
        }


# =============================================================================
# VARIANCE EXTRAPOLATION
# =============================================================================

def _decay(v: Tuple[float, float], w: float, s: float, tau: int, steps: int) -> Tuple[float, float]:
    return v[0] / float(tau) ** (steps * float(w)), v[1] / float(tau) ** (steps * float(s))


def _vmax(a: Tuple[float, float], b: Tuple[float, float]) -> Tuple[float, float]:
    return max(a[0], b[0]), max(a[1], b[1])


def extrapolate_variances(seed_stats: Mapping, rates: RateSet, target_set, cache: Optional[dict] = None,
                          block: int = SEED_BLOCK) -> Dict[MultiIndex, Tuple[float, float]]:
    """
    (V1, V2) for every alpha of ``target_set``

    Seeded indices return their measured values.  Outside the block:
    a1 in {0, 1} decays along a2 from the two previous a2 levels, a2 in
    {0, 1} mirrors that along a1, anything else takes the larger one-step
    decay from its two backward neighbours.  ``cache`` carries values
    across calls; stored entries are never recomputed.
    """
    known = {} if cache is None else cache
    for alpha, s in seed_stats.items():
        known.setdefault(as_multi_index(alpha), (float(s.V1), float(s.V2)) if hasattr(s, "V1") else tuple(s))

    missing = [(a1, a2) for a1 in range(block + 1) for a2 in range(block + 1) if (a1, a2) not in known]
    if missing:
        raise MimcError(f"seeded variance block incomplete, missing {missing}")

    tau = rates.tau

    def lookup(alpha: MultiIndex) -> Tuple[float, float]:
        try:
            return known[alpha]
        except KeyError:
            raise MimcError(f"no variance for predecessor {tuple(alpha)}; "
                            "target set must be downward closed") from None

    out = {}
    for alpha in sorted(as_multi_index(a) for a in target_set):
        if alpha not in known:
            a1, a2 = alpha
            if a1 <= 1:
                known[alpha] = _vmax(_decay(lookup(alpha.shifted(0, -1)), rates.w2, rates.s2, tau, 1),
                                     _decay(lookup(alpha.shifted(0, -2)), rates.w2, rates.s2, tau, 2))
            elif a2 <= 1:
                known[alpha] = _vmax(_decay(lookup(alpha.shifted(-1, 0)), rates.w1, rates.s1, tau, 1),
                                     _decay(lookup(alpha.shifted(-2, 0)), rates.w1, rates.s1, tau, 2))
            else:
                known[alpha] = _vmax(_decay(lookup(alpha.shifted(0, -1)), rates.w2, rates.s2, tau, 1),
                                     _decay(lookup(alpha.shifted(-1, 0)), rates.w1, rates.s1, tau, 1))
        out[alpha] = known[alpha]
    return out


# =============================================================================
# SHARED HELPERS
# =============================================================================

def _relative(value: float, g_bar: float) -> float:
    if g_bar == 0.0:
        logger.warning("G_bar is zero; relative error estimates are infinite")
        return math.inf
    return value / abs(g_bar)


def _realized_stat_error(allocation: Allocation, stats: Mapping, g_bar: float) -> float:
    measured = {a: s for a, s in stats.items() if a in allocation.records}
    return _relative(allocation.C_nu * math.sqrt(allocation_variance(allocation, measured)), g_bar)


def _planned_stat_error(allocation: Allocation, planned: Mapping) -> float:
    return allocation.C_nu * math.sqrt(allocation_variance(allocation, planned)) / abs(allocation.qoi_estimate)


def _estimate_all(model, hierarchy, control, observable, allocation, key, quantity, settings, n_jobs, fast):
    stats = {}
    for alpha in allocation:
        rec = allocation[alpha]
        stats[alpha] = estimate_stats(model, hierarchy, alpha, control, observable, rec.M1, rec.M2, key,
                                      antithetic=settings.antithetic, quantity=quantity, n_jobs=n_jobs,
                                      fast=fast, gamma1=settings.gamma1, gamma2=settings.gamma2)
    return stats


def _pilot_mean(model, hierarchy, control, observable, pilot, master_seed, settings, n_jobs, fast):
    m1, m2 = pilot.mean_samples
    key = StreamKey(master_seed, role=StreamRole.PILOT, iteration=MEAN_PILOT_SLOT)
    return estimate_stats(model, hierarchy, (0, 0), control, observable, m1, m2, key,
                          antithetic=settings.antithetic, quantity=Quantity.LEVEL, n_jobs=n_jobs,
                          fast=fast, gamma1=settings.gamma1, gamma2=settings.gamma2)


# =============================================================================
# ADAPTIVE MULTI-INDEX
# =============================================================================

def run_adaptive(model: ModelSpec, hierarchy: Hierarchy, control: Optional[ControlField], observable: Observable,
                 rates: RateSet, tol_r: float, theta: float = 0.5, nu: float = 0.05,
                 pilot: Optional[PilotSettings] = None, master_seed: int = 0, *,
                 settings: Optional[AdaptiveSettings] = None, n_jobs: int = 1, fast: bool = True) -> EstimatorReport:
    """Adaptive multi-index DLMC estimate of E[G] to relative tolerance tol_r"""
    pilot = pilot or PilotSettings()
    settings = settings or AdaptiveSettings()
    if settings.L0 < 2 or settings.growth <= 1.0:
        raise MimcError(f"L sweep needs L0 >= 2 and growth > 1, got {settings.L0}, {settings.growth}")

    weights = compute_weights(rates)
    if not weights.admissible:
        raise InadmissibleRatesError(list(weights.violations))

    start = time.perf_counter()
    logger.info(f"Adaptive MI-DLMC: tol_r={tol_r:g}, theta={theta:g}, nu={nu:g}, seed={master_seed}")

    g_stats = _pilot_mean(model, hierarchy, control, observable, pilot, master_seed, settings, n_jobs, fast)
    g_bar = g_stats.mean
    total_cost = g_stats.model_cost
    logger.info(f"  initial G_bar = {g_bar:.6e} (M1={g_stats.m1_used}, M2={g_stats.m2_used})")

    seed_key = StreamKey(master_seed, role=StreamRole.PILOT, iteration=VARIANCE_PILOT_SLOT)
    vm1, vm2 = pilot.variance_samples
    seed_stats = {}
    for a1 in range(SEED_BLOCK + 1):
        for a2 in range(SEED_BLOCK + 1):
            s = estimate_stats(model, hierarchy, (a1, a2), control, observable, vm1, vm2, seed_key,
                               antithetic=settings.antithetic, n_jobs=n_jobs, fast=fast,
                               gamma1=settings.gamma1, gamma2=settings.gamma2)
            seed_stats[s.alpha] = s
            total_cost += s.model_cost

    cache: Dict[MultiIndex, Tuple[float, float]] = {}
    history: List[IterationRecord] = []
    L = float(settings.L0)
    previous: Optional[IndexSet] = None
    index_set, allocation, stats, planned = None, None, {}, {}
    rel_bias = math.inf
    converged = False
    iteration = 0

    while iteration < settings.max_iterations:
        candidate = build_index_set(weights.delta_bar, weights.delta_bbar, L)
        if previous is not None and candidate.members == previous.members:
            L *= settings.growth
            continue
        next_planned = extrapolate_variances(seed_stats, rates, candidate, cache)
        next_allocation = optimal_samples(next_planned, hierarchy, tol_r, theta, nu, g_bar,
                                          settings.gamma1, settings.gamma2)
        planned_cost = work_model(next_allocation, hierarchy, settings.gamma1, settings.gamma2)
        if total_cost + planned_cost > settings.max_model_cost:
            logger.warning(
                f"budget cap {settings.max_model_cost:.3e} reached: next set |I|={len(candidate)} "
                f"needs {planned_cost:.3e} on top of {total_cost:.3e}"
            )
            break

        iteration += 1
        index_set, allocation, planned, previous = candidate, next_allocation, next_planned, candidate
        key = StreamKey(master_seed, role=StreamRole.OUTER_LAW, iteration=iteration)
        stats = _estimate_all(model, hierarchy, control, observable, allocation, key,
                              Quantity.DIFFERENCE, settings, n_jobs, fast)
        total_cost += sum(s.model_cost for s in stats.values())

        g_bar = sum(s.mean for s in stats.values())
        rel_bias = _relative(sum(abs(stats[a].mean) for a in boundary(index_set)), g_bar)
        history.append(IterationRecord(iteration, L, len(index_set), g_bar, rel_bias, total_cost))
        logger.info(
            f"  L={L:.3f} |I|={len(index_set)} max=({index_set.max_levels[0]},{index_set.max_levels[1]}) "
            f"G_bar={g_bar:.6e} eps_b={rel_bias:.3e} cost={total_cost:.3e}"
        )
        if rel_bias <= (1.0 - theta) * tol_r:
            converged = True
            break
        L *= settings.growth

    if not converged:
        logger.warning(f"adaptive run stopped without meeting tol_r={tol_r:g} after {iteration} iterations")
    if index_set is None:
        index_set = IndexSet.of([])

    return EstimatorReport(
        estimate=g_bar,
        tol_r=tol_r,
        rel_bias_est=rel_bias,
        rel_stat_err_est=_planned_stat_error(allocation, planned) if allocation else math.inf,
        rel_stat_err_realized=_realized_stat_error(allocation, stats, g_bar) if allocation else math.inf,
        final_L=L,
        index_set=index_set,
        allocation=allocation,
        total_model_cost=total_cost,
        wall_time=time.perf_counter() - start,
        per_alpha_stats=stats,
        seed=master_seed,
        iterations=iteration,
        converged=converged,
        mode="adaptive",
        theta=theta,
        nu=nu,
        planned_variances=planned,
        history=history,
    )


# =============================================================================
# BASELINES
# =============================================================================

def run_multilevel(model: ModelSpec, hierarchy: Hierarchy, control: Optional[ControlField], observable: Observable,
                   tol_r: float, theta: float = 0.5, nu: float = 0.05, pilot: Optional[PilotSettings] = None,
                   master_seed: int = 0, *, settings: Optional[AdaptiveSettings] = None, n_jobs: int = 1,
                   fast: bool = True) -> EstimatorReport:
    """
    Multilevel DLMC along the diagonal alpha = (l, l)

    Level variances are measured directly with the (M_tilde1, M_tilde2)
    pilot as levels are added; the bias estimate is |E[dG_L]| / |G_bar|.
    """
    pilot = pilot or PilotSettings()
    settings = settings or AdaptiveSettings()
    start = time.perf_counter()
    logger.info(f"Multilevel DLMC: tol_r={tol_r:g}, theta={theta:g}, nu={nu:g}, seed={master_seed}")

    g_stats = _pilot_mean(model, hierarchy, control, observable, pilot, master_seed, settings, n_jobs, fast)
    g_bar = g_stats.mean
    total_cost = g_stats.model_cost

    seed_key = StreamKey(master_seed, role=StreamRole.PILOT, iteration=VARIANCE_PILOT_SLOT)
    vm1, vm2 = pilot.variance_samples
    level_vars: Dict[MultiIndex, MixedDiffStats] = {}

    def add_level(level: int) -> None:
        nonlocal total_cost
        s = estimate_stats(model, hierarchy, (level, level), control, observable, vm1, vm2, seed_key,
                           antithetic=settings.antithetic, quantity=Quantity.DIAGONAL, n_jobs=n_jobs,
                           fast=fast, gamma1=settings.gamma1, gamma2=settings.gamma2)
        level_vars[s.alpha] = s
        total_cost += s.model_cost

    for level in range(SEED_BLOCK + 1):
        add_level(level)

    history: List[IterationRecord] = []
    allocation, stats = None, {}
    rel_bias = math.inf
    converged = False
    top = SEED_BLOCK
    iteration = 0

    while iteration < settings.max_iterations:
        next_allocation = optimal_samples(level_vars, hierarchy, tol_r, theta, nu, g_bar,
                                          settings.gamma1, settings.gamma2)
        planned_cost = work_model(next_allocation, hierarchy, settings.gamma1, settings.gamma2)
        if total_cost + planned_cost > settings.max_model_cost:
            logger.warning(f"budget cap {settings.max_model_cost:.3e} reached at {top + 1} levels")
            break

        iteration += 1
        allocation = next_allocation
        key = StreamKey(master_seed, role=StreamRole.OUTER_LAW, iteration=iteration)
        stats = _estimate_all(model, hierarchy, control, observable, allocation, key,
                              Quantity.DIAGONAL, settings, n_jobs, fast)
        total_cost += sum(s.model_cost for s in stats.values())

        g_bar = sum(s.mean for s in stats.values())
        rel_bias = _relative(abs(stats[MultiIndex(top, top)].mean), g_bar)
        history.append(IterationRecord(iteration, float(top), top + 1, g_bar, rel_bias, total_cost))
        logger.info(f"  levels=0..{top} G_bar={g_bar:.6e} eps_b={rel_bias:.3e} cost={total_cost:.3e}")
        if rel_bias <= (1.0 - theta) * tol_r:
            converged = True
            break
        top += 1
        add_level(top)

    if not converged:
        logger.warning(f"multilevel run stopped without meeting tol_r={tol_r:g}")

    levels = IndexSet.of(sorted(allocation.records) if allocation else [])
    planned = {a: (s.V1, s.V2) for a, s in level_vars.items() if allocation and a in allocation.records}
    return EstimatorReport(
        estimate=g_bar,
        tol_r=tol_r,
        rel_bias_est=rel_bias,
        rel_stat_err_est=_planned_stat_error(allocation, planned) if allocation else math.inf,
        rel_stat_err_realized=_realized_stat_error(allocation, stats, g_bar) if allocation else math.inf,
        final_L=float(top),
        index_set=levels,
        allocation=allocation,
        total_model_cost=total_cost,
        wall_time=time.perf_counter() - start,
        per_alpha_stats=stats,
        seed=master_seed,
        iterations=iteration,
        converged=converged,
        mode="multilevel",
        theta=theta,
        nu=nu,
        planned_variances=planned,
        history=history,
    )


class DLMCResult(NamedTuple):
    estimate: float
    stat_err: float


def single_level_report(model: ModelSpec, P: int, N: int, M1: int, M2: int, control: Optional[ControlField],
                        observable: Observable, seed: int, nu: float = 0.05, n_jobs: int = 1,
                        fast: bool = True) -> EstimatorReport:
    """Plain nested DLMC at one fixed (P, N), wrapped as a report"""
    hierarchy = Hierarchy(P0=P, N0=N)
    start = time.perf_counter()
    key = StreamKey(seed, role=StreamRole.OUTER_LAW)
    stats = estimate_stats(model, hierarchy, (0, 0), control, observable, M1, M2, key,
                           quantity=Quantity.LEVEL, n_jobs=n_jobs, fast=fast)
    c_nu = confidence_constant(nu)
    logger.info(f"Single-level DLMC at P={P}, N={N}: {stats.mean:.6e} +/- {stats.std_error:.3e}")
    return EstimatorReport(
        estimate=stats.mean,
        tol_r=math.nan,
        rel_bias_est=math.nan,
        rel_stat_err_est=_relative(c_nu * stats.std_error, stats.mean) if stats.std_error > 0 else 0.0,
        final_L=math.nan,
        index_set=IndexSet.of([(0, 0)]),
        allocation=None,
        total_model_cost=stats.model_cost,
        wall_time=time.perf_counter() - start,
        per_alpha_stats={stats.alpha: stats},
        seed=seed,
        iterations=1,
        converged=True,
        mode="single",
        nu=nu,
    )


def run_dlmc_single(model: ModelSpec, P: int, N: int, M1: int, M2: int, control: Optional[ControlField],
                    observable: Observable, seed: int, n_jobs: int = 1, fast: bool = True) -> DLMCResult:
    """(estimate, standard error) of the nested estimator at fixed (P, N)"""
    report = single_level_report(model, P, N, M1, M2, control, observable, seed, n_jobs=n_jobs, fast=fast)
    return DLMCResult(report.estimate, report.per_alpha_stats[MultiIndex(0, 0)].std_error)
