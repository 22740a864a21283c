"""
Antithetic mixed differences of the importance-sampled observable and
their double-loop statistics.

For alpha = (a1, a2) with P = P0 tau^a1 and N = N0 tau^a2 one sample is

    (G[P, N] - GG[P/tau, N]) - (G[P, N/tau] - GG[P/tau, N/tau])

where G[P, N] = G(X(T)) * L runs one decoupled path against a law simulated
with P particles on N steps, and GG averages the same quantity over the tau
contiguous particle groups of the fine noise.  Coarse-in-time corners
re-simulate their laws with factor-tau summed increments.  Terms with a
negative index are dropped.
"""

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from .control import ControlField
from .decoupled import simulate_decoupled
from .errors import ConfigurationError
from .models import ModelSpec, Observable
from .particle_system import simulate_law
from .randomness import (NoiseBundle, PathNoise, StreamKey, StreamRole, draw_bundle,
                         draw_paths, split_groups)

logger = logging.getLogger(__name__)


class MultiIndex(NamedTuple):
    a1: int
    a2: int

    def shifted(self, d1: int, d2: int) -> "MultiIndex":
        return MultiIndex(self.a1 + d1, self.a2 + d2)


def as_multi_index(alpha) -> MultiIndex:
    a1, a2 = (int(v) for v in alpha)
    if a1 < 0 or a2 < 0:
        raise ConfigurationError(f"multi-index components must be >= 0, got ({a1}, {a2})")
    return MultiIndex(a1, a2)


@dataclass(frozen=True)
class Hierarchy:
    """P_a1 = P0 tau^a1 particles, N_a2 = N0 tau^a2 time steps"""
    P0: int = 5
    N0: int = 4
    tau: int = 2

    def __post_init__(self):
        if self.P0 < 1 or self.N0 < 1 or self.tau < 2:
            raise ConfigurationError(
                f"hierarchy needs P0 >= 1, N0 >= 1, tau >= 2 (got {self.P0}, {self.N0}, {self.tau})"
            )

    def P(self, a1: int) -> int:
        return self.P0 * self.tau ** int(a1)

    def N(self, a2: int) -> int:
        return self.N0 * self.tau ** int(a2)

    def cost_weights(self, alpha, gamma1: float = 1.0, gamma2: float = 1.0) -> Tuple[float, float]:
        """(outer, inner) work per sample: N^g2 P^(1+g1) and N^g2 P^g1"""
        P, N = float(self.P(alpha[0])), float(self.N(alpha[1]))
        return N ** gamma2 * P ** (1.0 + gamma1), N ** gamma2 * P ** gamma1


class Quantity(Enum):
    DIFFERENCE = "difference"   # mixed difference over both parameters
    LEVEL = "level"             # G at alpha only
    DIAGONAL = "diagonal"       # G[(l, l)] - GG[(l-1, l-1)]


# =============================================================================
# ONE OUTER SAMPLE
# =============================================================================

def _corner(model, bundles: Sequence[NoiseBundle], P, N, paths: PathNoise, control, observable, fast):
    acc = np.zeros(paths.M)
    for b in bundles:
        law = simulate_law(model, b, P, N, fast=fast)
        res = simulate_decoupled(model, law, control, paths, N, fast=fast)
        acc = acc + observable(res.terminal) * res.likelihood
    return acc / len(bundles)


def mixed_difference_batch(model: ModelSpec, hierarchy: Hierarchy, alpha, control: Optional[ControlField],
                           observable: Observable, bundle: NoiseBundle, paths: PathNoise,
                           antithetic: bool = True, quantity: Quantity = Quantity.DIFFERENCE,
                           fast: bool = True) -> np.ndarray:
    """
    Values of the chosen quantity for every path in ``paths`` sharing one
    law noise ``bundle``; both must already be at (P_a1, N_a2)
    """
    a1, a2 = as_multi_index(alpha)
    tau = hierarchy.tau
    P, N = hierarchy.P(a1), hierarchy.N(a2)
    if bundle.P != P or bundle.n_fine != N or paths.n_fine != N:
        raise ConfigurationError(
            f"noise at (P={bundle.P}, N={bundle.n_fine}, paths N={paths.n_fine}) "
            f"does not match alpha=({a1}, {a2}) -> (P={P}, N={N})"
        )

    def groups(b: NoiseBundle) -> List[NoiseBundle]:
        parts = split_groups(b, tau)
        return parts if antithetic else parts[:1]

    fine = _corner(model, [bundle], P, N, paths, control, observable, fast)
    if quantity is Quantity.LEVEL:
        return fine

    if quantity is Quantity.DIAGONAL:
        if a1 != a2:
            raise ConfigurationError(f"diagonal differences need a1 == a2, got ({a1}, {a2})")
        if a1 == 0:
            return fine
        cb, cp = bundle.coarsened(tau), paths.coarsened(tau)
        return fine - _corner(model, groups(cb), P // tau, N // tau, cp, control, observable, fast)

    particle_coarse = 0.0
    if a1 > 0:
        particle_coarse = _corner(model, groups(bundle), P // tau, N, paths, control, observable, fast)

    time_coarse = 0.0
    both_coarse = 0.0
    if a2 > 0:
        cb, cp = bundle.coarsened(tau), paths.coarsened(tau)
        time_coarse = _corner(model, [cb], P, N // tau, cp, control, observable, fast)
        if a1 > 0:
            both_coarse = _corner(model, groups(cb), P // tau, N // tau, cp, control, observable, fast)

    return (fine - particle_coarse) - (time_coarse - both_coarse)


def _prepare_noise(model, hierarchy, alpha, key_outer, key_inner, bundle, path_noise):
    P, N = hierarchy.P(alpha[0]), hierarchy.N(alpha[1])
    if bundle is None:
        bundle = draw_bundle(key_outer, model, P, N)
    else:
        bundle = bundle.restricted(P, N, hierarchy.tau)
    if path_noise is None:
        path_noise = draw_paths(key_inner, model, 1, N)
    else:
        path_noise = path_noise.restricted(N, hierarchy.tau)
    return bundle, path_noise


def sample_mixed_difference(model: ModelSpec, hierarchy: Hierarchy, alpha, control: Optional[ControlField],
                            observable: Observable, key_outer: StreamKey, key_inner: StreamKey,
                            antithetic: bool = True, *, bundle: Optional[NoiseBundle] = None,
                            path_noise: Optional[PathNoise] = None, fast: bool = True) -> float:
    """
    One realization of the mixed difference at alpha

    ``bundle``/``path_noise`` override the keyed draws with finer shared
    noise; they are cut down to the first P_a1 particles and coarsened
    level by level to N_a2 steps, which nests every alpha in one draw.
    """
    alpha = as_multi_index(alpha)
    bundle, path_noise = _prepare_noise(model, hierarchy, alpha, key_outer, key_inner, bundle, path_noise)
    values = mixed_difference_batch(model, hierarchy, alpha, control, observable, bundle,
                                    path_noise, antithetic=antithetic, fast=fast)
    return float(values[0])


def sample_level_difference(model: ModelSpec, hierarchy: Hierarchy, level: int, control: Optional[ControlField],
                            observable: Observable, key_outer: StreamKey, key_inner: StreamKey,
                            *, bundle: Optional[NoiseBundle] = None, path_noise: Optional[PathNoise] = None,
                            fast: bool = True) -> float:
    """One realization of G[(l, l)] - GG[(l-1, l-1)]"""
    alpha = MultiIndex(level, level)
    bundle, path_noise = _prepare_noise(model, hierarchy, alpha, key_outer, key_inner, bundle, path_noise)
    values = mixed_difference_batch(model, hierarchy, alpha, control, observable, bundle,
                                    path_noise, quantity=Quantity.DIAGONAL, fast=fast)
    return float(values[0])


# =============================================================================
# DOUBLE-LOOP STATISTICS
# =============================================================================

def outer_key(master: StreamKey, alpha, m1: int) -> StreamKey:
    return master.child(alpha=tuple(alpha), m1=int(m1), m2=None)


def inner_key(master: StreamKey, alpha, m1: int) -> StreamKey:
    role = StreamRole.INNER_PATH if master.role is StreamRole.OUTER_LAW else master.role
    return master.child(alpha=tuple(alpha), m1=int(m1), m2=0, role=role)


def _outer_block(model, hierarchy, alpha, control, observable, M2, master_key,
                 quantity, antithetic, fast, m1_values) -> np.ndarray:
    P, N = hierarchy.P(alpha[0]), hierarchy.N(alpha[1])
    rows = np.empty((len(m1_values), M2))
    for row, m1 in enumerate(m1_values):
        bundle = draw_bundle(outer_key(master_key, alpha, m1), model, P, N)
        paths = draw_paths(inner_key(master_key, alpha, m1), model, M2, N)
        rows[row] = mixed_difference_batch(model, hierarchy, alpha, control, observable, bundle, paths,
                                           antithetic=antithetic, quantity=quantity, fast=fast)
    return rows


def sample_outer_values(model: ModelSpec, hierarchy: Hierarchy, alpha, control: Optional[ControlField],
                        observable: Observable, M1: int, M2: int, master_key: StreamKey,
                        antithetic: bool = True, quantity: Quantity = Quantity.DIFFERENCE,
                        n_jobs: int = 1, fast: bool = True) -> np.ndarray:
    """
    [M1, M2] array of samples; row m1 uses one law noise and M2 paths

    Rows depend only on their own stream keys, so the result is identical
    for any worker count.
    """
    alpha = as_multi_index(alpha)
    m1_all = np.arange(M1)
    if n_jobs == 1 or M1 == 1:
        return _outer_block(model, hierarchy, alpha, control, observable, M2, master_key,
                            quantity, antithetic, fast, m1_all)
    n_chunks = min(M1, 4 * abs(n_jobs) if n_jobs > 0 else M1)
    chunks = [c for c in np.array_split(m1_all, n_chunks) if len(c)]
    blocks = Parallel(n_jobs=n_jobs)(
        delayed(_outer_block)(model, hierarchy, alpha, control, observable, M2, master_key,
                              quantity, antithetic, fast, chunk)
        for chunk in chunks
    )
    return np.vstack(blocks)


@dataclass(frozen=True, eq=False)
class MixedDiffStats:
    """Double-loop statistics of one multi-index"""
    alpha: MultiIndex
    mean: float
    V1: float
    V2: float
    m1_used: int
    m2_used: int
    model_cost: float
    wall_time: Optional[float]
    P: int
    N: int
    inner_means: np.ndarray = field(repr=False)
    inner_vars: np.ndarray = field(repr=False)
    flags: Tuple[str, ...] = ()

    @property
    def estimator_variance(self) -> float:
        """V1 / M1 + V2 / (M1 M2)"""
        return self.V1 / self.m1_used + self.V2 / (self.m1_used * self.m2_used)

    @property
    def std_error(self) -> float:
        return float(np.sqrt(self.estimator_variance))

    def truncated(self, m1: int) -> "MixedDiffStats":
        """Statistics recomputed on the first m1 outer samples"""
        if not 1 <= m1 <= self.m1_used:
            raise ValueError(f"m1 must lie in [1, {self.m1_used}], got {m1}")
        return _stats_from_moments(self.alpha, self.inner_means[:m1], self.inner_vars[:m1], self.m2_used,
                                   self.P, self.N, wall_time=None,
                                   model_cost=self.model_cost * m1 / self.m1_used,
                                   extra_flags=tuple(f for f in self.flags if f == "single_inner"))


def _stats_from_moments(alpha, inner_means, inner_vars, M2, P, N, wall_time, model_cost,
                        extra_flags=()) -> MixedDiffStats:
    flags = list(extra_flags)
    M1 = inner_means.size
    mean = float(np.mean(inner_means))
    if M1 >= 2:
        V1 = float(np.var(inner_means, ddof=1))
    else:
        V1 = 0.0
        flags.append("single_outer")
    V2 = float(np.mean(inner_vars))
    if V1 < 0.0 or V2 < 0.0:
        flags.append("negative_variance_clamped")
        V1, V2 = max(V1, 0.0), max(V2, 0.0)
    return MixedDiffStats(
        alpha=MultiIndex(*alpha), mean=mean, V1=V1, V2=V2, m1_used=int(M1), m2_used=int(M2),
        model_cost=float(model_cost), wall_time=wall_time, P=int(P), N=int(N),
        inner_means=inner_means, inner_vars=inner_vars, flags=tuple(dict.fromkeys(flags)),
    )


def stats_from_values(alpha, values: np.ndarray, hierarchy: Hierarchy, wall_time: Optional[float] = None,
                      gamma1: float = 1.0, gamma2: float = 1.0) -> MixedDiffStats:
    """Mean, V1 (variance of inner means) and V2 (mean inner variance) of an [M1, M2] sample array"""
    alpha = as_multi_index(alpha)
    values = np.asarray(values, dtype=float)
    M1, M2 = values.shape
    inner_means = values.mean(axis=1)
    flags = []
    if M2 >= 2:
        inner_vars = values.var(axis=1, ddof=1)
    else:
        inner_vars = np.zeros(M1)
        flags.append("single_inner")
    w_outer, w_inner = hierarchy.cost_weights(alpha, gamma1, gamma2)
    cost = M1 * w_outer + M1 * M2 * w_inner
    return _stats_from_moments(alpha, inner_means, inner_vars, M2, hierarchy.P(alpha.a1),
                               hierarchy.N(alpha.a2), wall_time, cost, extra_flags=tuple(flags))


def estimate_stats(model: ModelSpec, hierarchy: Hierarchy, alpha, control: Optional[ControlField],
                   observable: Observable, M1: int, M2: int, master_key: StreamKey, *,
                   antithetic: bool = True, quantity: Quantity = Quantity.DIFFERENCE,
                   n_jobs: int = 1, fast: bool = True, gamma1: float = 1.0,
                   gamma2: float = 1.0) -> MixedDiffStats:
    """
    Double-loop estimate at alpha: M1 laws, each shared by M2 decoupled paths

    model_cost follows the naive work model M1 N P^2 + M1 M2 N P for
    gamma1 = gamma2 = 1 whatever kernel shortcut the simulation used.
    """
    alpha = as_multi_index(alpha)
    if M1 < 1 or M2 < 1:
        raise ConfigurationError(f"need M1 >= 1 and M2 >= 1, got M1={M1}, M2={M2}")
    start = time.perf_counter()
    values = sample_outer_values(model, hierarchy, alpha, control, observable, M1, M2, master_key,
                                 antithetic=antithetic, quantity=quantity, n_jobs=n_jobs, fast=fast)
    stats = stats_from_values(alpha, values, hierarchy, wall_time=time.perf_counter() - start,
                              gamma1=gamma1, gamma2=gamma2)
    logger.debug(
        f"alpha=({alpha.a1},{alpha.a2}) {quantity.value}: mean={stats.mean:.4e} "
        f"V1={stats.V1:.3e} V2={stats.V2:.3e} M1={M1} M2={M2} cost={stats.model_cost:.3e}"
    )
    return stats


def squared_cov_curve(stats: MixedDiffStats, m1_values: Iterable[int]) -> np.ndarray:
    """(V1/m + V2/(m M2)) / mean^2 over prefixes of m outer samples"""
    out = []
    for m in m1_values:
        s = stats.truncated(int(m))
        out.append(s.estimator_variance / s.mean ** 2 if s.mean != 0 else np.inf)
    return np.asarray(out)


# =============================================================================
# VARIANCE REDUCTION
# =============================================================================

@dataclass(frozen=True)
class VarianceRatio:
    ratio: float
    var_is: float
    var_mc: float
    stats_is: MixedDiffStats
    stats_mc: MixedDiffStats
    degenerate: bool = False


def variance_ratio(model: ModelSpec, hierarchy: Hierarchy, alpha, control: Optional[ControlField],
                   observable: Observable, M1: int, M2: int, key: StreamKey,
                   quantity: Quantity = Quantity.DIFFERENCE, n_jobs: int = 1) -> VarianceRatio:
    """Estimator variance with the control over the same estimator without it, same stream keys"""
    stats_is = estimate_stats(model, hierarchy, alpha, control, observable, M1, M2, key,
                              quantity=quantity, n_jobs=n_jobs)
    stats_mc = estimate_stats(model, hierarchy, alpha, None, observable, M1, M2, key,
                              quantity=quantity, n_jobs=n_jobs)
    var_is, var_mc = stats_is.estimator_variance, stats_mc.estimator_variance
    if var_mc == 0.0:
        logger.warning(f"variance ratio at alpha={tuple(alpha)}: plain estimator variance is zero")
        return VarianceRatio(float("nan"), var_is, var_mc, stats_is, stats_mc, degenerate=True)
    return VarianceRatio(var_is / var_mc, var_is, var_mc, stats_is, stats_mc)
