"""
Profit-based multi-index sets.

Rates describe how the mixed-difference mean, the two variance terms and
the cost change with alpha:

    |E[dG_a]| ~ tau^(-b.a),  V1 ~ tau^(-w.a),  V2 ~ tau^(-s.a),
    outer cost ~ tau^((1+g1) a1 + g2 a2),  inner cost ~ tau^(g1 a1 + g2 a2)

The optimal sets are the level sets of bias contribution per unit work;
after normalisation they read {a : exp(d1 . a) + exp(d2 . a) <= L}.
This module also carries the asymptotic complexity constants and an
exhaustive optimality check on a small finite universe.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from numbers import Real
from typing import FrozenSet, Iterable, List, Mapping, NamedTuple, Optional, Set, Tuple

import numpy as np

from .errors import ConfigurationError, DegenerateRatesError, InadmissibleRatesError
from .mixed_difference import Hierarchy, MixedDiffStats, MultiIndex, as_multi_index

logger = logging.getLogger(__name__)

TIE_TOLERANCE = 1e-9
SUBSET_BLOCK_BITS = 16
RATE_NAMES = ("b1", "b2", "w1", "w2", "s1", "s2", "g1", "g2")


@dataclass(frozen=True)
class RateSet:
    b1: Real
    b2: Real
    w1: Real
    w2: Real
    s1: Real
    s2: Real
    g1: Real = 1
    g2: Real = 1
    tau: int = 2
    QB: Optional[float] = None

    def __post_init__(self):
        for name in RATE_NAMES:
            if not math.isfinite(float(getattr(self, name))):
                raise ConfigurationError(f"rate {name} is not finite")
        if self.tau < 2:
            raise ConfigurationError(f"tau must be >= 2, got {self.tau}")

    def as_dict(self) -> dict:
        out = {k: float(getattr(self, k)) for k in RATE_NAMES}
        out["tau"] = int(self.tau)
        out["QB"] = None if self.QB is None else float(self.QB)
        return out

    def values(self):
        """
        The eight rates, as Fractions when every rate is an int or a
        Fraction (exact arithmetic), else as floats
        """
        raw = [getattr(self, k) for k in RATE_NAMES]
        if all(isinstance(v, (int, Fraction)) for v in raw):
            return [Fraction(v) for v in raw], True
        return [float(v) for v in raw], False

    @classmethod
    def from_dict(cls, data: Mapping) -> "RateSet":
        known = set(RATE_NAMES) | {"tau", "QB"}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown rate keys: {sorted(unknown)}")
        return cls(**{k: data[k] for k in data if k in known})


class WeightVectors(NamedTuple):
    delta_bar: Tuple[Real, Real]
    delta_bbar: Tuple[Real, Real]
    admissible: bool
    violations: Tuple[str, ...] = ()


def _numerators(b1, b2, w1, w2, s1, s2, g1, g2):
    bar = ((1 + g1 - w1) / 2 + b1, (g2 - w2) / 2 + b2)
    bbar = ((g1 - s1) / 2 + b1, (g2 - s2) / 2 + b2)
    return bar, bbar


def compute_weights(rates: RateSet) -> WeightVectors:
    """
    Normalised exponents of the optimal index set

    Exact (Fractions) when every rate is an int or a Fraction.
    """
    values, _ = rates.values()
    bar, bbar = _numerators(*values)
    c_bar, c_bbar = bar[0] + bar[1], bbar[0] + bbar[1]
    if c_bar == 0 or c_bbar == 0:
        raise DegenerateRatesError("weight normaliser is zero")

    violations = []
    if not (bar[0] > 0 and bbar[0] > 0):
        violations.append(f"2*b1 >= max(w1 - 1, s1) - g1 fails "
                          f"(2*b1={float(2 * rates.b1):g}, max(w1-1, s1)-g1="
                          f"{float(max(rates.w1 - 1, rates.s1) - rates.g1):g})")
    if not (bar[1] > 0 and bbar[1] > 0):
        violations.append(f"2*b2 >= max(w2, s2) - g2 fails "
                          f"(2*b2={float(2 * rates.b2):g}, max(w2, s2)-g2="
                          f"{float(max(rates.w2, rates.s2) - rates.g2):g})")

    return WeightVectors(
        delta_bar=(bar[0] / c_bar, bar[1] / c_bar),
        delta_bbar=(bbar[0] / c_bbar, bbar[1] / c_bbar),
        admissible=not violations,
        violations=tuple(violations),
    )


# =============================================================================
# INDEX SETS
# =============================================================================

@dataclass(frozen=True)
class IndexSet:
    members: FrozenSet[MultiIndex]
    level: float = float("nan")

    def __contains__(self, alpha) -> bool:
        return MultiIndex(*alpha) in self.members

    def __iter__(self):
        return iter(sorted(self.members))

    def __len__(self) -> int:
        return len(self.members)

    @classmethod
    def of(cls, alphas: Iterable, level: float = float("nan")) -> "IndexSet":
        return cls(frozenset(as_multi_index(a) for a in alphas), level)

    def is_downward_closed(self) -> bool:
        return all(
            (a.a1 == 0 or a.shifted(-1, 0) in self.members) and (a.a2 == 0 or a.shifted(0, -1) in self.members)
            for a in self.members
        )

    @property
    def max_levels(self) -> Tuple[int, int]:
        if not self.members:
            return (0, 0)
        return max(a.a1 for a in self.members), max(a.a2 for a in self.members)

    def as_list(self) -> List[List[int]]:
        return [[a.a1, a.a2] for a in self]


def _index_weight(delta_bar, delta_bbar, a1: int, a2: int) -> float:
    return (math.exp(float(delta_bar[0]) * a1 + float(delta_bar[1]) * a2)
            + math.exp(float(delta_bbar[0]) * a1 + float(delta_bbar[1]) * a2))


def build_index_set(delta_bar, delta_bbar, L: float) -> IndexSet:
    """{a in N^2 : exp(delta_bar . a) + exp(delta_bbar . a) <= L}"""
    if not all(float(c) > 0 for c in (*delta_bar, *delta_bbar)):
        raise InadmissibleRatesError([f"weights must be positive, got {delta_bar}, {delta_bbar}"])
    if L < 2:
        raise ConfigurationError(f"L must be >= 2 for a nonempty index set, got {L}")

    members = set()
    a1 = 0
    while _index_weight(delta_bar, delta_bbar, a1, 0) <= L:
        a2 = 0
        while _index_weight(delta_bar, delta_bbar, a1, a2) <= L:
            members.add(MultiIndex(a1, a2))
            a2 += 1
        a1 += 1
    return IndexSet(frozenset(members), float(L))


def boundary(index_set: IndexSet) -> Set[MultiIndex]:
    """Members with a forward neighbour outside the set"""
    if not index_set.members:
        raise ConfigurationError("boundary of an empty index set")
    return {a for a in index_set.members
            if a.shifted(1, 0) not in index_set.members or a.shifted(0, 1) not in index_set.members}


# =============================================================================
# PROFITS
# =============================================================================

class ProfitVectors(NamedTuple):
    rho: Tuple[float, float]
    g_bar: Tuple[float, float]
    g_bbar: Tuple[float, float]


def profit_vectors(rates: RateSet) -> ProfitVectors:
    lt = math.log(rates.tau)
    b1, b2, w1, w2, s1, s2, g1, g2 = (float(getattr(rates, k)) for k in RATE_NAMES)
    return ProfitVectors(
        rho=(lt * b1, lt * b2),
        g_bar=(lt * (1 + g1 - w1) / 2, lt * (g2 - w2) / 2),
        g_bbar=(lt * (g1 - s1) / 2, lt * (g2 - s2) / 2),
    )


def _dot(v, alpha) -> float:
    return v[0] * alpha[0] + v[1] * alpha[1]


def _error_weight(rho, alpha) -> float:
    return math.exp(-_dot(rho, alpha))


def _work_weight(g_bar, g_bbar, alpha) -> float:
    return math.exp(_dot(g_bar, alpha)) + math.exp(_dot(g_bbar, alpha))


def profit(alpha, rates: RateSet) -> float:
    """Bias contribution per unit work predicted by the rates"""
    rho, g_bar, g_bbar = profit_vectors(rates)
    alpha = as_multi_index(alpha)
    return _error_weight(rho, alpha) / _work_weight(g_bar, g_bbar, alpha)


class Profit(NamedTuple):
    value: float
    degenerate: bool = False


def empirical_profit(alpha, stats: MixedDiffStats, hierarchy: Hierarchy) -> Profit:
    """|mean| / (sqrt(V1 P^2 N) + sqrt(V2 P N)) from measured statistics"""
    alpha = as_multi_index(alpha)
    P, N = float(hierarchy.P(alpha.a1)), float(hierarchy.N(alpha.a2))
    denom = math.sqrt(stats.V1 * P * P * N) + math.sqrt(stats.V2 * P * N)
    if denom == 0.0:
        logger.warning(f"empirical profit at alpha=({alpha.a1},{alpha.a2}) has zero denominator")
        return Profit(math.inf, degenerate=True)
    return Profit(abs(stats.mean) / denom)


class EmpiricalSet(NamedTuple):
    index_set: IndexSet
    downward_closed: bool


def empirical_index_set(stats: Mapping, hierarchy: Hierarchy, v: float) -> EmpiricalSet:
    """Indices whose measured profit reaches v"""
    chosen = [a for a, s in stats.items() if empirical_profit(a, s, hierarchy).value >= v]
    index_set = IndexSet.of(chosen, level=v)
    return EmpiricalSet(index_set, index_set.is_downward_closed())


# =============================================================================
# WORK AND BIAS PROXIES
# =============================================================================

def work_proxy(index_set: Iterable, rates: RateSet) -> float:
    """sum over the set of exp(g_bar . a) + exp(g_bbar . a)"""
    _, g_bar, g_bbar = profit_vectors(rates)
    return sum(_work_weight(g_bar, g_bbar, a) for a in index_set)


def work_proxy_isotropic(index_set: Iterable, rates: RateSet) -> float:
    """sum over the set of exp(lambda . a) with lambda = g_bar + rho"""
    rho, g_bar, _ = profit_vectors(rates)
    lam = (g_bar[0] + rho[0], g_bar[1] + rho[1])
    return sum(math.exp(_dot(lam, a)) for a in index_set)


def bias_proxy(index_set: Iterable, rates: RateSet, universe: Iterable) -> float:
    """sum of exp(-rho . a) over the universe minus the set"""
    rho, _, _ = profit_vectors(rates)
    inside = {as_multi_index(a) for a in index_set}
    return sum(_error_weight(rho, a) for a in map(as_multi_index, universe) if a not in inside)


# =============================================================================
# COMPLEXITY CONSTANTS
# =============================================================================

@dataclass(frozen=True)
class ComplexityReport:
    chi11: float
    chi12: float
    chi21: float
    chi22: float
    eta1: float
    eta2: float
    varsigma: float
    varrho: float
    Psi: float
    condition_holds: bool
    predicted_exponent: float
    predicted_log_power: float
    e1: int = 1
    e2: int = 1
    aleph1: int = 1
    aleph2: int = 1
    d1: int = 0
    d2: int = 0
    degenerate: Optional[str] = None

    def as_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            out[name] = float(value) if isinstance(value, Fraction) else value
        return out


class _Degenerate(Exception):
    pass


def _ties(a, b) -> bool:
    if isinstance(a, (Fraction, int)) and isinstance(b, (Fraction, int)):
        return a == b
    return abs(float(a) - float(b)) <= TIE_TOLERANCE


def _div(num, den, name):
    if den == 0:
        raise _Degenerate(name)
    return num / den


def complexity_constants(rates: RateSet) -> ComplexityReport:
    """
    Work exponent offset, log power and the dominance condition of the
    optimal method

    The chi/eta constants share the factor log(tau), which cancels in every
    ratio; ratios are computed without it (exactly for rational rates) and
    the reported chi/eta include it.
    """
    (b1, b2, w1, w2, s1, s2, g1, g2), exact = rates.values()
    bar, bbar = _numerators(b1, b2, w1, w2, s1, s2, g1, g2)
    c_bar, c_bbar = bar[0] + bar[1], bbar[0] + bbar[1]

    A1, A2 = 1 + g1 - w1, g2 - w2      # outer-variance exponents
    B1, B2 = g1 - s1, g2 - s2          # inner-variance exponents
    try:
        chi11 = c_bar * max(_div(A1, A1 + 2 * b1, "chi11[1]"), _div(A2, A2 + 2 * b2, "chi11[2]"))
        chi12 = c_bar * max(_div(B1, A1 + 2 * b1, "chi12[1]"), _div(B2, A2 + 2 * b2, "chi12[2]"))
        chi21 = c_bbar * max(_div(A1, B1 + 2 * b1, "chi21[1]"), _div(A2, B2 + 2 * b2, "chi21[2]"))
        chi22 = c_bbar * max(_div(B1, B1 + 2 * b1, "chi22[1]"), _div(B2, B2 + 2 * b2, "chi22[2]"))
        eta1 = c_bar * min(_div(2 * b1, A1 + 2 * b1, "eta1[1]"), _div(2 * b2, A2 + 2 * b2, "eta1[2]"))
        eta2 = c_bbar * min(_div(2 * b1, B1 + 2 * b1, "eta2[1]"), _div(2 * b2, B2 + 2 * b2, "eta2[2]"))

        e1 = 2 if _ties(_div(A1, 2 * b1, "e1[1]"), _div(A2, 2 * b2, "e1[2]")) else 1
        e2 = 2 if _ties(_div(B1, 2 * b1, "e2[1]"), _div(B2, 2 * b2, "e2[2]")) else 1
        aleph1 = 2 if _ties(_div(B1, A1 + 2 * b1, "aleph1[1]"), _div(B2, A2 + 2 * b2, "aleph1[2]")) else 1
        aleph2 = 2 if _ties(_div(A1, B1 + 2 * b1, "aleph2[1]"), _div(A2, B2 + 2 * b2, "aleph2[2]")) else 1

        c11 = _div(chi11, eta1, "chi11/eta1")
        c12 = _div(chi12, eta1, "chi12/eta1")
        c21 = _div(chi21, eta2, "chi21/eta2")
        c22 = _div(chi22, eta2, "chi22/eta2")

        Psi = min(
            _div(1 + g1, A1 + 2 * b1, "Psi[1]"),
            _div(g2, A2 + 2 * b2, "Psi[2]"),
            _div(1 + g1, B1 + 2 * b1, "Psi[3]"),
            _div(g2, B2 + 2 * b2, "Psi[4]"),
        )
    except _Degenerate as exc:
        logger.warning(f"complexity constants degenerate: zero denominator in {exc}")
        nan = float("nan")
        return ComplexityReport(nan, nan, nan, nan, nan, nan, nan, nan, nan, False, nan, nan,
                                degenerate=str(exc))

    d1 = int(_ties(w1, 1 + g1)) + int(_ties(w2, g2))
    d2 = int(_ties(s1, g1)) + int(_ties(s2, g2))

    zero = Fraction(0) if exact else 0.0
    varsigma = min(max(zero, c11, c12), max(zero, c21, c22))

    if _ties(varsigma, zero):
        varrho = max(d1, d2)
    elif _ties(varsigma, c11):
        varrho = (e1 - 1) * (1 + c11)
    elif _ties(varsigma, c12):
        varrho = (aleph1 - 1) + (e1 - 1) * c12
    elif _ties(varsigma, c21):
        varrho = (aleph2 - 1) + (e2 - 1) * c21
    else:
        varrho = (e2 - 1) * (1 + c22)

    lt = math.log(rates.tau)
    return ComplexityReport(
        chi11=float(chi11) * lt, chi12=float(chi12) * lt, chi21=float(chi21) * lt,
        chi22=float(chi22) * lt, eta1=float(eta1) * lt, eta2=float(eta2) * lt,
        varsigma=varsigma, varrho=varrho, Psi=Psi,
        condition_holds=bool(Psi <= 1 + varsigma),
        predicted_exponent=2 + 2 * varsigma,
        predicted_log_power=2 * varrho,
        e1=e1, e2=e2, aleph1=aleph1, aleph2=aleph2, d1=d1, d2=d2,
    )


class IsotropicComplexity(NamedTuple):
    exponent: float
    log_power: float
    condition_holds: bool


def isotropic_complexity(s: float, gamma: float, b: float, multilevel: bool = False) -> IsotropicComplexity:
    """
    Complexity regime when bias, variance and cost rates agree in both directions

    The multilevel baseline refines P and N together, so its cost rate is
    2 gamma per level instead of gamma.
    """
    threshold = 1 + (2 * gamma if multilevel else gamma)
    if _ties(s, threshold):
        exponent, log_power = 2, 2
    elif s > threshold:
        exponent, log_power = 2, 0
    else:
        exponent, log_power = 2 + (threshold - s) / b, 0
    condition = 2 * b >= (min(s, threshold) if multilevel else s)
    return IsotropicComplexity(exponent, log_power, bool(condition))


# =============================================================================
# OPTIMALITY ORACLE
# =============================================================================

def _universe(grid_bound: int) -> List[MultiIndex]:
    return [MultiIndex(a1, a2) for a1, a2 in product(range(grid_bound + 1), repeat=2)]


def level_set(rho, g_bar, g_bbar, grid_bound: int, v: float) -> FrozenSet[MultiIndex]:
    """Universe indices whose profit is at least v"""
    return frozenset(a for a in _universe(grid_bound)
                     if _error_weight(rho, a) / _work_weight(g_bar, g_bbar, a) >= v)


def _subset_sums(values: np.ndarray) -> np.ndarray:
    """sums[mask] = sum of values[j] over the bits j set in mask"""
    sums = np.zeros(1)
    for v in values:
        sums = np.concatenate([sums, sums + v])
    return sums


def find_dominating_set(candidate: Iterable, rho, g_bar, g_bbar, grid_bound: int,
                        rel_tol: float = 1e-12) -> Optional[FrozenSet[MultiIndex]]:
    """
    Exhaustive search over all subsets of {0..grid_bound}^2 for a set with
    strictly less work and no more bias than ``candidate``

    Work and bias are additive over members. The low SUBSET_BLOCK_BITS
    members are tabulated once; the remaining members are walked one high
    mask at a time, so memory stays at 2^SUBSET_BLOCK_BITS entries.
    """
    universe = _universe(grid_bound)
    if len(universe) > 25:
        raise ConfigurationError(f"grid_bound {grid_bound} gives 2^{len(universe)} subsets; use <= 4")
    work = np.array([_work_weight(g_bar, g_bbar, a) for a in universe])
    err = np.array([_error_weight(rho, a) for a in universe])
    total_err = err.sum()
    work_tol, err_tol = rel_tol * work.sum(), rel_tol * total_err

    n_low = min(len(universe), SUBSET_BLOCK_BITS)
    low_work, low_err = _subset_sums(work[:n_low]), _subset_sums(err[:n_low])
    high_work, high_err = _subset_sums(work[n_low:]), _subset_sums(err[n_low:])
    low_size = low_work.size

    members = {as_multi_index(a) for a in candidate}
    mask = sum(1 << j for j, a in enumerate(universe) if a in members)
    ref_low, ref_high = mask % low_size, mask // low_size
    w_ref = low_work[ref_low] + high_work[ref_high]
    b_ref = total_err - (low_err[ref_low] + high_err[ref_high])

    best, best_work = None, np.inf
    for h in range(high_work.size):
        set_work = low_work + high_work[h]
        bias = total_err - (low_err + high_err[h])
        hits = np.flatnonzero((set_work < w_ref - work_tol) & (bias <= b_ref + err_tol))
        if hits.size == 0:
            continue
        j = int(hits[np.argmin(set_work[hits])])
        if set_work[j] < best_work:
            best, best_work = h * low_size + j, set_work[j]

    if best is None:
        return None
    return frozenset(a for j, a in enumerate(universe) if best >> j & 1)


def check_lemma_optimality(rho, g_bar, g_bbar, grid_bound: int, v: float) -> bool:
    """True iff the profit level set at v is undominated on the finite universe"""
    chosen = level_set(rho, g_bar, g_bbar, grid_bound, v)
    witness = find_dominating_set(chosen, rho, g_bar, g_bbar, grid_bound)
    if witness is not None:
        logger.info(f"level set {sorted(chosen)} dominated by {sorted(witness)}")
    return witness is None
