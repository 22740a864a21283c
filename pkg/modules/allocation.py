"""
Optimal outer/inner sample counts per multi-index.

Minimising  sum_a M1_a w1_a + M1_a M2_a w2_a  subject to

    sum_a V1_a / M1_a + V2_a / (M1_a M2_a) <= (theta TOL_r qoi / C_nu)^2

with w1 = N^g2 P^(1+g1) (one law) and w2 = N^g2 P^g1 (one path) gives the
closed-form real counts below, which are then rounded up.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Mapping, Tuple

from scipy.special import ndtri

from .errors import AllocationError, ConfigurationError
from .mixed_difference import Hierarchy, MultiIndex, as_multi_index

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampleCount:
    M1: int
    M2: int
    M1_real: float        # pre-ceiling outer count
    M_inner_real: float   # pre-ceiling total inner count M1 * M2


@dataclass(frozen=True)
class Allocation:
    records: Dict[MultiIndex, SampleCount]
    theta: float
    tol_r: float
    C_nu: float
    qoi_estimate: float

    def __iter__(self):
        return iter(sorted(self.records))

    def __getitem__(self, alpha) -> SampleCount:
        return self.records[MultiIndex(*alpha)]

    @property
    def variance_budget(self) -> float:
        """(theta TOL_r qoi / C_nu)^2"""
        return (self.theta * self.tol_r * self.qoi_estimate / self.C_nu) ** 2

    def as_list(self):
        return [
            {"alpha1": a.a1, "alpha2": a.a2, "M1": r.M1, "M2": r.M2,
             "M1_real": r.M1_real, "M_inner_real": r.M_inner_real}
            for a, r in sorted(self.records.items())
        ]


def normal_quantile(p: float) -> float:
    return float(ndtri(p))


def confidence_constant(nu: float) -> float:
    """C_nu, the (1 - nu/2) quantile of the standard normal"""
    if not 0.0 < nu < 1.0:
        raise ConfigurationError(f"nu must lie in (0, 1), got {nu}")
    return normal_quantile(1.0 - nu / 2.0)


def _variances(stats) -> Tuple[float, float]:
    if isinstance(stats, tuple):
        return float(stats[0]), float(stats[1])
    return float(stats.V1), float(stats.V2)


def optimal_samples(stats: Mapping, hierarchy: Hierarchy, tol_r: float, theta: float, nu: float,
                    qoi: float, gamma1: float = 1.0, gamma2: float = 1.0) -> Allocation:
    """
    Sample counts meeting the statistical part of the error budget

    ``stats`` maps alpha to anything with V1/V2 attributes or a (V1, V2)
    tuple.  When every variance is zero each index gets one sample.
    """
    if not 0.0 < theta < 1.0:
        raise ConfigurationError(f"theta must lie in (0, 1), got {theta}")
    if tol_r <= 0:
        raise ConfigurationError(f"tol_r must be positive, got {tol_r}")
    if qoi == 0 or not math.isfinite(qoi):
        raise AllocationError(f"cannot form a relative constraint around qoi={qoi}")

    c_nu = confidence_constant(nu)
    scale = (c_nu / (theta * tol_r * qoi)) ** 2

    entries = {}
    for alpha, s in stats.items():
        v1, v2 = _variances(s)
        if v1 < 0 or v2 < 0:
            raise AllocationError(f"negative variance at alpha={tuple(alpha)}: V1={v1}, V2={v2}")
        w_outer, w_inner = hierarchy.cost_weights(alpha, gamma1, gamma2)
        entries[as_multi_index(alpha)] = (v1, v2, w_outer, w_inner)

    total = sum(math.sqrt(v1 * wo) + math.sqrt(v2 * wi) for v1, v2, wo, wi in entries.values())
    if total == 0.0:
        logger.warning("all variances are zero; allocating one sample per index")

    records = {}
    for alpha, (v1, v2, wo, wi) in entries.items():
        m1_real = scale * math.sqrt(v1 / wo) * total
        inner_real = scale * math.sqrt(v2 / wi) * total
        M1 = max(1, math.ceil(m1_real))
        M2 = max(1, math.ceil(inner_real / M1))
        records[alpha] = SampleCount(M1=M1, M2=M2, M1_real=m1_real, M_inner_real=inner_real)

    return Allocation(records=records, theta=theta, tol_r=tol_r, C_nu=c_nu, qoi_estimate=float(qoi))


def allocation_variance(allocation: Allocation, stats: Mapping) -> float:
    """sum_a V1 / M1 + V2 / (M1 M2) for the integer counts"""
    out = 0.0
    for alpha, rec in allocation.records.items():
        v1, v2 = _variances(stats[alpha])
        out += v1 / rec.M1 + v2 / (rec.M1 * rec.M2)
    return out


def work_model(allocation: Allocation, hierarchy: Hierarchy, gamma1: float = 1.0, gamma2: float = 1.0) -> float:
    """sum_a M1 N^g2 P^(1+g1) + M1 M2 N^g2 P^g1"""
    total = 0.0
    for alpha, rec in allocation.records.items():
        w_outer, w_inner = hierarchy.cost_weights(alpha, gamma1, gamma2)
        total += rec.M1 * w_outer + rec.M1 * rec.M2 * w_inner
    return total


def real_work(counts: Mapping, hierarchy: Hierarchy, gamma1: float = 1.0, gamma2: float = 1.0) -> float:
    """Work of real-valued (M1, M1*M2) counts, for checking the closed form"""
    total = 0.0
    for alpha, (m1, m_inner) in counts.items():
        w_outer, w_inner = hierarchy.cost_weights(alpha, gamma1, gamma2)
        total += m1 * w_outer + m_inner * w_inner
    return total
