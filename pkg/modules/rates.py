"""
Pilot-run fits of the decay rates of |E[dG_a]|, V1 and V2.

For each rate the pilot rows a_other = 0 and a_other = 1 along one axis are
fitted together by least squares in log_tau, with a common slope and one
intercept per row.  Points with non-positive values are excluded and
flagged.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from .errors import RateFitError
from .index_sets import RateSet
from .mixed_difference import MultiIndex

logger = logging.getLogger(__name__)

FIT_TARGETS = {
    "b": lambda s: abs(s.mean),
    "w": lambda s: s.V1,
    "s": lambda s: s.V2,
}


@dataclass(frozen=True)
class FitDetail:
    name: str
    rate: float
    intercepts: Dict[int, float]
    residual: float
    levels: Tuple[int, ...]
    used: Tuple[Tuple[int, int], ...]
    excluded: Tuple[Tuple[int, int], ...] = ()

    def as_dict(self) -> dict:
        return {
            "rate": self.rate,
            "intercepts": {str(k): v for k, v in self.intercepts.items()},
            "residual": self.residual,
            "levels": list(self.levels),
            "used": [list(a) for a in self.used],
            "excluded": [list(a) for a in self.excluded],
        }


@dataclass(frozen=True)
class RateFit:
    rates: RateSet
    fits: Dict[str, FitDetail] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"rates": self.rates.as_dict(), "fits": {k: v.as_dict() for k, v in self.fits.items()}}


def _fit_axis(name: str, stats: Mapping, value_of, axis: int, tau: int,
              levels: Sequence[int], other_levels: Sequence[int]) -> FitDetail:
    rows, ys, used, excluded = [], [], [], []
    for other in other_levels:
        for k in levels:
            alpha = MultiIndex(k, other) if axis == 0 else MultiIndex(other, k)
            if alpha not in stats:
                continue
            value = value_of(stats[alpha])
            if not (value > 0 and math.isfinite(value)):
                excluded.append(tuple(alpha))
                continue
            rows.append((k, other))
            ys.append(math.log(value) / math.log(tau))
            used.append(tuple(alpha))

    if excluded:
        logger.warning(f"rate fit {name}: excluded non-positive points {excluded}")
    if len(ys) < 3:
        raise RateFitError(f"rate fit {name}: only {len(ys)} usable points (need 3)")

    row_ids = sorted({o for _, o in rows})
    design = np.zeros((len(rows), 1 + len(row_ids)))
    for i, (k, other) in enumerate(rows):
        design[i, 0] = k
        design[i, 1 + row_ids.index(other)] = 1.0
    y = np.asarray(ys)
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    residual = float(np.sqrt(np.mean((design @ coef - y) ** 2)))

    return FitDetail(
        name=name,
        rate=float(-coef[0]),
        intercepts={o: float(coef[1 + j]) for j, o in enumerate(row_ids)},
        residual=residual,
        levels=tuple(levels),
        used=tuple(used),
        excluded=tuple(excluded),
    )


def fit_rates(pilot_stats: Mapping, tau: int = 2, axis_range: int = 4, first_level: int = 1,
              other_levels: Sequence[int] = (0, 1), gamma1: float = 1.0, gamma2: float = 1.0) -> RateFit:
    """
    Fit b1, b2 (means), w1, w2 (V1) and s1, s2 (V2) over axis levels
    first_level..axis_range; gamma1, gamma2 are fixed by the cost model
    """
    stats = {MultiIndex(*a): s for a, s in pilot_stats.items()}
    levels = list(range(first_level, axis_range + 1))

    fits: Dict[str, FitDetail] = {}
    for prefix, value_of in FIT_TARGETS.items():
        for axis in (0, 1):
            name = f"{prefix}{axis + 1}"
            fits[name] = _fit_axis(name, stats, value_of, axis, tau, levels, other_levels)
            logger.info(f"  ✓ {name} = {fits[name].rate:.3f} (residual {fits[name].residual:.3f})")

    qb_exponent = fits["b1"].intercepts.get(0, next(iter(fits["b1"].intercepts.values())))
    rates = RateSet(
        b1=fits["b1"].rate, b2=fits["b2"].rate,
        w1=fits["w1"].rate, w2=fits["w2"].rate,
        s1=fits["s1"].rate, s2=fits["s2"].rate,
        g1=gamma1, g2=gamma2, tau=tau,
        QB=float(tau) ** qb_exponent,
    )
    return RateFit(rates=rates, fits=fits)


def pilot_grid(axis_range: int = 4, block: int = 2, other_levels: Sequence[int] = (0, 1)) -> List[MultiIndex]:
    """Multi-indices a pilot needs: the {0..block}^2 seed block plus both axis rows"""
    grid = {MultiIndex(a1, a2) for a1 in range(block + 1) for a2 in range(block + 1)}
    for k in range(axis_range + 1):
        for other in other_levels:
            grid.add(MultiIndex(k, other))
            grid.add(MultiIndex(other, k))
    return sorted(grid)
