"""
Output writers: per-alpha stats CSV, variance-ratio CSV and JSON
documents, each stamped with provenance.  Files are byte-identical for
identical config and seed unless timing is recorded.
"""

import json
import logging
import math
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, Mapping, Optional, Union

import numpy as np
import pandas as pd

from content.csv_columns import RATIO_COLUMNS, STATS_COLUMNS

from .provenance import provenance_line

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def _write_csv(df: pd.DataFrame, path: Union[str, Path], stamp: Dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(provenance_line(stamp) + "\n")
        df.to_csv(fh, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"Wrote {len(df)} rows to {path}")
    return path


def stats_frame(stats: Mapping, record_timing: bool = False, seed: Optional[int] = None) -> pd.DataFrame:
    rows = []
    for alpha in sorted(stats):
        s = stats[alpha]
        rows.append({
            "alpha1": alpha[0],
            "alpha2": alpha[1],
            "P": s.P,
            "N": s.N,
            "M1": s.m1_used,
            "M2": s.m2_used,
            "seed": seed,
            "mean": s.mean,
            "V1": s.V1,
            "V2": s.V2,
            "std_error": s.std_error,
            "model_cost": s.model_cost,
            "wall_time": s.wall_time if record_timing else None,
            "flags": "|".join(s.flags),
        })
    return pd.DataFrame(rows, columns=list(STATS_COLUMNS))


def write_stats_csv(stats: Mapping, path: Union[str, Path], stamp: Dict, record_timing: bool = False) -> Path:
    """Seed column comes from the stamp's master_seed"""
    return _write_csv(stats_frame(stats, record_timing, stamp.get("master_seed")), path, stamp)


def write_ratio_csv(rows: Iterable[Dict], path: Union[str, Path], stamp: Dict) -> Path:
    return _write_csv(pd.DataFrame(list(rows), columns=list(RATIO_COLUMNS)), path, stamp)


def read_stats_csv(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def _plain(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None"""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, Fraction):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def write_json(document: Dict, path: Union[str, Path], stamp: Dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = dict(_plain(document))
    body["provenance"] = _plain(stamp)
    path.write_text(json.dumps(body, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def read_json(path: Union[str, Path]) -> Dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
