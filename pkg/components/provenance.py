"""
Provenance stamps embedded in every output file: artifact version,
master seed and config hash.
"""

from typing import Dict, Optional

from modules import __version__

from .config import RunConfig, config_hash

ARTIFACT = "mimc-mvsde"


def provenance(config: RunConfig, command: str, extra: Optional[Dict] = None) -> Dict:
    stamp = {
        "artifact": ARTIFACT,
        "version": __version__,
        "command": command,
        "master_seed": int(config.master_seed),
        "config_hash": config_hash(config),
    }
    if extra:
        stamp.update(extra)
    return stamp


def provenance_line(stamp: Dict) -> str:
    """'# key=value ...' comment line for CSV headers"""
    return "# " + " ".join(f"{k}={stamp[k]}" for k in stamp)
