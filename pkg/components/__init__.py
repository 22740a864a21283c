# components/__init__.py
"""
Components Package - Run Plumbing for the Command-Line Front End
Configuration loading, provenance stamps and output writers
"""

from .config import RunConfig, load_config, apply_overrides, config_hash
from .provenance import provenance, provenance_line
from .outputs import write_stats_csv, write_ratio_csv, write_json, read_json, read_stats_csv

__all__ = [
    'RunConfig',
    'load_config',
    'apply_overrides',
    'config_hash',
    'provenance',
    'provenance_line',
    'write_stats_csv',
    'write_ratio_csv',
    'write_json',
    'read_json',
    'read_stats_csv'
]

__version__ = '1.0.0'
__author__ = 'mimc-mvsde contributors'
