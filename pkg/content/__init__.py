# content/__init__.py
"""
Content Package - Help Text and Output Schemas
"""

from .help_text import CLI_DESCRIPTION, CLI_EPILOG, SUBCOMMAND_HELP, FLAG_HELP
from .csv_columns import STATS_COLUMNS, RATIO_COLUMNS

__all__ = [
    'CLI_DESCRIPTION',
    'CLI_EPILOG',
    'SUBCOMMAND_HELP',
    'FLAG_HELP',
    'STATS_COLUMNS',
    'RATIO_COLUMNS'
]

__version__ = '1.0.0'
__author__ = 'mimc-mvsde contributors'
