#!/usr/bin/env python3
"""
MIMC-MVSDE - IMPORT VERIFICATION SCRIPT

Run this script to diagnose import and dependency issues before a run.

Usage:
    python test_imports.py
"""

import sys
from pathlib import Path

# Color codes for terminal output
GREEN = '\033[92m'
RED = '\033[91m'
YELLOW = '\033[93m'
BLUE = '\033[94m'
BOLD = '\033[1m'
RESET = '\033[0m'

PACKAGE_FILES = {
    "modules": ["__init__.py", "errors.py", "models.py", "randomness.py", "particle_system.py",
                "decoupled.py", "control.py", "mixed_difference.py", "index_sets.py",
                "allocation.py", "rates.py", "adaptive.py"],
    "components": ["__init__.py", "config.py", "provenance.py", "outputs.py"],
    "content": ["__init__.py", "help_text.py", "csv_columns.py"],
}

SYMBOLS = [
    ("modules.models", "make_kuramoto"),
    ("modules.randomness", "StreamKey"),
    ("modules.particle_system", "simulate_law"),
    ("modules.decoupled", "simulate_decoupled"),
    ("modules.control", "solve_kbe"),
    ("modules.mixed_difference", "estimate_stats"),
    ("modules.index_sets", "compute_weights"),
    ("modules.allocation", "optimal_samples"),
    ("modules.rates", "fit_rates"),
    ("modules.adaptive", "run_adaptive"),
    ("components.config", "load_config"),
    ("config_validation", "validate_run_config"),
    ("app", "main"),
]

REQUIRED_PACKAGES = ['numpy', 'scipy', 'pandas', 'joblib', 'plotly']


def print_header(text):
    """Print colored section header"""
    print(f"\n{BLUE}{BOLD}{'=' * 70}{RESET}")
    print(f"{BLUE}{BOLD}{text:^70}{RESET}")
    print(f"{BLUE}{BOLD}{'=' * 70}{RESET}\n")


def print_check(name, status, message=""):
    """Print a check result"""
    symbol = f"{GREEN}✓{RESET}" if status else f"{RED}✗{RESET}"
    msg = f" - {message}" if message else ""
    print(f"  {symbol} {name:<40}{msg}")


def print_step(num, text):
    """Print a step header"""
    print(f"\n{BOLD}[{num}]{RESET} {text}")


def main():
    """Run all verification checks"""

    print_header("MIMC-MVSDE - IMPORT VERIFICATION")
    all_passed = True
    root = Path(__file__).resolve().parent

    # =========================================================================
    # STEP 1: Environment Check
    # =========================================================================
    print_step(1, "ENVIRONMENT SETUP")

    python_version = f"{sys.version_info.major}.{sys.version_info.minor}.{sys.version_info.micro}"
    python_ok = sys.version_info >= (3, 8)
    print_check("Python Version", python_ok, python_version)
    all_passed &= python_ok

    # =========================================================================
    # STEP 2: File Syntax Check
    # =========================================================================
    print_step(2, "PYTHON SYNTAX VERIFICATION")

    for package, files in PACKAGE_FILES.items():
        for name in files:
            file_path = root / package / name
            label = f"{package}/{name}"
            if not file_path.exists():
                print_check(label, False, "FILE NOT FOUND")
                all_passed = False
                continue
            try:
                compile(file_path.read_text(encoding='utf-8'), str(file_path), 'exec')
                print_check(label, True, "Valid Python syntax")
            except SyntaxError as e:
                print_check(label, False, f"SyntaxError: {e}")
                all_passed = False

    # =========================================================================
    # STEP 3: Python Dependencies
    # =========================================================================
    print_step(3, "PYTHON DEPENDENCIES")

    for package in REQUIRED_PACKAGES:
        try:
            module = __import__(package)
            print_check(package, True, getattr(module, '__version__', "installed"))
        except ImportError:
            print_check(package, False, "NOT INSTALLED")
            all_passed = False

    # =========================================================================
    # STEP 4: Project Imports
    # =========================================================================
    print_step(4, "PROJECT IMPORTS")

    sys.path.insert(0, str(root))
    for module_name, symbol in SYMBOLS:
        label = f"{module_name}.{symbol}"
        try:
            module = __import__(module_name, fromlist=[symbol])
            getattr(module, symbol)
            print_check(label, True)
        except (ImportError, AttributeError) as e:
            print_check(label, False, str(e))
            all_passed = False

    # =========================================================================
    # FINAL RESULT
    # =========================================================================
    print_header("VERIFICATION COMPLETE")

    if all_passed:
        print(f"{GREEN}{BOLD}✓ ALL CHECKS PASSED{RESET}")
        print(f"\nRun the estimator with:")
        print(f"  {BOLD}python app.py --help{RESET}\n")
        return 0
    else:
        print(f"{RED}{BOLD}✗ SOME CHECKS FAILED{RESET}")
        print(f"\n{YELLOW}Recommended Actions:{RESET}")
        print(f"  1. Review the failed checks above")
        print(f"  2. pip install -r requirements.txt")
        print(f"  3. Run this script again to verify\n")
        return 1


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print(f"\n{YELLOW}Interrupted by user{RESET}")
        sys.exit(1)
