# content/help_text.py
"""
Command-line help text
"""

CLI_DESCRIPTION = """
Multi-index double loop Monte Carlo with importance sampling for
rare-event expectations of McKean-Vlasov SDEs (Kuramoto oscillators).
"""

CLI_EPILOG = """
Typical workflow:
  1. solve-control   offline law + KBE solve -> control CSV
  2. pilot           mixed-difference stats on the pilot grid -> stats CSV, rates JSON
  3. plan            weights, index sets and complexity constants from rates JSON
  4. estimate        adaptive multi-index run (or multilevel / single baselines)

Exit codes: 0 success, 1 numerical failure, 2 not converged, 3 configuration error.
"""

SUBCOMMAND_HELP = {
    "solve-control": "Simulate the offline law and solve the control PDE",
    "pilot": "Estimate mixed-difference statistics on the pilot grid and fit rates",
    "estimate": "Run the adaptive multi-index estimator or a baseline",
    "plan": "Weights, index sets and complexity constants for given rates",
    "dump-law": "Write one particle-system trajectory as CSV",
    "ratio": "Variance ratio of the importance-sampled estimator over an alpha grid",
}

FLAG_HELP = {
    "config": "JSON run configuration (defaults to the Kuramoto study)",
    "seed": "master seed for every random stream",
    "threads": "worker cap for the outer-sample fan-out (results do not depend on it)",
    "record_timing": "write wall-clock times (outputs are then no longer byte-identical)",
    "control": "control CSV written by solve-control",
    "no_control": "run without importance sampling",
    "rates": "rates JSON written by pilot",
    "out": "output directory",
    "verbose": "DEBUG logging",
    "quiet": "WARNING logging only",
}
