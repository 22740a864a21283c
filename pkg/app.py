# app.py - COMMAND-LINE ENTRY POINT
# Multi-index DLMC with importance sampling for McKean-Vlasov SDEs
# Subcommands: solve-control, pilot, estimate, plan, dump-law, ratio

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

# === IMPORTS FROM PROJECT MODULES ===
from components.config import (RunConfig, apply_overrides, build_adaptive_settings, build_grid,
                               build_hierarchy, build_model, build_observable, build_pilot_settings,
                               config_to_dict, load_config)
from components.outputs import read_json, write_json, write_ratio_csv, write_stats_csv
from components.provenance import provenance, provenance_line
from config_validation import validate_run_config
from content.help_text import CLI_DESCRIPTION, CLI_EPILOG, FLAG_HELP, SUBCOMMAND_HELP
from modules.adaptive import run_adaptive, run_multilevel, single_level_report
from modules.control import ControlField, control_from_value, load_control, save_control, solve_kbe
from modules.errors import (ConfigurationError, DegenerateRatesError, InadmissibleRatesError, MimcError,
                            RateFitError)
from modules.index_sets import (RATE_NAMES, RateSet, boundary, build_index_set, complexity_constants,
                                compute_weights)
from modules.mixed_difference import Quantity, estimate_stats, variance_ratio
from modules.particle_system import dump_law, simulate_law
from modules.randomness import StreamKey, StreamRole, draw_bundle
from modules.rates import fit_rates, pilot_grid

logger = logging.getLogger(__name__)

# === EXIT CODES ===
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_NOT_CONVERGED = 2
EXIT_CONFIG = 3


# =============================================================================
# HELPERS
# =============================================================================

def _setup_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _resolve_config(args) -> RunConfig:
    config = load_config(args.config)
    config = apply_overrides(
        config,
        seed=args.seed,
        threads=args.threads,
        tol=getattr(args, "tol", None),
        theta=getattr(args, "theta", None),
        nu=getattr(args, "nu", None),
        mode=getattr(args, "mode", None),
        K=getattr(args, "K", None),
        coupling=getattr(args, "coupling", None),
        observable=getattr(args, "observable", None),
    )
    ok, report = validate_run_config(config, str(args.config or "defaults"))
    for warning in report['warnings']:
        logger.warning(f"config: {warning}")
    if not ok:
        raise ConfigurationError("; ".join(report['errors']))
    return config


def _load_control(args) -> Optional[ControlField]:
    if getattr(args, "no_control", False):
        logger.info("Importance sampling disabled by --no-control")
        return None
    if getattr(args, "control", None):
        control = load_control(args.control)
        logger.info(f"Using control from {args.control}")
        return control
    logger.info("Running without importance sampling control")
    return None


def _control_label(args) -> str:
    return args.control if getattr(args, "control", None) else "none"


def _parse_rate(value):
    if isinstance(value, str):
        return Fraction(value)
    return value


def load_rates(path) -> RateSet:
    """Rates JSON as written by ``pilot`` (or a plain object of rates); strings like '3/2' stay exact"""
    data = read_json(path)
    data = data.get("rates", data)
    data = {k: v for k, v in data.items() if k != "provenance"}
    parsed = {k: (_parse_rate(v) if k in RATE_NAMES else v) for k, v in data.items()}
    return RateSet.from_dict(parsed)


def _exact(value) -> str:
    return str(value) if isinstance(value, (Fraction, int)) else repr(float(value))


# =============================================================================
# SUBCOMMANDS
# =============================================================================

def cmd_solve_control(args, config: RunConfig) -> int:
    model, observable = build_model(config), build_observable(config)
    g = config.control_grid
    key = StreamKey(config.master_seed, role=StreamRole.CONTROL_LAW)
    logger.info(f"Offline law: P={g.law_particles}, N={g.law_steps}")
    law = simulate_law(model, draw_bundle(key, model, g.law_particles, g.law_steps), g.law_particles, g.law_steps)
    value = solve_kbe(model, law, build_grid(config), observable, floor=g.floor)
    control = control_from_value(value, model, law, clip=g.clip)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stamp = provenance(config, "solve-control")
    save_control(control, out / "control.csv", provenance=provenance_line(stamp))
    write_json({
        "grid": config_to_dict(config)["control_grid"],
        "law_particles": g.law_particles,
        "law_steps": g.law_steps,
        "stream": key.as_dict(),
        "control_range": [float(control.zeta.min()), float(control.zeta.max())],
    }, out / "control.json", stamp)
    return EXIT_OK


def cmd_pilot(args, config: RunConfig) -> int:
    model, observable, hierarchy = build_model(config), build_observable(config), build_hierarchy(config)
    control = _load_control(args)
    p = config.pilot
    m1, m2 = p.rate_samples
    key = StreamKey(config.master_seed, role=StreamRole.PILOT)

    stats = {}
    grid = pilot_grid(p.axis_range)
    logger.info(f"Pilot over {len(grid)} multi-indices with M1={m1}, M2={m2}")
    for alpha in grid:
        stats[alpha] = estimate_stats(model, hierarchy, alpha, control, observable, m1, m2, key,
                                      antithetic=config.adaptive.antithetic, n_jobs=config.threads)

    out = Path(args.out)
    stamp = provenance(config, "pilot", {"control": _control_label(args)})
    write_stats_csv(stats, out / "pilot_stats.csv", stamp, record_timing=args.record_timing)

    try:
        fit = fit_rates(stats, hierarchy.tau, p.axis_range, first_level=p.fit_first_level)
    except RateFitError as exc:
        logger.error(f"rate fit failed, rates.json not written: {exc}")
        return EXIT_FAILURE
    write_json(fit.as_dict(), out / "rates.json", stamp)
    return EXIT_OK


def cmd_estimate(args, config: RunConfig) -> int:
    model, observable, hierarchy = build_model(config), build_observable(config), build_hierarchy(config)
    control = _load_control(args)
    a = config.adaptive

    if a.mode == "single":
        report = single_level_report(model, a.single_P, a.single_N, a.single_M1, a.single_M2, control,
                                     observable, config.master_seed, nu=a.nu, n_jobs=config.threads)
    elif a.mode == "multilevel":
        report = run_multilevel(model, hierarchy, control, observable, a.tol_r, a.theta, a.nu,
                                build_pilot_settings(config), config.master_seed,
                                settings=build_adaptive_settings(config), n_jobs=config.threads)
    else:
        if not args.rates:
            raise ConfigurationError("adaptive mode needs --rates (from the pilot subcommand)")
        report = run_adaptive(model, hierarchy, control, observable, load_rates(args.rates), a.tol_r,
                              a.theta, a.nu, build_pilot_settings(config), config.master_seed,
                              settings=build_adaptive_settings(config), n_jobs=config.threads)

    out = Path(args.out)
    stamp = provenance(config, "estimate", {"mode": a.mode, "control": _control_label(args)})
    document = report.as_dict(include_timing=args.record_timing)
    document["config"] = config_to_dict(config)
    write_json(document, out / "report.json", stamp)
    write_stats_csv(report.per_alpha_stats, out / "estimate_stats.csv", stamp, record_timing=args.record_timing)

    logger.info(f"Estimate: {report.estimate:.6e} (eps_b={report.rel_bias_est:.3e}, "
                f"eps_s={report.rel_stat_err_est:.3e}, converged={report.converged})")
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_plan(args, config: RunConfig) -> int:
    rates = load_rates(args.rates)
    weights = compute_weights(rates)
    if not weights.admissible:
        raise InadmissibleRatesError(list(weights.violations))

    sets = []
    for L in args.L:
        index_set = build_index_set(weights.delta_bar, weights.delta_bbar, L)
        sets.append({
            "L": L,
            "size": len(index_set),
            "max_levels": list(index_set.max_levels),
            "index_set": index_set.as_list(),
            "boundary": [list(a) for a in sorted(boundary(index_set))],
        })

    complexity = complexity_constants(rates)
    write_json({
        "rates": rates.as_dict(),
        "delta_bar": list(weights.delta_bar),
        "delta_bbar": list(weights.delta_bbar),
        "delta_bar_exact": [_exact(v) for v in weights.delta_bar],
        "delta_bbar_exact": [_exact(v) for v in weights.delta_bbar],
        "index_sets": sets,
        "complexity": complexity.as_dict(),
        "complexity_exact": {k: _exact(getattr(complexity, k)) for k in ("varsigma", "varrho", "Psi")},
    }, Path(args.out) / "plan.json", provenance(config, "plan"))
    logger.info(f"  ✓ varsigma={complexity.varsigma}, varrho={complexity.varrho}, Psi={complexity.Psi}")
    return EXIT_OK


def cmd_dump_law(args, config: RunConfig) -> int:
    model = build_model(config)
    g = config.control_grid
    P = args.P or g.law_particles
    N = args.N or g.law_steps
    key = StreamKey(config.master_seed, role=StreamRole.CONTROL_LAW)
    law = simulate_law(model, draw_bundle(key, model, P, N), P, N)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dump_law(law, out / "law.csv", header=provenance_line(provenance(config, "dump-law", {"P": P, "N": N})))
    return EXIT_OK


def cmd_ratio(args, config: RunConfig) -> int:
    model, observable, hierarchy = build_model(config), build_observable(config), build_hierarchy(config)
    control = _load_control(args)
    if control is None:
        raise ConfigurationError("ratio needs --control")
    key = StreamKey(config.master_seed, role=StreamRole.OUTER_LAW)

    rows = []
    for a1 in range(args.max_level + 1):
        for a2 in range(args.max_level + 1):
            for quantity in (Quantity.LEVEL, Quantity.DIFFERENCE):
                r = variance_ratio(model, hierarchy, (a1, a2), control, observable, args.m1, args.m2, key,
                                   quantity=quantity, n_jobs=config.threads)
                rows.append({
                    "alpha1": a1, "alpha2": a2, "quantity": quantity.value,
                    "ratio": r.ratio, "var_is": r.var_is, "var_mc": r.var_mc,
                    "mean_is": r.stats_is.mean, "mean_mc": r.stats_mc.mean,
                    "degenerate": int(r.degenerate),
                })
                logger.info(f"  alpha=({a1},{a2}) {quantity.value}: R={r.ratio:.3e}")
    write_ratio_csv(rows, Path(args.out) / "variance_ratio.csv", provenance(config, "ratio"))
    return EXIT_OK


COMMANDS = {
    "solve-control": cmd_solve_control,
    "pilot": cmd_pilot,
    "estimate": cmd_estimate,
    "plan": cmd_plan,
    "dump-law": cmd_dump_law,
    "ratio": cmd_ratio,
}


# =============================================================================
# ARGUMENT PARSING
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help=FLAG_HELP["config"])
    common.add_argument("--seed", type=int, default=None, help=FLAG_HELP["seed"])
    common.add_argument("--threads", type=int, default=None, help=FLAG_HELP["threads"])
    common.add_argument("--record-timing", action="store_true", default=False, help=FLAG_HELP["record_timing"])
    common.add_argument("--out", type=str, default="results", help=FLAG_HELP["out"])
    common.add_argument("--K", type=float, default=None, help="observable threshold")
    common.add_argument("--coupling", type=float, default=None, help="Kuramoto interaction strength (0 decouples)")
    common.add_argument("--observable", choices=("mollified", "constant"), default=None)
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help=FLAG_HELP["verbose"])
    verbosity.add_argument("--quiet", action="store_true", help=FLAG_HELP["quiet"])

    parser = argparse.ArgumentParser(prog="mimc-mvsde", description=CLI_DESCRIPTION, epilog=CLI_EPILOG,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name):
        return sub.add_parser(name, parents=[common], help=SUBCOMMAND_HELP[name])

    def add_control(p):
        group = p.add_mutually_exclusive_group()
        group.add_argument("--control", type=str, default=None, help=FLAG_HELP["control"])
        group.add_argument("--no-control", action="store_true", help=FLAG_HELP["no_control"])

    add("solve-control")

    p = add("pilot")
    add_control(p)

    p = add("estimate")
    add_control(p)
    p.add_argument("--rates", type=str, default=None, help=FLAG_HELP["rates"])
    p.add_argument("--mode", choices=("adaptive", "multilevel", "single"), default=None)
    p.add_argument("--tol", type=float, default=None, help="relative tolerance TOL_r")
    p.add_argument("--theta", type=float, default=None, help="bias/statistical split")
    p.add_argument("--nu", type=float, default=None, help="confidence parameter")

    p = add("plan")
    p.add_argument("--rates", type=str, required=True, help=FLAG_HELP["rates"])
    p.add_argument("--L", type=float, nargs="+", default=[2.0, 3.0, 5.0, 10.0])

    p = add("dump-law")
    p.add_argument("--P", type=int, default=None, help="particles (default: offline law size)")
    p.add_argument("--N", type=int, default=None, help="time steps (default: offline law size)")

    p = add("ratio")
    add_control(p)
    p.add_argument("--max-level", type=int, default=2)
    p.add_argument("--m1", type=int, default=200)
    p.add_argument("--m2", type=int, default=100)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose, args.quiet)

    try:
        config = _resolve_config(args)
        return COMMANDS[args.command](args, config)
    except (ConfigurationError, InadmissibleRatesError, DegenerateRatesError) as exc:
        logger.error(f"configuration error: {exc}")
        return EXIT_CONFIG
    except MimcError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return EXIT_FAILURE
    except OSError as exc:
        logger.error(f"I/O error: {exc}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
