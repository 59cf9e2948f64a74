"""Command-line interface for the coexistence tools.

Subcommands:

- solve: stationary analysis of one configuration
- simulate: discrete-event simulation of one configuration
- validate: analytic versus simulated validation tables
- sweep: dropping probabilities against the buffer size
- init: write a default configuration file

Exit codes: 0 success, 1 validation tolerance violated, 2 configuration
error, 3 reducible chain, 4 iterative solver did not converge.
"""

import argparse
import logging
import sys
from typing import Dict, List, Optional

from laa_coexistence.config import (
    ConfigError,
    RunConfig,
    create_default_config,
    load_config,
    merge_config,
    to_model_params,
    to_sim_config,
)
from laa_coexistence.experiments import (
    Fig3Variant,
    acceptance_failures,
    fig3_orderings,
    fig3_sweep,
    gate_interpretation_report,
    table1,
    table1_band_misses,
    table2,
)
from laa_coexistence.formatter import CsvFormatter
from laa_coexistence.model import ParameterError, build_rate_matrix
from laa_coexistence.simulator import SimulationError, run_simulation
from laa_coexistence.solver import (
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE,
    ConvergenceError,
    ReducibleChainError,
    SingularSystemError,
    solve,
)


# Configure logging
logging.basicConfig(
    level=logging.WARNING,
    format='[%(levelname)s] %(message)s',
    stream=sys.stderr
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_CONFIG = 2
EXIT_STRUCTURE = 3
EXIT_CONVERGENCE = 4

DEFAULT_CONFIG_PATH = "laa_config.conf"


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse and return command-line arguments.

    Args:
        argv: Arguments to parse; defaults to sys.argv[1:]

    Returns:
        argparse.Namespace containing parsed arguments
    """
    parser = argparse.ArgumentParser(
        prog='laa-coexist',
        description='Dropping probabilities of LAA and Wi-Fi sharing an unlicensed channel',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  laa-coexist init my_run.conf
  laa-coexist solve -c my_run.conf
  laa-coexist solve -c my_run.conf --method iterative --dump-pi pi.csv
  laa-coexist simulate -c my_run.conf --seed 7 --sessions 200000
  laa-coexist validate --table 2
  laa-coexist sweep --q-from 2 --q-to 10 --out fig3.csv

Configuration:
  Run settings are read from a flat `key = value` file. Missing keys take
  the LBT-with-buffering validation scenario values.
        """
    )

    parser.add_argument(
        '-v', '--verbose',
        action='store_true',
        help='Enable verbose logging'
    )

    subparsers = parser.add_subparsers(dest='command', required=True)

    solve_parser = subparsers.add_parser('solve', help='Solve the Markov chain of one configuration')
    solve_parser.add_argument('-c', '--config', type=str, help='Path to the run configuration file')
    solve_parser.add_argument(
        '--method',
        choices=['direct', 'iterative'],
        default='direct',
        help='Stationary solver (default: direct)'
    )
    solve_parser.add_argument('--dump-pi', type=str, dest='dump_pi', help='Write the stationary distribution to FILE')
    solve_parser.add_argument(
        '--tol', type=float, default=DEFAULT_TOLERANCE,
        help=f'Iterative solver tolerance (default: {DEFAULT_TOLERANCE:g})'
    )
    solve_parser.add_argument(
        '--max-iter', type=int, dest='max_iter', default=DEFAULT_MAX_ITERATIONS,
        help=f'Iterative solver sweep limit (default: {DEFAULT_MAX_ITERATIONS})'
    )

    simulate_parser = subparsers.add_parser('simulate', help='Simulate one configuration')
    simulate_parser.add_argument('-c', '--config', type=str, help='Path to the run configuration file')
    _add_simulation_overrides(simulate_parser)

    validate_parser = subparsers.add_parser('validate', help='Compare analysis and simulation on the validation grids')
    validate_parser.add_argument(
        '--table',
        type=int,
        choices=[1, 2],
        help='Run only the LBT (1) or the no-LBT (2) grid'
    )
    _add_simulation_overrides(validate_parser)
    validate_parser.add_argument(
        '--report', type=str,
        help='Write the gate-interpretation report to FILE when the LBT grid misses the published values'
    )

    sweep_parser = subparsers.add_parser('sweep', help='Dropping probabilities against the buffer size')
    sweep_parser.add_argument('--q-from', type=int, dest='q_from', default=2, help='Smallest buffer size (default: 2)')
    sweep_parser.add_argument('--q-to', type=int, dest='q_to', default=10, help='Largest buffer size (default: 10)')
    sweep_parser.add_argument(
        '--variants',
        type=str,
        default=','.join(v.value for v in Fig3Variant),
        help='Comma-separated variants (default: all four)'
    )
    sweep_parser.add_argument('--out', type=str, help='Write the CSV to FILE instead of standard output')

    init_parser = subparsers.add_parser('init', help='Write a default configuration file')
    init_parser.add_argument(
        'path', nargs='?', default=DEFAULT_CONFIG_PATH,
        help=f'Where to write the file (default: {DEFAULT_CONFIG_PATH})'
    )

    return parser.parse_args(argv)


def _add_simulation_overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--seed', type=int, help='Simulation seed')
    parser.add_argument('--sessions', type=int, help='Arrivals per replication')
    parser.add_argument('--replications', type=int, help='Independent replications')


def _load_run_config(args: argparse.Namespace) -> RunConfig:
    """Load the file named by --config, apply CLI overrides and validate.

    Raises:
        ConfigError: If the file is missing, malformed or invalid
    """
    file_config = None
    if args.config:
        file_config = load_config(args.config)
        if file_config is None:
            raise ConfigError(f"configuration file not found: {args.config}")
        logger.debug(f"Loaded configuration from {args.config}")

    config = merge_config(file_config, args)
    errors = config.validate()
    if errors:
        raise ConfigError("; ".join(errors))
    return config


def _write(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, 'w', newline='') as f:
        f.write(text)
    logger.debug(f"Wrote {path}")


def cmd_solve(args: argparse.Namespace, formatter: CsvFormatter) -> int:
    config = _load_run_config(args)
    params = to_model_params(config)
    matrix = build_rate_matrix(params)

    if args.method == 'iterative':
        result = solve(matrix, 'iterative', tol=args.tol, max_iter=args.max_iter)
    else:
        result = solve(matrix, 'direct')

    if args.dump_pi:
        _write(CsvFormatter(precision=12).format_distribution(result), args.dump_pi)
    _write(formatter.format_solve(config.scenario, params, result), None)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace, formatter: CsvFormatter) -> int:
    config = _load_run_config(args)
    sim_config = to_sim_config(config)
    stats = run_simulation(sim_config)
    _write(formatter.format_simulation(config.scenario, sim_config.params, stats), None)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace, formatter: CsvFormatter) -> int:
    defaults = RunConfig()
    sessions = args.sessions if args.sessions is not None else defaults.sessions
    replications = args.replications if args.replications is not None else defaults.replications
    seed = args.seed if args.seed is not None else defaults.seed
    if sessions <= 0 or replications < 1:
        raise ConfigError("sessions must be positive and replications at least 1")

    tables = [args.table] if args.table else [1, 2]
    rows = []
    failures = []
    for table in tables:
        runner = table1 if table == 1 else table2
        table_rows = runner(sessions=sessions, replications=replications, seed=seed)
        failures.extend(acceptance_failures(table_rows, table))
        rows.extend(table_rows)

        if table == 1:
            misses = table1_band_misses(table_rows)
            if misses:
                for miss in misses:
                    logger.warning(f"LBT analytic value outside the published band: {miss}")
                report = gate_interpretation_report()
                if report.closest is not None:
                    mode, rule = report.closest
                    print(f"Closest gate interpretation: threshold_mode={mode.value}, "
                          f"sense_off_rule={rule.value} (max relative error {report.closest_max_error:.4f})",
                          file=sys.stderr)
                if args.report:
                    _write(formatter.format_report(report), args.report)
                else:
                    sys.stderr.write(formatter.format_report(report))

    _write(formatter.format_comparison(rows), None)

    for failure in failures:
        print(f"Tolerance violated: {failure}", file=sys.stderr)
    return EXIT_TOLERANCE if failures else EXIT_OK


def cmd_sweep(args: argparse.Namespace, formatter: CsvFormatter) -> int:
    try:
        variants = [Fig3Variant(name.strip()) for name in args.variants.split(',') if name.strip()]
    except ValueError as e:
        raise ConfigError(f"unknown variant: {e}")
    if not variants:
        raise ConfigError("at least one variant is required")
    if args.q_from > args.q_to:
        raise ConfigError("--q-from must not exceed --q-to")

    curves = fig3_sweep(range(args.q_from, args.q_to + 1), variants)
    points = [point for variant in variants for point in curves[variant]]
    _write(formatter.format_sweep(points), args.out)

    failing: Dict[str, List[int]] = {}
    for check in fig3_orderings(curves):
        if not check.holds:
            label = check.claim if check.variant is None else f"{check.claim} ({check.variant.value})"
            failing.setdefault(label, []).append(check.queue_size)
    for label, sizes in failing.items():
        logger.warning(f"Ordering '{label}' does not hold at Q={','.join(str(q) for q in sizes)}")
    return EXIT_OK


def cmd_init(args: argparse.Namespace, formatter: CsvFormatter) -> int:
    create_default_config(args.path)
    print(f"Created default configuration file: {args.path}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    'solve': cmd_solve,
    'simulate': cmd_simulate,
    'validate': cmd_validate,
    'sweep': cmd_sweep,
    'init': cmd_init,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point.

    Returns:
        Exit code: 0 for success, non-zero for errors
        - 1: Validation tolerance violated
        - 2: Configuration or parameter error
        - 3: Reducible chain or singular system
        - 4: Iterative solver did not converge
    """
    args = parse_arguments(argv)

    if args.verbose:
        logging.getLogger('laa_coexistence').setLevel(logging.DEBUG)
        logger.debug("Verbose logging enabled")

    formatter = CsvFormatter()
    try:
        return COMMANDS[args.command](args, formatter)
    except (ConfigError, ParameterError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ReducibleChainError, SingularSystemError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_STRUCTURE
    except ConvergenceError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except SimulationError as e:
        print(f"Simulation error: {e}", file=sys.stderr)
        return EXIT_STRUCTURE
    except OSError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == '__main__':
    sys.exit(main())
