"""LAA Coexistence - dropping probabilities of LTE-LAA and Wi-Fi on a shared channel.

This package models an LAA cell running listen-before-talk next to Wi-Fi
on one unlicensed channel as a continuous-time Markov chain, solves it for
the LAA and Wi-Fi dropping probabilities, and validates the results with a
discrete-event simulator.

The package is organized into the following modules:

- model: State space, transition gates and the sparse rate matrix
- solver: Direct and iterative stationary solvers, dropping probabilities
- distributions: Holding-time distributions used by the simulator
- simulator: Discrete-event simulator with replications and confidence intervals
- experiments: Validation tables, queue-size sweep and gate-interpretation report
- config: Run configuration files (loading, defaults, CLI overrides)
- formatter: CSV output
- cli: Command-line interface

Basic Usage:
    >>> from laa_coexistence import ModelParams, build_rate_matrix, solve_direct
    >>> result = solve_direct(build_rate_matrix(ModelParams(lambda_laa=50)))
    >>> 0 <= result.p_block_laa <= 1
    True

Or from the command line:
    $ laa-coexist solve -c laa_config.conf

Attributes:
    __version__ (str): Package version number
    __author__ (str): Package author information
"""

__version__ = "1.0.0"
__author__ = "LAA Coexistence Team"

# Public API exports
from laa_coexistence.model import (
    CoexistenceError,
    DomainError,
    ModelParams,
    ParameterError,
    Phase,
    RateMatrix,
    SenseOffRule,
    SystemState,
    ThresholdMode,
    TransitionKind,
    build_rate_matrix,
    enumerate_states,
    gate_open,
    initial_state,
    packet_transitions,
    phase_transitions,
)
from laa_coexistence.solver import (
    ConvergenceError,
    ReducibleChainError,
    SingularSystemError,
    StationaryResult,
    balance_residuals,
    blocking_probabilities,
    recurrent_subspace,
    solve,
    solve_direct,
    solve_iterative,
)
from laa_coexistence.distributions import DistributionSpec, Family, sample
from laa_coexistence.simulator import (
    FastStartMode,
    SimConfig,
    SimStats,
    SimulationError,
    run_replication,
    run_simulation,
    state_occupancy_distance,
)
from laa_coexistence.experiments import (
    ComparisonRow,
    Fig3Variant,
    compare,
    fig3_orderings,
    fig3_sweep,
    gate_interpretation_report,
    table1,
    table2,
)
from laa_coexistence.config import RunConfig, ConfigError, load_config, create_default_config, merge_config
from laa_coexistence.formatter import CsvFormatter

__all__ = [
    'CoexistenceError',
    'DomainError',
    'ModelParams',
    'ParameterError',
    'Phase',
    'RateMatrix',
    'SenseOffRule',
    'SystemState',
    'ThresholdMode',
    'TransitionKind',
    'build_rate_matrix',
    'enumerate_states',
    'gate_open',
    'initial_state',
    'packet_transitions',
    'phase_transitions',
    'ConvergenceError',
    'ReducibleChainError',
    'SingularSystemError',
    'StationaryResult',
    'balance_residuals',
    'blocking_probabilities',
    'recurrent_subspace',
    'solve',
    'solve_direct',
    'solve_iterative',
    'DistributionSpec',
    'Family',
    'sample',
    'FastStartMode',
    'SimConfig',
    'SimStats',
    'SimulationError',
    'run_replication',
    'run_simulation',
    'state_occupancy_distance',
    'ComparisonRow',
    'Fig3Variant',
    'compare',
    'fig3_orderings',
    'fig3_sweep',
    'gate_interpretation_report',
    'table1',
    'table2',
    'RunConfig',
    'ConfigError',
    'load_config',
    'create_default_config',
    'merge_config',
    'CsvFormatter',
]
