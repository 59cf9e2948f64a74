"""CSV formatting of solver, simulator and experiment results.

Every table is comma-separated with LF line endings and floating-point
values printed with a fixed number of significant digits.
"""

import csv
import io
from typing import Any, Iterable, List, Sequence

from laa_coexistence.experiments import ComparisonRow, Fig3Point, InterpretationReport
from laa_coexistence.model import ModelParams
from laa_coexistence.simulator import SimStats
from laa_coexistence.solver import StationaryResult


SOLVE_HEADER = ("scenario", "lambda_laa", "lambda_wifi", "p_block_laa", "p_block_wifi", "residual", "iterations")
PI_HEADER = ("w", "x", "y", "z", "pi")
SIMULATE_HEADER = (
    "scenario", "lambda_laa", "lambda_wifi", "p_drop_laa", "ci_laa", "p_drop_wifi", "ci_wifi",
    "laa_arrivals", "laa_drops", "wifi_arrivals", "wifi_drops", "replications", "flags",
)
VALIDATE_HEADER = (
    "scenario", "lambda_laa", "analytic_laa", "sim_laa", "ci_laa", "error_pct_laa",
    "analytic_wifi", "sim_wifi", "ci_wifi", "error_pct_wifi", "flags",
)
SWEEP_HEADER = ("variant", "Q", "p_block_laa", "p_block_wifi")
REPORT_HEADER = (
    "threshold_mode", "sense_off_rule", "lambda_laa", "p_block_laa", "p_block_wifi",
    "rel_error_laa", "rel_error_wifi", "reducible", "closest",
)


class CsvFormatter:
    """Formats result objects into CSV text.

    Attributes:
        precision: Significant digits of floating-point values

    Example:
        >>> formatter = CsvFormatter()
        >>> formatter.format_number(0.2508163265306)
        '0.250816'
    """

    def __init__(self, precision: int = 6):
        self.precision = precision

    def format_number(self, value: Any) -> str:
        """Render one cell; None becomes an empty cell."""
        if value is None:
            return ""
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, int):
            return str(value)
        if isinstance(value, float):
            return f"{value:.{self.precision}g}"
        return str(value)

    def format_table(self, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        """Render a header and rows as CSV text."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([self.format_number(value) for value in row])
        return buffer.getvalue()

    def format_solve(self, scenario: str, params: ModelParams, result: StationaryResult) -> str:
        return self.format_table(SOLVE_HEADER, [[
            scenario, float(params.lambda_laa), float(params.lambda_wifi),
            result.p_block_laa, result.p_block_wifi, result.residual, result.iterations,
        ]])

    def format_distribution(self, result: StationaryResult) -> str:
        """Full stationary distribution as ``w,x,y,z,pi`` rows."""
        rows: List[List[Any]] = [
            [*state.as_tuple(), float(p)] for state, p in zip(result.states, result.pi)
        ]
        return self.format_table(PI_HEADER, rows)

    def format_simulation(self, scenario: str, params: ModelParams, stats: SimStats) -> str:
        return self.format_table(SIMULATE_HEADER, [[
            scenario, float(params.lambda_laa), float(params.lambda_wifi),
            stats.p_drop_laa, stats.ci_halfwidth_laa, stats.p_drop_wifi, stats.ci_halfwidth_wifi,
            stats.laa_arrivals, stats.laa_drops, stats.wifi_arrivals, stats.wifi_drops,
            stats.replications, ";".join(stats.flags),
        ]])

    def format_comparison(self, rows: Iterable[ComparisonRow]) -> str:
        return self.format_table(VALIDATE_HEADER, [[
            row.scenario, float(row.lambda_laa), row.analytic_laa, row.sim_laa, row.ci_laa, row.error_pct_laa,
            row.analytic_wifi, row.sim_wifi, row.ci_wifi, row.error_pct_wifi, ";".join(row.flags),
        ] for row in rows])

    def format_sweep(self, points: Iterable[Fig3Point]) -> str:
        return self.format_table(SWEEP_HEADER, [[
            point.variant.value, point.queue_size, point.p_block_laa, point.p_block_wifi,
        ] for point in points])

    def format_report(self, report: InterpretationReport) -> str:
        """Gate-interpretation rows; the closest interpretation is marked in the last column."""
        return self.format_table(REPORT_HEADER, [[
            row.threshold_mode.value, row.sense_off_rule.value, float(row.lambda_laa),
            row.p_block_laa, row.p_block_wifi, row.rel_error_laa, row.rel_error_wifi, row.reducible,
            report.closest == (row.threshold_mode, row.sense_off_rule),
        ] for row in report.rows])
