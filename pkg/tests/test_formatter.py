"""Unit tests for formatter module."""

import pytest

from laa_coexistence.experiments import ComparisonRow, Fig3Point, Fig3Variant, gate_interpretation_report
from laa_coexistence.formatter import (
    PI_HEADER,
    REPORT_HEADER,
    SOLVE_HEADER,
    SWEEP_HEADER,
    VALIDATE_HEADER,
    CsvFormatter,
)
from laa_coexistence.model import ModelParams, build_rate_matrix
from laa_coexistence.simulator import SimStats
from laa_coexistence.solver import solve_direct


@pytest.fixture
def formatter():
    return CsvFormatter()


class TestFormatNumber:
    """Tests for cell rendering."""

    def test_float_precision(self, formatter):
        """Test floats keep six significant digits."""
        assert formatter.format_number(0.2508163265306) == "0.250816"
        assert formatter.format_number(1e-15) == "1e-15"

    def test_int_and_bool(self, formatter):
        """Test integers and booleans."""
        assert formatter.format_number(42) == "42"
        assert formatter.format_number(True) == "true"
        assert formatter.format_number(False) == "false"

    def test_none_is_empty(self, formatter):
        """Test missing values become empty cells."""
        assert formatter.format_number(None) == ""

    def test_custom_precision(self):
        """Test precision is configurable."""
        assert CsvFormatter(precision=3).format_number(0.123456) == "0.123"


class TestFormatTable:
    """Tests for whole tables."""

    def test_line_endings(self, formatter):
        """Test output uses LF line endings only."""
        text = formatter.format_table(("a", "b"), [[1, 0.5], [2, None]])
        assert "\r" not in text
        assert text == "a,b\n1,0.5\n2,\n"

    def test_format_solve(self, formatter):
        """Test the solve row."""
        params = ModelParams(lambda_laa=25, lbt_enabled=False)
        result = solve_direct(build_rate_matrix(params))
        lines = formatter.format_solve("table2", params, result).splitlines()
        assert lines[0] == ",".join(SOLVE_HEADER)
        cells = lines[1].split(",")
        assert cells[0] == "table2"
        assert cells[1] == "25"
        assert float(cells[3]) == pytest.approx(1521 / 5969, abs=1e-6)
        assert cells[6] == "0"

    def test_format_distribution(self, formatter):
        """Test one row per state and a normalized column."""
        result = solve_direct(build_rate_matrix(ModelParams()))
        lines = formatter.format_distribution(result).splitlines()
        assert lines[0] == ",".join(PI_HEADER)
        assert len(lines) == 1 + len(result.states)
        total = sum(float(line.split(",")[4]) for line in lines[1:])
        assert total == pytest.approx(1.0, abs=1e-4)
        assert len(result.states) == 27

    def test_format_simulation_flags(self, formatter):
        """Test flags are joined with semicolons."""
        stats = SimStats(flags=("no_laa_arrivals", "no_wifi_arrivals"))
        text = formatter.format_simulation("x", ModelParams(), stats)
        assert text.splitlines()[1].endswith("no_laa_arrivals;no_wifi_arrivals")

    def test_format_comparison(self, formatter):
        """Test undefined errors become empty cells."""
        row = ComparisonRow("t", 25.0, 0.0, 0.0, 0.0, 0.0, error_pct_laa=None, error_pct_wifi=None,
                            flags=("laa_error_undefined",))
        lines = formatter.format_comparison([row]).splitlines()
        assert lines[0] == ",".join(VALIDATE_HEADER)
        assert lines[1].split(",")[5] == ""

    def test_format_sweep(self, formatter):
        """Test sweep rows name the variant."""
        points = [Fig3Point(Fig3Variant.NEITHER, 2, 0.5, 0.25)]
        assert formatter.format_sweep(points) == ",".join(SWEEP_HEADER) + "\nneither,2,0.5,0.25\n"

    def test_format_report_marks_closest(self, formatter):
        """Test exactly one interpretation is marked as closest per rate."""
        report = gate_interpretation_report(lambdas=[25.0])
        lines = formatter.format_report(report).splitlines()
        assert lines[0] == ",".join(REPORT_HEADER)
        assert sum(line.endswith(",true") for line in lines[1:]) == 1
